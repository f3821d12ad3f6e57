#include <doctest.h>

#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Geometry>

#include "rgrasp/cloud.hpp"
#include "rgrasp/error.hpp"
#include "rgrasp/scenegen.hpp"
#include "support.hpp"

using namespace rgrasp;
using rgrasp::test::Rng;
using rgrasp::test::line_angle_deg;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double lo, double hi) {
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) {
        c.push_back({rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)},
                    {static_cast<int>(i % 640), static_cast<int>(i / 640)});
    }
    return c;
}

std::size_t brute_count(const PointCloud& c, const OrientedBox3D& b) {
    const double t = b.yaw * kPi / 180.0;
    std::size_t n = 0;
    for (const auto& p : c.points) {
        const Eigen::Vector3d d = p - b.center;
        const double lx = std::cos(t) * d.x() + std::sin(t) * d.y();
        const double ly = -std::sin(t) * d.x() + std::cos(t) * d.y();
        n += (std::abs(lx) <= 0.5 * b.extent_x && std::abs(ly) <= 0.5 * b.extent_y &&
              std::abs(d.z()) <= 0.5 * b.extent_z)
                 ? 1
                 : 0;
    }
    return n;
}

// Eigenpairs of the 1/n covariance via LAPACK, ascending as dsyev returns them.
struct Eig {
    std::array<double, 3> values;
    std::array<Eigen::Vector3d, 3> vectors;
};

Eig lapack_eig(const std::vector<Eigen::Vector3d>& pts) {
    long double mean[3] = {0, 0, 0};
    for (const auto& p : pts) {
        for (int k = 0; k < 3; ++k) {
            mean[k] += p[k];
        }
    }
    for (auto& m : mean) {
        m /= static_cast<long double>(pts.size());
    }
    long double cov[3][3] = {};
    for (const auto& p : pts) {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]);
            }
        }
    }
    double a[9];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            a[i * 3 + j] = static_cast<double>(cov[i][j] / static_cast<long double>(pts.size()));
        }
    }
    double w[3];
    const int info = LAPACKE_dsyev(LAPACK_ROW_MAJOR, 'V', 'U', 3, a, 3, w);
    REQUIRE(info == 0);
    Eig e;
    for (int k = 0; k < 3; ++k) {
        e.values[k] = w[k];
        e.vectors[k] = Eigen::Vector3d(a[0 * 3 + k], a[1 * 3 + k], a[2 * 3 + k]);
    }
    return e;
}

std::vector<Eigen::Vector3d> anisotropic_sample(Rng& rng, std::size_t n, const Eigen::Matrix3d& rot,
                                                const Eigen::Vector3d& sd, const Eigen::Vector3d& offset) {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts.push_back(offset + rot * Eigen::Vector3d(rng.normal(sd[0]), rng.normal(sd[1]), rng.normal(sd[2])));
    }
    return pts;
}

Eigen::Matrix3d random_rotation(Rng& rng) {
    Eigen::Quaterniond q(rng.normal(1), rng.normal(1), rng.normal(1), rng.normal(1));
    return q.normalized().toRotationMatrix();
}

void check_frame_invariants(const PrincipalFrame& f) {
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(f.axes[i].norm() - 1.0) < 1e-9);
        for (int j = i + 1; j < 3; ++j) {
            CHECK(std::abs(f.axes[i].dot(f.axes[j])) < 1e-9);
        }
    }
    Eigen::Matrix3d m;
    m << f.axes[0], f.axes[1], f.axes[2];
    CHECK(m.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f.sigma[0] >= f.sigma[1]);
    CHECK(f.sigma[1] >= f.sigma[2]);
    CHECK(f.sigma[2] >= 0.0);
}

// One flat slab filling the middle of a large table, seen from above.
SceneSpec slab_spec(double yaw) {
    SceneSpec s;
    s.seed = 3;
    s.table_x = 0.8;
    s.table_y = 0.6;
    s.point_density = 2e5;
    ObjectSpec o;
    o.shape = Shape::cuboid;
    o.yaw = yaw;
    o.dims = {0.45, 0.35, 0.02};
    o.class_name = "rectangle";
    s.objects.push_back(o);
    return s;
}

}  // namespace

TEST_SUITE("cloud") {

TEST_CASE("point cloud container") {
    PointCloud c;
    CHECK(c.empty());
    CHECK_FALSE(c.organized());
    c.push_back({1, 2, 3}, {4, 5});
    CHECK(c.organized());
    CHECK(c.size() == 1);
    PointCloud u;
    u.push_back({0, 0, 0});
    CHECK_FALSE(u.organized());
}

TEST_CASE("crop examples") {
    Rng rng(1);
    const auto cloud = random_cloud(rng, 1000, 0, 1);
    const OrientedBox3D all({0.5, 0.5, 0.5}, 2, 2, 2, 17);
    const auto whole = crop(cloud, all);
    CHECK(whole.points == cloud.points);
    CHECK(*whole.pixels == *cloud.pixels);
    CHECK(crop(cloud, OrientedBox3D({5, 5, 5}, 1, 1, 1, 0)).empty());

    const OrientedBox3D half({0.25, 0.5, 0.5}, 0.5, 1, 1, 0);
    const auto h = crop(cloud, half);
    CHECK(h.size() == brute_count(cloud, half));
    CHECK(std::abs(static_cast<double>(h.size()) - 500.0) <= 30.0);
    // Order and pixel indices survive.
    REQUIRE(h.organized());
    std::size_t j = 0;
    for (std::size_t i = 0; i < cloud.size() && j < h.size(); ++i) {
        if (cloud.points[i] == h.points[j]) {
            CHECK((*cloud.pixels)[i] == (*h.pixels)[j]);
            ++j;
        }
    }
    CHECK(j == h.size());
}

TEST_CASE("count_in examples") {
    const OrientedBox3D box({0, 0, 0}, 1, 1, 1, 30);
    CHECK(count_in(PointCloud{}, box) == 0);
    PointCloud centered;
    for (int i = 0; i < 25; ++i) {
        centered.push_back({0, 0, 0});
    }
    CHECK(count_in(centered, box) == 25);
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        const auto cloud = random_cloud(rng, 500, -1, 1);
        const OrientedBox3D b({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)},
                              rng.uniform(0.1, 1.5), rng.uniform(0.1, 1.5), rng.uniform(0.1, 1.5), rng.uniform(0, 180));
        CHECK(count_in(cloud, b) == brute_count(cloud, b));
        CHECK(count_in(cloud, b) == crop(cloud, b).size());
    }
}

TEST_CASE("subtract examples and partition property") {
    Rng rng(4);
    const auto cloud = random_cloud(rng, 300, -1, 1);
    CHECK(subtract(cloud, {}).points == cloud.points);
    const std::vector<OrientedBox3D> all = {OrientedBox3D({0, 0, 0}, 5, 5, 5, 0)};
    CHECK(subtract(cloud, all).empty());

    PointCloud ten;
    for (int i = 0; i < 10; ++i) {
        ten.push_back({i < 4 ? 0.1 * i : 5.0 + i, 0, 0});
    }
    const std::vector<OrientedBox3D> one = {OrientedBox3D({0.15, 0, 0}, 0.5, 0.5, 0.5, 0)};
    CHECK(subtract(ten, one).size() == 6);

    for (int round = 0; round < 20; ++round) {
        const OrientedBox3D b({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0}, rng.uniform(0.2, 1),
                              rng.uniform(0.2, 1), rng.uniform(0.2, 1), rng.uniform(0, 180));
        const std::vector<OrientedBox3D> ex = {b};
        const auto in = crop(cloud, b);
        const auto out = subtract(cloud, ex);
        CHECK(in.size() + out.size() == cloud.size());
        for (const auto& p : out.points) {
            CHECK_FALSE(contains3d(b, p));
        }
        CHECK(out.organized());
    }
}

TEST_CASE("pca of points on the x axis") {
    PointCloud line;
    for (int i = 0; i < 20; ++i) {
        line.push_back({0.1 * i - 1.0, 0, 0});
    }
    const auto f = pca(line);
    CHECK((f.primary() - Eigen::Vector3d::UnitX()).norm() < 1e-12);
    CHECK(f.sigma[1] == 0.0);
    CHECK(f.sigma[2] == 0.0);
    CHECK(f.sigma[0] > 0.0);
    check_frame_invariants(f);
}

TEST_CASE("pca degenerate inputs") {
    PointCloud two;
    two.push_back({0, 0, 0});
    two.push_back({1, 0, 0});
    try {
        pca(two);
        FAIL("expected insufficient data");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::insufficient_data);
    }
    PointCloud same;
    for (int i = 0; i < 5; ++i) {
        same.push_back({1, 2, 3});
    }
    const auto f = pca(same);
    CHECK(f.centroid == Eigen::Vector3d(1, 2, 3));
    CHECK(f.sigma[0] == 0.0);
    check_frame_invariants(f);

    // A planar patch: third axis is the plane normal.
    PointCloud plane;
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        plane.push_back({rng.uniform(-1, 1), rng.uniform(-0.3, 0.3), 0.5});
    }
    const auto p = pca(plane);
    check_frame_invariants(p);
    CHECK(std::abs(p.axes[2].z()) == doctest::Approx(1.0));
    CHECK(p.sigma[2] <= 1e-15);
}

TEST_CASE("pca sign convention makes the largest component positive") {
    Rng rng(17);
    for (int i = 0; i < 20; ++i) {
        const auto pts = anisotropic_sample(rng, 500, random_rotation(rng), {3, 1, 0.2}, {0, 0, 0});
        const auto f = pca(pts);
        for (int k = 0; k < 2; ++k) {
            Eigen::Index idx = 0;
            f.axes[k].cwiseAbs().maxCoeff(&idx);
            CHECK(f.axes[k][idx] > 0.0);
        }
        check_frame_invariants(f);
    }
}

TEST_CASE("pca matches the LAPACK eigensolver") {
    Rng rng(23);
    for (int i = 0; i < 10; ++i) {
        const Eigen::Vector3d sd(rng.uniform(1.5, 3), rng.uniform(0.6, 1.2), rng.uniform(0.05, 0.4));
        const auto pts = anisotropic_sample(rng, 10000, random_rotation(rng), sd,
                                            {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)});
        const auto f = pca(pts);
        const auto e = lapack_eig(pts);
        for (int k = 0; k < 3; ++k) {
            CHECK(line_angle_deg(f.axes[k], e.vectors[2 - k]) < 1.0);
            CHECK(std::abs(f.sigma[k] - e.values[2 - k]) <= 1e-9 * e.values[2 - k]);
        }
    }
}

TEST_CASE("pca is equivariant under rigid motions") {
    Rng rng(29);
    for (int i = 0; i < 10; ++i) {
        const auto pts = anisotropic_sample(rng, 2000, random_rotation(rng), {2, 1, 0.3}, {0, 0, 0});
        const Eigen::Matrix3d r = random_rotation(rng);
        const Eigen::Vector3d t(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        std::vector<Eigen::Vector3d> moved;
        for (const auto& p : pts) {
            moved.push_back(r * p + t);
        }
        const auto a = pca(pts);
        const auto b = pca(moved);
        CHECK((b.centroid - (r * a.centroid + t)).norm() < 1e-9);
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector3d ra = r * a.axes[k];
            CHECK(std::min((ra - b.axes[k]).norm(), (ra + b.axes[k]).norm()) < 1e-6);
            CHECK(std::abs(a.sigma[k] - b.sigma[k]) <= 1e-9 * a.sigma[k]);
        }
    }
}

TEST_CASE("percentile interpolates linearly") {
    CHECK(percentile({3, 1, 2}, 50) == 2.0);
    CHECK(percentile({0, 10}, 25) == 2.5);
    CHECK(percentile({5}, 99) == 5.0);
    CHECK(percentile({1, 2, 3, 4, 5}, 0) == 1.0);
    CHECK(percentile({1, 2, 3, 4, 5}, 100) == 5.0);
}

TEST_CASE("lift_box recovers a flat rectangle") {
    const auto spec = slab_spec(0);
    const auto scene = generate(spec);
    const auto box = lift_box(scene.cloud, scene.truth_dets.at(0).box);
    CHECK(std::abs(box.extent_x - 0.45) <= 0.02 * 0.45);
    CHECK(std::abs(box.extent_y - 0.35) <= 0.02 * 0.35);
    CHECK(box.yaw == doctest::Approx(0.0));
    CHECK(box.center.z() == doctest::Approx(0.02).epsilon(1e-9));
    CHECK(box.extent_z == doctest::Approx(0.005).epsilon(1e-9));
    CHECK(std::abs(box.center.x()) < 0.002);
    CHECK(std::abs(box.center.y()) < 0.002);
}

TEST_CASE("lift_box follows a rotated rectangle") {
    const auto spec = slab_spec(30);
    const auto scene = generate(spec);
    REQUIRE(scene.truth_dets.size() == 1);
    CHECK(scene.truth_dets[0].box.theta == doctest::Approx(30.0));
    const auto box = lift_box(scene.cloud, scene.truth_dets[0].box);
    CHECK(std::abs(box.yaw - 30.0) <= 3.0);
    CHECK(std::abs(box.extent_x - 0.45) <= 0.02 * 0.45);
    CHECK(std::abs(box.extent_y - 0.35) <= 0.02 * 0.35);

    // The principal direction of the lifted points agrees with the yaw too.
    const auto pts = crop(scene.cloud, box);
    const auto f = pca(pts);
    const double yaw = normalize_angle_deg(std::atan2(f.primary().y(), f.primary().x()) * 180.0 / kPi);
    CHECK(std::abs(yaw - 30.0) <= 3.0);
}

TEST_CASE("lift_box errors") {
    const auto scene = generate(slab_spec(0));
    try {
        lift_box(scene.cloud, {5000, 5000, 10, 10, 0});
        FAIL("expected insufficient data");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::insufficient_data);
    }
    PointCloud flat;
    flat.points = scene.cloud.points;
    try {
        lift_box(flat, scene.truth_dets[0].box);
        FAIL("expected invalid input");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_input);
    }
    LiftOptions strict;
    strict.min_points = 1000000;
    CHECK_THROWS_AS(lift_box(scene.cloud, scene.truth_dets[0].box, strict), Error);
}

}  // TEST_SUITE
