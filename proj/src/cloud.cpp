#include "rgrasp/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "rgrasp/error.hpp"

namespace rgrasp {

void PointCloud::reserve(std::size_t n) {
    points.reserve(n);
    if (pixels) {
        pixels->reserve(n);
    }
}

void PointCloud::push_back(const Eigen::Vector3d& p) {
    if (pixels) {
        throw Error(Errc::invalid_input, "organized cloud requires a pixel index per point");
    }
    points.push_back(p);
}

void PointCloud::push_back(const Eigen::Vector3d& p, PixelIndex px) {
    if (!pixels) {
        if (!points.empty()) {
            throw Error(Errc::invalid_input, "cannot add pixel indices to an unorganized cloud");
        }
        pixels.emplace();
    }
    points.push_back(p);
    pixels->push_back(px);
}

namespace {

template <typename Keep>
PointCloud filter(const PointCloud& cloud, Keep keep) {
    PointCloud out;
    const bool org = cloud.organized();
    if (org) {
        out.pixels.emplace();
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!keep(cloud.points[i])) {
            continue;
        }
        out.points.push_back(cloud.points[i]);
        if (org) {
            out.pixels->push_back((*cloud.pixels)[i]);
        }
    }
    return out;
}

// Flips `v` so its largest-magnitude component is positive.
void canonical_sign(Eigen::Vector3d& v) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
        if (std::abs(v[k]) > std::abs(v[best])) {
            best = k;
        }
    }
    if (v[best] < 0.0) {
        v = -v;
    }
}

// Unit vector orthogonal to `a`, built from the world axis least aligned
// with it.
Eigen::Vector3d orthogonal_to(const Eigen::Vector3d& a) {
    int k = 0;
    for (int j = 1; j < 3; ++j) {
        if (std::abs(a[j]) < std::abs(a[k])) {
            k = j;
        }
    }
    return a.cross(Eigen::Vector3d::Unit(k)).normalized();
}

constexpr double kRankTolerance = 1e-12;

}  // namespace

PointCloud crop(const PointCloud& cloud, const OrientedBox3D& box) {
    const BoxContainment inside(box);
    return filter(cloud, inside);
}

std::size_t count_in(const PointCloud& cloud, const OrientedBox3D& box) {
    const BoxContainment inside(box);
    return static_cast<std::size_t>(std::count_if(cloud.points.begin(), cloud.points.end(), inside));
}

PointCloud subtract(const PointCloud& cloud, std::span<const OrientedBox3D> exclusions) {
    std::vector<BoxContainment> tests;
    tests.reserve(exclusions.size());
    for (const auto& b : exclusions) {
        tests.emplace_back(b);
    }
    return filter(cloud, [&](const Eigen::Vector3d& p) {
        return std::none_of(tests.begin(), tests.end(), [&](const BoxContainment& t) { return t(p); });
    });
}

PrincipalFrame pca(const PointCloud& cloud) { return pca(std::span<const Eigen::Vector3d>(cloud.points)); }

PrincipalFrame pca(std::span<const Eigen::Vector3d> points) {
    if (points.size() < 3) {
        throw Error(Errc::insufficient_data, "pca needs at least 3 points");
    }
    const double n = static_cast<double>(points.size());

    PrincipalFrame frame;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& p : points) {
        sum += p;
    }
    frame.centroid = sum / n;

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) {
        const Eigen::Vector3d d = p - frame.centroid;
        cov.noalias() += d * d.transpose();
    }
    cov /= n;

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Vector3d& evals = solver.eigenvalues();  // ascending
    const Eigen::Matrix3d& evecs = solver.eigenvectors();
    for (int i = 0; i < 3; ++i) {
        frame.sigma[i] = std::max(0.0, evals[2 - i]);
    }

    const double scale = frame.sigma[0];
    if (!(scale > 0.0)) {
        // All points coincide: no preferred direction.
        frame.sigma = {0.0, 0.0, 0.0};
        return frame;
    }

    Eigen::Vector3d a0 = evecs.col(2).normalized();
    canonical_sign(a0);
    Eigen::Vector3d a1;
    if (frame.sigma[1] <= kRankTolerance * scale) {
        frame.sigma[1] = 0.0;
        frame.sigma[2] = 0.0;
        a1 = orthogonal_to(a0);
    } else {
        a1 = evecs.col(1);
        a1 = (a1 - a1.dot(a0) * a0).normalized();
        if (frame.sigma[2] <= kRankTolerance * scale) {
            frame.sigma[2] = 0.0;
        }
    }
    canonical_sign(a1);
    frame.axes = {a0, a1, a0.cross(a1).normalized()};
    return frame;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw Error(Errc::insufficient_data, "percentile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

OrientedBox3D lift_box(const PointCloud& cloud, const RotatedBox2D& box2d, const LiftOptions& opts) {
    if (!cloud.organized()) {
        throw Error(Errc::invalid_input, "lift_box requires an organized cloud");
    }
    const double yaw = image_angle_to_yaw(box2d.theta);
    const double c = std::cos(deg2rad(yaw));
    const double s = std::sin(deg2rad(yaw));

    std::vector<std::size_t> selected;
    const auto& px = *cloud.pixels;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (contains2d(box2d, Eigen::Vector2d(px[i].u, px[i].v))) {
            selected.push_back(i);
        }
    }

    // Background cut: walk down from the highest point and stop at the first
    // height gap wider than background_gap.
    std::vector<double> heights;
    heights.reserve(selected.size());
    for (const auto i : selected) {
        heights.push_back(cloud.points[i].z());
    }
    double floor_z = -std::numeric_limits<double>::infinity();
    if (opts.background_gap > 0.0 && heights.size() > 1) {
        std::vector<double> sorted = heights;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t k = sorted.size() - 1; k > 0; --k) {
            if (sorted[k] - sorted[k - 1] > opts.background_gap) {
                floor_z = sorted[k];
                break;
            }
        }
    }

    double min_x = std::numeric_limits<double>::infinity();
    double max_x = -min_x;
    double min_y = min_x;
    double max_y = -min_x;
    heights.clear();
    for (const auto i : selected) {
        const auto& p = cloud.points[i];
        if (p.z() < floor_z) {
            continue;
        }
        const double lx = c * p.x() + s * p.y();
        const double ly = -s * p.x() + c * p.y();
        min_x = std::min(min_x, lx);
        max_x = std::max(max_x, lx);
        min_y = std::min(min_y, ly);
        max_y = std::max(max_y, ly);
        heights.push_back(p.z());
    }
    if (heights.size() < opts.min_points) {
        throw Error(Errc::insufficient_data, "lift_box: only " + std::to_string(heights.size()) +
                                                 " points inside the image box (need " +
                                                 std::to_string(opts.min_points) + ")");
    }
    const double z_lo = percentile(heights, opts.low_percentile);
    const double z_hi = percentile(std::move(heights), opts.high_percentile);

    const double mid_x = 0.5 * (min_x + max_x);
    const double mid_y = 0.5 * (min_y + max_y);
    const Eigen::Vector3d center(c * mid_x - s * mid_y, s * mid_x + c * mid_y, 0.5 * (z_lo + z_hi));
    return {center, (max_x - min_x) + opts.padding, (max_y - min_y) + opts.padding, (z_hi - z_lo) + opts.padding,
            yaw};
}

}  // namespace rgrasp
