#include "rgrasp/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <Eigen/Geometry>

#include "rgrasp/error.hpp"

namespace rgrasp {

namespace {

struct Placed {
    const ObjectSpec* spec;
    double c;  // cos(yaw)
    double s;  // sin(yaw)
    double top;
    ConvexPolygon2D footprint;

    Eigen::Vector2d to_world(double lx, double ly) const {
        return {spec->x + c * lx - s * ly, spec->y + s * lx + c * ly};
    }
};

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Cyrus-Beck clip of segment p0-p1 against a convex counterclockwise polygon.
bool segment_hits_polygon(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, const ConvexPolygon2D& poly) {
    double t_lo = 0.0;
    double t_hi = 1.0;
    const Eigen::Vector2d d = p1 - p0;
    const auto& v = poly.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Eigen::Vector2d e = v[(i + 1) % v.size()] - v[i];
        const double f0 = cross2(e, p0 - v[i]);
        const double fd = cross2(e, d);
        if (fd == 0.0) {
            if (f0 < 0.0) {
                return false;
            }
            continue;
        }
        const double t = -f0 / fd;
        if (fd > 0.0) {
            t_lo = std::max(t_lo, t);
        } else {
            t_hi = std::min(t_hi, t);
        }
        if (t_lo > t_hi) {
            return false;
        }
    }
    return true;
}

bool segment_hits_disk(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, const Eigen::Vector2d& c, double r) {
    const Eigen::Vector2d d = p1 - p0;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((c - p0).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (p0 + t * d - c).norm() <= r;
}

bool under_object(const Placed& o, const Eigen::Vector2d& p) {
    if (o.spec->shape == Shape::cylinder) {
        return (p - Eigen::Vector2d(o.spec->x, o.spec->y)).norm() <= 0.5 * o.spec->dims[0];
    }
    return contains2d(object_footprint(*o.spec), p);
}

// True when the line of sight from `p` to the camera passes through object `o`.
bool occluded_by(const Placed& o, const Eigen::Vector3d& p, double cam_h) {
    if (o.top <= p.z()) {
        return false;
    }
    const Eigen::Vector2d p0(p.x(), p.y());
    const Eigen::Vector2d p1 = p0 * ((cam_h - o.top) / (cam_h - p.z()));
    if (o.spec->shape == Shape::cylinder) {
        return segment_hits_disk(p0, p1, {o.spec->x, o.spec->y}, 0.5 * o.spec->dims[0]);
    }
    return segment_hits_polygon(p0, p1, o.footprint);
}

struct RawPoint {
    Eigen::Vector3d p;
    int owner;
};

// Jittered grid over [-sx/2, sx/2] x [-sy/2, sy/2]; calls emit(lx, ly).
template <typename Emit>
void jittered_grid(double sx, double sy, double spacing, std::mt19937_64& rng, Emit emit) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto nx = std::max<long>(1, std::lround(sx / spacing));
    const auto ny = std::max<long>(1, std::lround(sy / spacing));
    const double dx = sx / static_cast<double>(nx);
    const double dy = sy / static_cast<double>(ny);
    for (long j = 0; j < ny; ++j) {
        for (long i = 0; i < nx; ++i) {
            const double lx = -0.5 * sx + (static_cast<double>(i) + unit(rng)) * dx;
            const double ly = -0.5 * sy + (static_cast<double>(j) + unit(rng)) * dy;
            emit(lx, ly);
        }
    }
}

std::array<std::uint8_t, 3> object_color(const ObjectSpec& o) {
    switch (o.shape) {
    case Shape::cuboid: return {200, 60, 40};
    case Shape::cylinder: return {40, 90, 200};
    case Shape::towel_ridge: return {235, 235, 235};
    }
    return {128, 128, 128};
}

}  // namespace

const char* shape_name(Shape s) {
    switch (s) {
    case Shape::cuboid: return "cuboid";
    case Shape::cylinder: return "cylinder";
    case Shape::towel_ridge: return "towel-ridge";
    }
    return "?";
}

Shape parse_shape(const std::string& name) {
    if (name == "cuboid") return Shape::cuboid;
    if (name == "cylinder") return Shape::cylinder;
    if (name == "towel-ridge") return Shape::towel_ridge;
    throw Error(Errc::invalid_spec, "unknown shape '" + name + "'");
}

RotatedBox2D object_footprint(const ObjectSpec& obj) {
    switch (obj.shape) {
    case Shape::cuboid: return {obj.x, obj.y, obj.dims[0], obj.dims[1], obj.yaw};
    case Shape::cylinder: return {obj.x, obj.y, obj.dims[0], obj.dims[0], obj.yaw};
    case Shape::towel_ridge: return {obj.x, obj.y, obj.dims[0], 2.0 * obj.dims[1], obj.yaw};
    }
    return {};
}

double object_height(const ObjectSpec& obj) {
    switch (obj.shape) {
    case Shape::cuboid: return obj.dims[2];
    case Shape::cylinder: return obj.dims[1];
    case Shape::towel_ridge: return obj.dims[1];
    }
    return 0.0;
}

void SceneSpec::validate() const {
    if (!(camera.fx > 0.0) || !(camera.fy > 0.0) || camera.width <= 0 || camera.height <= 0) {
        throw Error(Errc::invalid_spec, "camera intrinsics must be positive");
    }
    if (std::abs(camera.fx - camera.fy) > 1e-9 * camera.fx) {
        throw Error(Errc::invalid_spec, "fx and fy must match so rotated rectangles project to rectangles");
    }
    if (!(table_x > 0.0) || !(table_y > 0.0) || !(point_density > 0.0) || !(noise_sigma >= 0.0)) {
        throw Error(Errc::invalid_spec, "table size and density must be positive, noise non-negative");
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        const int used = o.shape == Shape::cuboid ? 3 : 2;
        for (int k = 0; k < used; ++k) {
            if (!(o.dims[k] > 0.0)) {
                throw Error(Errc::invalid_spec, "object " + std::to_string(i) + " has a non-positive dimension");
            }
        }
        if (!(o.score >= 0.0 && o.score <= 1.0)) {
            throw Error(Errc::invalid_spec, "object " + std::to_string(i) + " score must lie in [0, 1]");
        }
        if (!(object_height(o) < camera_height)) {
            throw Error(Errc::invalid_spec, "object " + std::to_string(i) + " reaches the camera");
        }
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
        for (std::size_t j = i + 1; j < objects.size(); ++j) {
            const double overlap =
                intersection_area(corners(object_footprint(objects[i])), corners(object_footprint(objects[j])));
            if (overlap > 1e-12) {
                throw Error(Errc::invalid_spec, "objects " + std::to_string(i) + " and " + std::to_string(j) +
                                                    " have overlapping footprints");
            }
        }
    }
}

RotatedBox2D project_top_face(const SceneSpec& spec, const ObjectSpec& obj) {
    // The ridge is curved; its mid-height stands in for the face plane.
    const double z = obj.shape == Shape::towel_ridge ? 0.5 * obj.dims[1] : object_height(obj);
    const double depth = spec.camera_height - z;
    const RotatedBox2D fp = object_footprint(obj);
    return {spec.camera.cx + spec.camera.fx * obj.x / depth, spec.camera.cy + spec.camera.fy * obj.y / depth,
            fp.w * spec.camera.fx / depth, fp.h * spec.camera.fy / depth, obj.yaw};
}

Scene generate(const SceneSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const double spacing = 1.0 / std::sqrt(spec.point_density);
    const double cam_h = spec.camera_height;

    std::vector<Placed> placed;
    placed.reserve(spec.objects.size());
    for (const auto& o : spec.objects) {
        const double t = deg2rad(o.yaw);
        placed.push_back({&o, std::cos(t), std::sin(t), object_height(o), corners(object_footprint(o))});
    }

    std::vector<RawPoint> raw;
    for (std::size_t k = 0; k < placed.size(); ++k) {
        const Placed& o = placed[k];
        const auto owner = static_cast<int>(k);
        const auto& d = o.spec->dims;
        switch (o.spec->shape) {
        case Shape::cuboid:
            jittered_grid(d[0], d[1], spacing, rng, [&](double lx, double ly) {
                const Eigen::Vector2d w = o.to_world(lx, ly);
                raw.push_back({{w.x(), w.y(), d[2]}, owner});
            });
            break;
        case Shape::cylinder: {
            const double r = 0.5 * d[0];
            jittered_grid(d[0], d[0], spacing, rng, [&](double lx, double ly) {
                if (lx * lx + ly * ly <= r * r) {
                    const Eigen::Vector2d w = o.to_world(lx, ly);
                    raw.push_back({{w.x(), w.y(), d[1]}, owner});
                }
            });
            break;
        }
        case Shape::towel_ridge: {
            const double r = d[1];
            jittered_grid(d[0], 2.0 * r, spacing, rng, [&](double lx, double ly) {
                const Eigen::Vector2d w = o.to_world(lx, ly);
                raw.push_back({{w.x(), w.y(), std::sqrt(std::max(0.0, r * r - ly * ly))}, owner});
            });
            break;
        }
        }
    }
    jittered_grid(spec.table_x, spec.table_y, spacing, rng, [&](double lx, double ly) {
        const Eigen::Vector2d p(lx, ly);
        if (std::none_of(placed.begin(), placed.end(), [&](const Placed& o) { return under_object(o, p); })) {
            raw.push_back({{lx, ly, 0.0}, -1});
        }
    });

    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);

    Scene scene;
    scene.cloud.pixels.emplace();
    scene.cloud.reserve(raw.size());
    Image8 rgb(spec.camera.width, spec.camera.height);
    DepthImage depth(spec.camera.width, spec.camera.height);
    for (int y = 0; y < rgb.height; ++y) {
        for (int x = 0; x < rgb.width; ++x) {
            std::uint8_t* c = rgb.px(x, y);
            c[0] = c[1] = c[2] = 90;  // background beyond the table patch
        }
    }

    for (const auto& rp : raw) {
        const bool hidden = std::any_of(placed.begin(), placed.end(), [&](const Placed& o) {
            return &o != (rp.owner >= 0 ? &placed[static_cast<std::size_t>(rp.owner)] : nullptr) &&
                   occluded_by(o, rp.p, cam_h);
        });
        if (hidden) {
            continue;
        }
        Eigen::Vector3d p = rp.p;
        if (spec.noise_sigma > 0.0) {
            p.z() += noise(rng);
        }
        const double range = cam_h - p.z();
        const long u = std::lround(spec.camera.cx + spec.camera.fx * p.x() / range);
        const long v = std::lround(spec.camera.cy + spec.camera.fy * p.y() / range);
        if (u < 0 || v < 0 || u >= spec.camera.width || v >= spec.camera.height) {
            continue;
        }
        const PixelIndex px{static_cast<int>(u), static_cast<int>(v)};
        scene.cloud.push_back(p, px);
        scene.owner.push_back(rp.owner);

        double& dz = depth.at(px.u, px.v);
        if (dz == 0.0 || range < dz) {
            dz = range;
            const auto col = rp.owner >= 0 ? object_color(*placed[static_cast<std::size_t>(rp.owner)].spec)
                                           : std::array<std::uint8_t, 3>{240, 240, 240};
            std::copy(col.begin(), col.end(), rgb.px(px.u, px.v));
        }
    }
    scene.gbd = make_gbd(rgb, depth, cam_h - 0.3, cam_h);

    std::set<std::string> names;
    for (const auto& o : spec.objects) {
        if (!o.class_name.empty()) {
            names.insert(o.class_name);
        }
    }
    const std::vector<std::string> class_list(names.begin(), names.end());
    const double pad_z = 6.0 * spec.noise_sigma;
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
        const auto& o = spec.objects[k];
        const double h = object_height(o);
        const RotatedBox2D fp = object_footprint(o);
        scene.truth_boxes3d.emplace_back(Eigen::Vector3d(o.x, o.y, 0.5 * h), fp.w, fp.h, h + pad_z, o.yaw);
        if (o.class_name.empty()) {
            continue;
        }
        Detection det;
        det.class_id = static_cast<int>(
            std::lower_bound(class_list.begin(), class_list.end(), o.class_name) - class_list.begin());
        det.class_name = o.class_name;
        det.score = o.score;
        det.box = project_top_face(spec, o);
        scene.truth_dets.push_back(std::move(det));
        scene.truth_det_object.push_back(k);
    }
    return scene;
}

McEstimate oracle_ariou_mc(const RotatedBox2D& a, const RotatedBox2D& b, std::size_t samples, std::uint64_t seed) {
    if (a.degenerate() || b.degenerate() || samples == 0) {
        return {};
    }
    // Independent containment: rotate the sample into each box frame.
    struct Frame {
        double cx, cy, c, s, hw, hh;
        bool inside(double x, double y) const {
            const double dx = x - cx;
            const double dy = y - cy;
            return std::abs(c * dx + s * dy) <= hw && std::abs(-s * dx + c * dy) <= hh;
        }
    };
    const auto frame_of = [](const RotatedBox2D& r) {
        const double t = r.theta * kPi / 180.0;
        return Frame{r.cx, r.cy, std::cos(t), std::sin(t), 0.5 * r.w, 0.5 * r.h};
    };
    const Frame fa = frame_of(a);
    const Frame fb = frame_of(b);

    double x0 = std::numeric_limits<double>::infinity();
    double y0 = x0;
    double x1 = -x0;
    double y1 = -x0;
    for (const auto* box : {&a, &b}) {
        const Frame f = frame_of(*box);
        const double ex = std::abs(f.c) * f.hw + std::abs(f.s) * f.hh;
        const double ey = std::abs(f.s) * f.hw + std::abs(f.c) * f.hh;
        x0 = std::min(x0, f.cx - ex);
        x1 = std::max(x1, f.cx + ex);
        y0 = std::min(y0, f.cy - ey);
        y1 = std::max(y1, f.cy + ey);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(x0, x1);
    std::uniform_real_distribution<double> uy(y0, y1);
    std::size_t both = 0;
    std::size_t either = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        const bool ina = fa.inside(x, y);
        const bool inb = fb.inside(x, y);
        both += (ina && inb) ? 1 : 0;
        either += (ina || inb) ? 1 : 0;
    }
    if (either == 0) {
        return {};
    }
    const double cosf = std::abs(std::cos((a.theta - b.theta) * kPi / 180.0));
    const double p = static_cast<double>(both) / static_cast<double>(either);
    return {p * cosf, cosf * std::sqrt(p * (1.0 - p) / static_cast<double>(either))};
}

std::vector<std::size_t> oracle_collision(const PointCloud& cloud, std::span<const OrientedBox3D> boxes) {
    std::vector<std::size_t> counts(boxes.size(), 0);
    for (std::size_t b = 0; b < boxes.size(); ++b) {
        const auto& box = boxes[b];
        const Eigen::Matrix3d to_local =
            Eigen::AngleAxisd(box.yaw * kPi / 180.0, Eigen::Vector3d::UnitZ()).toRotationMatrix().transpose();
        const Eigen::Vector3d half(0.5 * box.extent_x, 0.5 * box.extent_y, 0.5 * box.extent_z);
        for (const auto& p : cloud.points) {
            const Eigen::Vector3d local = to_local * (p - box.center);
            bool inside = true;
            for (int k = 0; k < 3; ++k) {
                inside = inside && std::abs(local[k]) <= half[k] + 1e-9 * std::max(1.0, half[k]);
            }
            counts[b] += inside ? 1 : 0;
        }
    }
    return counts;
}

}  // namespace rgrasp
