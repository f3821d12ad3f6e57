#include "rgrasp/rotgeom.hpp"

#include <algorithm>
#include <cmath>

#include "rgrasp/error.hpp"

namespace rgrasp {

namespace {

// Slack on half-extents so that boundary points (including corners produced
// by rotating) test as inside.
double boundary_slack(double half) { return 1e-9 * std::max(1.0, std::abs(half)); }

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

double shoelace(const std::vector<Eigen::Vector2d>& v) {
    if (v.size() < 3) {
        return 0.0;
    }
    double twice = 0.0;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) {
        twice += cross(v[i], v[(i + 1) % n]);
    }
    return 0.5 * twice;
}

// Keeps the part of `poly` on the left of the directed line a->b.
std::vector<Eigen::Vector2d> clip_half_plane(const std::vector<Eigen::Vector2d>& poly,
                                             const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(poly.size() + 2);
    const Eigen::Vector2d edge = b - a;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d& cur = poly[i];
        const Eigen::Vector2d& nxt = poly[(i + 1) % n];
        const double dc = cross(edge, cur - a);
        const double dn = cross(edge, nxt - a);
        if (dc >= 0.0) {
            out.push_back(cur);
        }
        if ((dc >= 0.0) != (dn >= 0.0)) {
            const double t = dc / (dc - dn);
            out.push_back(cur + t * (nxt - cur));
        }
    }
    return out;
}

}  // namespace

double normalize_angle_deg(double deg) {
    double r = std::fmod(deg, 180.0);
    if (r < 0.0) {
        r += 180.0;
    }
    if (r >= 180.0) {  // fmod of tiny negatives can round up to 180
        r = 0.0;
    }
    return r;
}

double ConvexPolygon2D::area() const { return std::max(0.0, shoelace(vertices)); }

ConvexPolygon2D corners(const RotatedBox2D& box) {
    const double t = deg2rad(box.theta);
    const double c = std::cos(t);
    const double s = std::sin(t);
    const double hw = 0.5 * box.w;
    const double hh = 0.5 * box.h;
    const Eigen::Vector2d local[4] = {{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}};
    ConvexPolygon2D poly;
    poly.vertices.reserve(4);
    for (const auto& q : local) {
        poly.vertices.emplace_back(box.cx + c * q.x() - s * q.y(), box.cy + s * q.x() + c * q.y());
    }
    return poly;
}

double intersection_area(const ConvexPolygon2D& a, const ConvexPolygon2D& b) {
    if (a.area() <= 0.0 || b.area() <= 0.0) {
        return 0.0;
    }
    std::vector<Eigen::Vector2d> poly = a.vertices;
    const std::size_t n = b.vertices.size();
    for (std::size_t i = 0; i < n && !poly.empty(); ++i) {
        poly = clip_half_plane(poly, b.vertices[i], b.vertices[(i + 1) % n]);
    }
    return std::max(0.0, shoelace(poly));
}

double iou(const RotatedBox2D& a, const RotatedBox2D& b) {
    if (a.degenerate() || b.degenerate()) {
        return 0.0;
    }
    const double inter = intersection_area(corners(a), corners(b));
    if (inter <= 0.0) {
        return 0.0;
    }
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double ariou(const RotatedBox2D& a, const RotatedBox2D& b) {
    const double base = iou(a, b);
    if (base <= 0.0) {
        return 0.0;
    }
    return base * std::abs(std::cos(deg2rad(a.theta - b.theta)));
}

RotatedBox2D expand(const RotatedBox2D& box, double factor_w, double factor_h) {
    if (!(factor_w > 0.0) || !(factor_h > 0.0)) {
        throw Error(Errc::invalid_argument, "expand: scale factors must be positive");
    }
    RotatedBox2D out = box;
    out.w *= factor_w;
    out.h *= factor_h;
    return out;
}

OrientedBox3D expand(const OrientedBox3D& box, double factor_w, double factor_h) {
    if (!(factor_w > 0.0) || !(factor_h > 0.0)) {
        throw Error(Errc::invalid_argument, "expand: scale factors must be positive");
    }
    OrientedBox3D out = box;
    out.extent_x *= factor_w;
    out.extent_y *= factor_h;
    return out;
}

bool contains2d(const RotatedBox2D& box, const Eigen::Vector2d& p) {
    const double t = deg2rad(box.theta);
    const double c = std::cos(t);
    const double s = std::sin(t);
    const double dx = p.x() - box.cx;
    const double dy = p.y() - box.cy;
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    const double hw = 0.5 * box.w;
    const double hh = 0.5 * box.h;
    return std::abs(lx) <= hw + boundary_slack(hw) && std::abs(ly) <= hh + boundary_slack(hh);
}

bool contains3d(const OrientedBox3D& box, const Eigen::Vector3d& p) { return BoxContainment(box)(p); }

BoxContainment::BoxContainment(const OrientedBox3D& box)
    : cx_(box.center.x()),
      cy_(box.center.y()),
      cz_(box.center.z()),
      c_(std::cos(deg2rad(box.yaw))),
      s_(std::sin(deg2rad(box.yaw))),
      hx_(0.5 * box.extent_x + boundary_slack(0.5 * box.extent_x)),
      hy_(0.5 * box.extent_y + boundary_slack(0.5 * box.extent_y)),
      hz_(0.5 * box.extent_z + boundary_slack(0.5 * box.extent_z)) {}

}  // namespace rgrasp
