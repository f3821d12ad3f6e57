#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace rgrasp {

/// Maps any angle in degrees onto [0, 180). A rectangle is unchanged by a
/// half turn, so this is the canonical representative.
double normalize_angle_deg(double deg);

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Image-plane rotated rectangle. `theta` is in degrees, counterclockwise
/// from +x, and is kept in [0, 180).
struct RotatedBox2D {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double theta = 0.0;

    RotatedBox2D() = default;
    RotatedBox2D(double cx_, double cy_, double w_, double h_, double theta_deg)
        : cx(cx_), cy(cy_), w(w_), h(h_), theta(normalize_angle_deg(theta_deg)) {}

    bool degenerate() const { return !(w > 0.0) || !(h > 0.0); }
    double area() const { return degenerate() ? 0.0 : w * h; }
    Eigen::Vector2d center() const { return {cx, cy}; }
};

/// Box rotated about the vertical axis only. Extents are full side lengths.
struct OrientedBox3D {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double extent_x = 0.0;
    double extent_y = 0.0;
    double extent_z = 0.0;
    double yaw = 0.0;

    OrientedBox3D() = default;
    OrientedBox3D(const Eigen::Vector3d& c, double ex, double ey, double ez, double yaw_deg)
        : center(c), extent_x(ex), extent_y(ey), extent_z(ez), yaw(normalize_angle_deg(yaw_deg)) {}

    bool degenerate() const { return !(extent_x > 0.0) || !(extent_y > 0.0) || !(extent_z > 0.0); }

    /// Planar footprint as a 2D box in the same metric frame.
    RotatedBox2D footprint() const { return {center.x(), center.y(), extent_x, extent_y, yaw}; }
};

struct ConvexPolygon2D {
    std::vector<Eigen::Vector2d> vertices;  // counterclockwise

    /// Shoelace area, clamped at zero.
    double area() const;
};

ConvexPolygon2D corners(const RotatedBox2D& box);

/// Area of the intersection of two convex counterclockwise polygons.
double intersection_area(const ConvexPolygon2D& a, const ConvexPolygon2D& b);

/// Plain intersection over union; 0 for degenerate input.
double iou(const RotatedBox2D& a, const RotatedBox2D& b);

/// IoU scaled by |cos(theta_a - theta_b)|.
double ariou(const RotatedBox2D& a, const RotatedBox2D& b);

RotatedBox2D expand(const RotatedBox2D& box, double factor_w, double factor_h);
OrientedBox3D expand(const OrientedBox3D& box, double factor_w, double factor_h);

bool contains2d(const RotatedBox2D& box, const Eigen::Vector2d& p);
bool contains3d(const OrientedBox3D& box, const Eigen::Vector3d& p);

/// Containment test with the rotation precomputed, for bulk point queries.
class BoxContainment {
public:
    explicit BoxContainment(const OrientedBox3D& box);

    bool operator()(const Eigen::Vector3d& p) const {
        const double dx = p.x() - cx_;
        const double dy = p.y() - cy_;
        const double lx = c_ * dx + s_ * dy;
        const double ly = -s_ * dx + c_ * dy;
        return std::abs(lx) <= hx_ && std::abs(ly) <= hy_ && std::abs(p.z() - cz_) <= hz_;
    }

private:
    double cx_, cy_, cz_;
    double c_, s_;
    double hx_, hy_, hz_;
};

}  // namespace rgrasp
