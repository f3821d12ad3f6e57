#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rgrasp/rotgeom.hpp"

namespace rgrasp {

struct PixelIndex {
    int u = 0;
    int v = 0;

    friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Pinhole intrinsics of the camera that produced an organized cloud.
struct Camera {
    double fx = 600.0;
    double fy = 600.0;
    double cx = 320.0;
    double cy = 240.0;
    int width = 640;
    int height = 480;
};

/// Points in meters. A cloud is organized when every point carries the
/// pixel it was observed at.
class PointCloud {
public:
    std::vector<Eigen::Vector3d> points;
    std::optional<std::vector<PixelIndex>> pixels;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool organized() const { return pixels.has_value() && pixels->size() == points.size(); }

    void reserve(std::size_t n);
    void push_back(const Eigen::Vector3d& p);
    void push_back(const Eigen::Vector3d& p, PixelIndex px);
};

/// Centroid plus covariance eigenvectors, sorted by descending eigenvalue.
///
/// Each of the first two axes is signed so that its largest-magnitude
/// component is positive (earliest coordinate wins ties); the third is
/// their cross product, which makes the frame right-handed.
struct PrincipalFrame {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    std::array<Eigen::Vector3d, 3> axes = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                           Eigen::Vector3d::UnitZ()};
    std::array<double, 3> sigma = {0.0, 0.0, 0.0};

    const Eigen::Vector3d& primary() const { return axes[0]; }
    const Eigen::Vector3d& secondary() const { return axes[1]; }
};

PointCloud crop(const PointCloud& cloud, const OrientedBox3D& box);
std::size_t count_in(const PointCloud& cloud, const OrientedBox3D& box);

/// Points contained in none of the boxes, in input order.
PointCloud subtract(const PointCloud& cloud, std::span<const OrientedBox3D> exclusions);

/// Throws insufficient_data for fewer than three points.
PrincipalFrame pca(const PointCloud& cloud);
PrincipalFrame pca(std::span<const Eigen::Vector3d> points);

struct LiftOptions {
    std::size_t min_points = 20;
    double padding = 0.005;  // added to every extent, meters
    double low_percentile = 1.0;
    double high_percentile = 99.0;
    // Points below a height gap wider than this, under the top cluster, are
    // background seen through the box outline. Non-positive disables it.
    double background_gap = 0.010;
};

/// Image angle to world yaw. Image +x/+y follow world +x/+y on the table
/// plane, so angles carry over unchanged.
inline double image_angle_to_yaw(double theta_deg) { return normalize_angle_deg(theta_deg); }

/// Builds the 3D box of the points whose pixel lies in `box2d`, after
/// dropping background points (see LiftOptions::background_gap).
///
/// Planar extents are the spans of the remaining points along the yawed axes
/// and the vertical extent is the 1st..99th percentile height span, each
/// padded. The box is centered on the middle of those spans.
OrientedBox3D lift_box(const PointCloud& cloud, const RotatedBox2D& box2d, const LiftOptions& opts = {});

/// Linear-interpolated percentile of an unsorted sample, p in [0, 100].
double percentile(std::vector<double> values, double p);

}  // namespace rgrasp
