#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rgrasp/cloud.hpp"
#include "rgrasp/detect.hpp"
#include "rgrasp/rotgeom.hpp"

namespace rgrasp {

enum class Shape { cuboid, cylinder, towel_ridge };

const char* shape_name(Shape s);
Shape parse_shape(const std::string& name);

/// One synthetic object. `dims` depends on the shape:
///   cuboid      {size_x, size_y, height}  (sizes along the local axes)
///   cylinder    {diameter, height, unused}
///   towel_ridge {length, radius, unused}  (half-cylinder lying along local x)
/// An empty class name means the object gets no ground-truth detection.
struct ObjectSpec {
    Shape shape = Shape::cuboid;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;  // degrees
    std::array<double, 3> dims = {0.0, 0.0, 0.0};
    std::string class_name;
    double score = 1.0;
};

/// Top-down camera over a table at z = 0, optical axis through the world
/// origin. World +x/+y map onto image +u/+v.
struct SceneSpec {
    std::uint64_t seed = 0;
    Camera camera;
    double camera_height = 1.0;  // meters above the table
    double table_x = 0.4;        // table patch size, meters
    double table_y = 0.3;
    std::vector<ObjectSpec> objects;
    double point_density = 4e5;  // points per square meter of top-view area
    double noise_sigma = 0.0;    // z noise, meters

    /// Throws invalid_spec.
    void validate() const;
};

struct Scene {
    PointCloud cloud;  // organized
    std::vector<int> owner;  // per point: object index, or -1 for the table
    Image8 gbd;
    std::vector<Detection> truth_dets;
    std::vector<std::size_t> truth_det_object;  // object index of each truth detection
    std::vector<OrientedBox3D> truth_boxes3d;   // one per object
};

/// Deterministic in spec (including seed). Throws invalid_spec on
/// overlapping object footprints.
Scene generate(const SceneSpec& spec);

/// Image-plane box of an object's top face as seen by the scene camera.
RotatedBox2D project_top_face(const SceneSpec& spec, const ObjectSpec& obj);

/// Metric footprint of an object on the table.
RotatedBox2D object_footprint(const ObjectSpec& obj);
double object_height(const ObjectSpec& obj);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo ArIOU by uniform sampling of the axis-aligned bounds of A and B.
McEstimate oracle_ariou_mc(const RotatedBox2D& a, const RotatedBox2D& b, std::size_t samples, std::uint64_t seed);

/// Per-point loop with its own local-frame transform; reference for count_in.
std::vector<std::size_t> oracle_collision(const PointCloud& cloud, std::span<const OrientedBox3D> boxes);

}  // namespace rgrasp
