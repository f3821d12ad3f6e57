#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rgrasp/rotgeom.hpp"

namespace rgrasp {

/// Size and angle prior for one anchor slot. The cell offset is implicit in
/// the grid position.
struct Anchor {
    double w = 0.0;
    double h = 0.0;
    double theta = 0.0;  // degrees
};

/// The nine prior angles, 20 degrees apart.
inline constexpr std::array<double, 9> kAnchorAngles = {10, 30, 50, 70, 90, 110, 130, 150, 170};

/// Pairs sizes with angles positionally; both lists must have equal length.
std::vector<Anchor> pair_anchors(std::span<const std::array<double, 2>> sizes,
                                 std::span<const double> angles = kAnchorAngles);

/// YOLOv3 dimension clusters paired with kAnchorAngles. Mirrors
/// config/anchors.json.
std::vector<Anchor> default_anchors();

/// Raw head output. Per (row, col, anchor) slot the layout is
/// t_x, t_y, t_w, t_h, objectness, class logits...
struct RawPredictionGrid {
    int grid_w = 0;
    int grid_h = 0;
    double stride = 1.0;
    int num_anchors = 0;
    int num_classes = 0;
    std::vector<double> values;

    std::size_t slot_size() const { return 5 + static_cast<std::size_t>(num_classes); }
    std::size_t expected_size() const {
        return static_cast<std::size_t>(grid_w) * static_cast<std::size_t>(grid_h) *
               static_cast<std::size_t>(num_anchors) * slot_size();
    }
    std::span<const double> slot(int col, int row, int anchor) const;
    std::span<double> slot(int col, int row, int anchor);
};

struct Detection {
    int class_id = 0;
    std::string class_name;
    double score = 0.0;
    RotatedBox2D box;
};

double sigmoid(double x);

inline constexpr double kDefaultMaxBoxSize = 1e5;

/// Decodes one slot. Width and height are clamped to `max_box_size`; the
/// angle is inherited from the anchor unchanged.
RotatedBox2D decode_cell(const std::array<double, 4>& t, double cell_x, double cell_y, const Anchor& anchor,
                         double stride, double max_box_size = kDefaultMaxBoxSize);

/// Decodes every slot, keeps score >= conf_threshold, and orders by
/// descending score (ties: smaller cy, then cx). When `class_names` is
/// shorter than the class count, missing names become "class_<id>".
std::vector<Detection> decode_grid(const RawPredictionGrid& grid, std::span<const Anchor> anchors,
                                   double conf_threshold, std::span<const std::string> class_names = {});

/// Greedy same-class suppression with ArIOU as the overlap measure.
std::vector<Detection> nms_ariou(std::vector<Detection> dets, double threshold);

/// Ordering used by decode_grid and nms_ariou.
bool score_order(const Detection& a, const Detection& b);

/// Interleaved 8-bit image with three channels.
struct Image8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Image8() = default;
    Image8(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* px(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* px(int x, int y) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

/// Depth in meters; zero or non-finite marks a missing reading.
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    DepthImage() = default;
    DepthImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Replaces red with normalized depth: output channels are (G, B, D).
Image8 make_gbd(const Image8& rgb, const DepthImage& depth, double d_min, double d_max);

/// Depth quantization used by make_gbd (round half up).
std::uint8_t quantize_depth(double d, double d_min, double d_max);

}  // namespace rgrasp
