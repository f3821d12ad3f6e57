#include "rgrasp/detect.hpp"

#include <algorithm>
#include <cmath>

#include "rgrasp/error.hpp"

namespace rgrasp {

std::vector<Anchor> pair_anchors(std::span<const std::array<double, 2>> sizes, std::span<const double> angles) {
    if (sizes.size() != angles.size()) {
        throw Error(Errc::invalid_argument, "anchor sizes and angles must pair one to one");
    }
    std::vector<Anchor> out;
    out.reserve(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (!(sizes[i][0] > 0.0) || !(sizes[i][1] > 0.0)) {
            throw Error(Errc::invalid_argument, "anchor sizes must be positive");
        }
        out.push_back({sizes[i][0], sizes[i][1], normalize_angle_deg(angles[i])});
    }
    return out;
}

std::vector<Anchor> default_anchors() {
    static constexpr std::array<std::array<double, 2>, 9> kSizes = {{
        {10, 13}, {16, 30}, {33, 23}, {30, 61}, {62, 45}, {59, 119}, {116, 90}, {156, 198}, {373, 326},
    }};
    return pair_anchors(kSizes);
}

std::span<const double> RawPredictionGrid::slot(int col, int row, int anchor) const {
    const std::size_t idx =
        ((static_cast<std::size_t>(row) * grid_w + col) * num_anchors + anchor) * slot_size();
    return {values.data() + idx, slot_size()};
}

std::span<double> RawPredictionGrid::slot(int col, int row, int anchor) {
    const std::size_t idx =
        ((static_cast<std::size_t>(row) * grid_w + col) * num_anchors + anchor) * slot_size();
    return {values.data() + idx, slot_size()};
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

RotatedBox2D decode_cell(const std::array<double, 4>& t, double cell_x, double cell_y, const Anchor& anchor,
                         double stride, double max_box_size) {
    if (!(stride > 0.0)) {
        throw Error(Errc::invalid_argument, "decode_cell: stride must be positive");
    }
    if (!(anchor.w > 0.0) || !(anchor.h > 0.0)) {
        throw Error(Errc::invalid_argument, "decode_cell: anchor sizes must be positive");
    }
    RotatedBox2D box;
    box.cx = (sigmoid(t[0]) + cell_x) * stride;
    box.cy = (sigmoid(t[1]) + cell_y) * stride;
    box.w = std::min(anchor.w * std::exp(t[2]), max_box_size);
    box.h = std::min(anchor.h * std::exp(t[3]), max_box_size);
    box.theta = normalize_angle_deg(anchor.theta);
    return box;
}

bool score_order(const Detection& a, const Detection& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    if (a.box.cy != b.box.cy) {
        return a.box.cy < b.box.cy;
    }
    return a.box.cx < b.box.cx;
}

std::vector<Detection> decode_grid(const RawPredictionGrid& grid, std::span<const Anchor> anchors,
                                   double conf_threshold, std::span<const std::string> class_names) {
    if (anchors.empty() || static_cast<std::size_t>(grid.num_anchors) != anchors.size()) {
        throw Error(Errc::invalid_input, "decode_grid: grid anchor count does not match anchor list");
    }
    if (grid.grid_w <= 0 || grid.grid_h <= 0 || grid.num_classes < 1 || grid.values.size() != grid.expected_size()) {
        throw Error(Errc::invalid_input, "decode_grid: tensor shape mismatch");
    }
    if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0)) {
        throw Error(Errc::invalid_argument, "decode_grid: confidence threshold must lie in [0, 1]");
    }

    std::vector<Detection> out;
    for (int row = 0; row < grid.grid_h; ++row) {
        for (int col = 0; col < grid.grid_w; ++col) {
            for (int a = 0; a < grid.num_anchors; ++a) {
                const auto s = grid.slot(col, row, a);
                const auto best = std::max_element(s.begin() + 5, s.end());
                const int class_id = static_cast<int>(best - (s.begin() + 5));
                const double score = sigmoid(s[4]) * sigmoid(*best);
                if (score < conf_threshold) {
                    continue;
                }
                Detection d;
                d.class_id = class_id;
                d.class_name = static_cast<std::size_t>(class_id) < class_names.size()
                                   ? class_names[class_id]
                                   : "class_" + std::to_string(class_id);
                d.score = score;
                d.box = decode_cell({s[0], s[1], s[2], s[3]}, col, row, anchors[a], grid.stride);
                out.push_back(std::move(d));
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), score_order);
    return out;
}

std::vector<Detection> nms_ariou(std::vector<Detection> dets, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw Error(Errc::invalid_argument, "nms_ariou: threshold must lie in [0, 1]");
    }
    std::stable_sort(dets.begin(), dets.end(), score_order);
    std::vector<Detection> kept;
    for (auto& d : dets) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
            return k.class_id == d.class_id && k.class_name == d.class_name && ariou(k.box, d.box) >= threshold;
        });
        if (!suppressed) {
            kept.push_back(std::move(d));
        }
    }
    return kept;
}

std::uint8_t quantize_depth(double d, double d_min, double d_max) {
    if (!std::isfinite(d) || d <= 0.0) {
        return 0;
    }
    const double n = std::clamp((d - d_min) / (d_max - d_min), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(255.0 * n + 0.5));
}

Image8 make_gbd(const Image8& rgb, const DepthImage& depth, double d_min, double d_max) {
    if (rgb.width != depth.width || rgb.height != depth.height ||
        rgb.data.size() != static_cast<std::size_t>(rgb.width) * rgb.height * 3 ||
        depth.data.size() != static_cast<std::size_t>(depth.width) * depth.height) {
        throw Error(Errc::invalid_input, "make_gbd: image and depth dimensions differ");
    }
    if (!(d_min < d_max)) {
        throw Error(Errc::invalid_argument, "make_gbd: d_min must be below d_max");
    }
    Image8 out(rgb.width, rgb.height);
    for (int y = 0; y < rgb.height; ++y) {
        for (int x = 0; x < rgb.width; ++x) {
            const std::uint8_t* in = rgb.px(x, y);
            std::uint8_t* o = out.px(x, y);
            o[0] = in[1];
            o[1] = in[2];
            o[2] = quantize_depth(depth.at(x, y), d_min, d_max);
        }
    }
    return out;
}

}  // namespace rgrasp
