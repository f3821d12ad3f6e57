#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Core>

#include "rgrasp/io.hpp"
#include "rgrasp/scenegen.hpp"

namespace rgrasp::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(RGRASP_FIXTURE_DIR) / name; }
inline std::filesystem::path config(const std::string& name) { return std::filesystem::path(RGRASP_CONFIG_DIR) / name; }

inline SceneSpec fixture_spec(const std::string& name) { return load_scene_spec(fixture(name)); }

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
    double normal(double sd) { return std::normal_distribution<double>(0.0, sd)(eng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
};

/// Local-frame containment written out by hand, shared by the oracles below.
inline bool inside_rotated(double cx, double cy, double w, double h, double theta_deg, double x, double y) {
    const double t = theta_deg * 3.14159265358979323846 / 180.0;
    const double dx = x - cx;
    const double dy = y - cy;
    const double lx = std::cos(t) * dx + std::sin(t) * dy;
    const double ly = -std::sin(t) * dx + std::cos(t) * dy;
    return std::abs(lx) <= 0.5 * w && std::abs(ly) <= 0.5 * h;
}

/// Angle between two lines (sign-agnostic), degrees.
inline double line_angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double c = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
    return std::acos(c) * 180.0 / 3.14159265358979323846;
}

}  // namespace rgrasp::test
