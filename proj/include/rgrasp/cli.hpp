#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "rgrasp/rotgeom.hpp"

namespace rgrasp::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNoAction = 2;

struct PlanArgs {
    std::filesystem::path scene;
    std::filesystem::path gripper;
    std::filesystem::path out;
    double conf = 0.5;
    double nms = 0.45;
};

/// 0 on grasp or push, 2 on no action, 1 on any error.
int plan(const PlanArgs& args, std::ostream& log);

int gen(const std::filesystem::path& spec, const std::filesystem::path& out, std::ostream& log);

/// Boxes as "cx,cy,w,h,theta_deg". Prints the ArIOU with six decimals.
int ariou(const std::string& a, const std::string& b, std::ostream& out, std::ostream& log);

/// Plans every *.json scene in `scenes` (sorted by file name) and writes a
/// JSON report. 0 iff no scene hit an internal error.
int eval(const std::filesystem::path& scenes, const std::filesystem::path& gripper,
         const std::filesystem::path& report, std::ostream& log);

/// Throws invalid_argument on malformed text.
RotatedBox2D parse_box(const std::string& text);

}  // namespace rgrasp::cli
