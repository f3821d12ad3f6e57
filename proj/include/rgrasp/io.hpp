#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rgrasp/cloud.hpp"
#include "rgrasp/detect.hpp"
#include "rgrasp/planner.hpp"
#include "rgrasp/scenegen.hpp"

namespace rgrasp {

inline constexpr int kSceneSchemaVersion = 1;

struct RawGridData {
    RawPredictionGrid grid;
    std::vector<Anchor> anchors;
    std::vector<std::string> class_names;
};

/// In-memory form of a scene file.
struct SceneData {
    std::uint64_t seed = 0;
    Camera camera;
    PointCloud cloud;
    std::vector<Detection> detections;
    std::optional<RawGridData> raw_grid;
    std::vector<std::string> warnings;  // filled by the loader, never written
};

/// Throws Error with code parse (malformed JSON, message carries the line),
/// schema (missing/mistyped fields, message carries the JSON path), or
/// unit_mismatch.
SceneData parse_scene(std::string_view text);
SceneData load_scene(const std::filesystem::path& path);

std::string dump_scene(const SceneData& scene);
void save_scene(const std::filesystem::path& path, const SceneData& scene);

/// Scene file contents for a generated scene.
SceneData to_scene_data(const SceneSpec& spec, const Scene& scene);

SceneSpec parse_scene_spec(std::string_view text);
SceneSpec load_scene_spec(const std::filesystem::path& path);

struct PlannerConfig {
    GripperModel gripper;
    ClassMap classes = ClassMap::defaults();
};

/// Gripper file: sizes in meters plus an optional "class_roles" object that
/// extends or overrides the default class map.
PlannerConfig parse_planner_config(std::string_view text);
PlannerConfig load_planner_config(const std::filesystem::path& path);

/// Plan file text. Keys are sorted and doubles keep round-trip precision,
/// so equal plans serialize to identical bytes.
std::string dump_plan(const PlanResult& plan);

/// Anchor list file: {"anchors": [[w, h, theta_deg], ...]}.
std::vector<Anchor> parse_anchors(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rgrasp
