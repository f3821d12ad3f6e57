#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "rgrasp/cloud.hpp"
#include "rgrasp/detect.hpp"
#include "rgrasp/rotgeom.hpp"

namespace rgrasp {

/// Parallel-jaw gripper. Lengths in meters.
struct GripperModel {
    double max_opening = 0.100;
    double finger_width = 0.010;   // thickness along the closing direction
    double finger_length = 0.040;  // along the approach axis
    double finger_depth = 0.020;   // tangential
    int collision_threshold = 60;  // C_T, inclusive

    /// Throws configuration on non-positive sizes or a negative threshold.
    void validate() const;
};

struct GraspPose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector2d closing_dir = Eigen::Vector2d::UnitX();
    Eigen::Vector3d approach = -Eigen::Vector3d::UnitZ();
    double opening = 0.0;
    std::optional<std::size_t> target;  // index into the detection list
};

struct PushPlan {
    Eigen::Vector3d start = Eigen::Vector3d::Zero();
    Eigen::Vector3d end = Eigen::Vector3d::Zero();
    Eigen::Vector2d direction = Eigen::Vector2d::UnitX();
    std::optional<std::size_t> target;
};

struct NoAction {
    std::string reason;
};

enum class Mode { towel, rigid, none };
const char* mode_name(Mode m);

enum class Stage { dispatch, primary, solution1, solution2, towel };
const char* stage_name(Stage s);

/// One line of the planner's audit log.
struct TraceEvent {
    Stage stage = Stage::dispatch;
    std::string event;  // "mode", "lift", "pca", "opening", "collision", "grasp", "push", ...
    std::optional<std::size_t> target;
    int candidate = -1;  // 0-based candidate position, -1 when not applicable
    bool rejected = false;
    std::string detail;

    std::string to_string() const;
};

struct PlanResult {
    Mode mode = Mode::none;
    std::variant<GraspPose, PushPlan, NoAction> outcome = NoAction{};
    std::vector<TraceEvent> trace;

    bool is_grasp() const { return std::holds_alternative<GraspPose>(outcome); }
    bool is_push() const { return std::holds_alternative<PushPlan>(outcome); }
    bool is_none() const { return std::holds_alternative<NoAction>(outcome); }
};

enum class Role { covered, rigid, towel };
const char* role_name(Role r);

/// Class name to planning role. Unknown names are a configuration error.
class ClassMap {
public:
    ClassMap() = default;
    explicit ClassMap(std::map<std::string, Role> roles) : roles_(std::move(roles)) {}

    /// rectangle/cylinder -> covered, towel -> towel, common household rigid
    /// items -> rigid.
    static ClassMap defaults();

    Role role(const std::string& class_name) const;
    void set(const std::string& class_name, Role r) { roles_[class_name] = r; }
    const std::map<std::string, Role>& roles() const { return roles_; }

private:
    std::map<std::string, Role> roles_;
};

struct FingerVolumes {
    OrientedBox3D left;   // position + closing_dir * offset
    OrientedBox3D right;  // position - closing_dir * offset
};

/// Throws opening_limit when the opening exceeds the gripper's range.
FingerVolumes finger_volumes(const GraspPose& g, const GripperModel& grip);

struct CollisionCounts {
    std::size_t left = 0;
    std::size_t right = 0;
    bool free = true;
};

CollisionCounts collision_counts(const GraspPose& g, const GripperModel& grip, const PointCloud& scene);
bool collision_free(const GraspPose& g, const GripperModel& grip, const PointCloud& scene);

/// Centroid, then -/+ 0.3 h_r along the unit primary axis.
std::array<Eigen::Vector3d, 3> rigid_candidates(const PrincipalFrame& frame, double h_r);

/// Push toward the centroid from half a length out along the primary axis.
/// Throws degenerate_direction when the primary axis is vertical.
PushPlan plan_push(const PrincipalFrame& frame, double h_r);

/// Grasp, regrasp (Solution 1), and push (Solution 2) over the detections
/// whose role is rigid. Throws invalid_argument when there are none.
PlanResult plan_rigid(std::span<const Detection> dets, const PointCloud& cloud, const GripperModel& grip,
                      const ClassMap& classes = ClassMap::defaults());

struct FeasibleRegion {
    PointCloud cloud;
    std::vector<OrientedBox3D> covered_boxes;  // as lifted
    std::vector<OrientedBox3D> rigid_boxes;    // lifted, then expanded
    std::vector<std::size_t> covered_targets;
    std::vector<std::size_t> rigid_targets;
    std::vector<TraceEvent> trace;

    std::vector<OrientedBox3D> exclusions() const;
};

inline constexpr double kRigidExclusionScale = 1.5;

/// Removes covered-shape boxes and expanded rigid boxes from `cloud`.
/// Boxes are lifted from `organized`.
FeasibleRegion towel_feasible(const PointCloud& cloud, std::span<const Detection> dets, const PointCloud& organized,
                              const ClassMap& classes = ClassMap::defaults());

/// Stand-in wrinkle segmentation: plane fit on the lowest points, height
/// threshold, grid connected components.
struct WrinkleParams {
    double low_fraction = 0.60;
    double ridge_height = 0.008;
    double grid = 0.005;
    std::size_t min_points = 50;
};

std::vector<PointCloud> extract_wrinkles(const PointCloud& cloud, const WrinkleParams& params = {});

inline constexpr double kTowelOpening = 0.030;

GraspPose towel_grasp(const PointCloud& wrinkle);

PlanResult plan_scene(const PointCloud& cloud, std::span<const Detection> dets, const GripperModel& grip,
                      const ClassMap& classes = ClassMap::defaults());

}  // namespace rgrasp
