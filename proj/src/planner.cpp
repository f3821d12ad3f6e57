#include "rgrasp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "rgrasp/error.hpp"

namespace rgrasp {

namespace {

constexpr double kCandidateSpacing = 0.3;
constexpr double kGraspOpeningScale = 1.5;
constexpr double kRegraspOpeningScale = 1.2;
constexpr double kPushLeadScale = 0.5;
constexpr double kMinHorizontal = 1e-6;

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt_point(const Eigen::Vector3d& p) {
    return "(" + fmt_num(p.x()) + ", " + fmt_num(p.y()) + ", " + fmt_num(p.z()) + ")";
}

TraceEvent event(Stage stage, std::string name, std::optional<std::size_t> target, bool rejected,
                 std::string detail, int candidate = -1) {
    TraceEvent e;
    e.stage = stage;
    e.event = std::move(name);
    e.target = target;
    e.candidate = candidate;
    e.rejected = rejected;
    e.detail = std::move(detail);
    return e;
}

// Everything plan_rigid learns about one detection before trying poses.
struct TargetAnalysis {
    std::size_t index = 0;
    OrientedBox3D box;
    PrincipalFrame frame;
    double w_r = 0.0;
    double h_r = 0.0;
    Eigen::Vector2d along;   // unit horizontal primary direction
    Eigen::Vector2d across;  // along, rotated +90 degrees
};

std::string collision_detail(const CollisionCounts& c, int threshold) {
    return "N(L)=" + std::to_string(c.left) + " N(R)=" + std::to_string(c.right) +
           " C_T=" + std::to_string(threshold) + (c.free ? " -> free" : " -> collision");
}

std::vector<std::size_t> score_sorted(std::span<const Detection> dets, const std::vector<std::size_t>& subset) {
    std::vector<std::size_t> order = subset;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score_order(dets[a], dets[b]); });
    return order;
}

PlanResult towel_mode(const PointCloud& region, std::vector<TraceEvent> trace) {
    PlanResult result;
    const auto wrinkles = extract_wrinkles(region);
    trace.push_back(event(Stage::towel, "wrinkles", std::nullopt, wrinkles.empty(),
                          std::to_string(wrinkles.size()) + " wrinkle cluster(s) in " +
                              std::to_string(region.size()) + " points"));
    if (wrinkles.empty()) {
        result.outcome = NoAction{"no wrinkle found on the towel surface"};
        result.trace = std::move(trace);
        return result;
    }
    try {
        GraspPose g = towel_grasp(wrinkles.front());
        trace.push_back(event(Stage::towel, "grasp", std::nullopt, false,
                              "largest wrinkle (" + std::to_string(wrinkles.front().size()) +
                                  " points) at " + fmt_point(g.position)));
        result.mode = Mode::towel;
        result.outcome = g;
    } catch (const Error& e) {
        trace.push_back(event(Stage::towel, "grasp", std::nullopt, true, e.what()));
        result.outcome = NoAction{std::string("towel grasp failed: ") + e.what()};
    }
    result.trace = std::move(trace);
    return result;
}

}  // namespace

void GripperModel::validate() const {
    if (!(max_opening > 0.0) || !(finger_width > 0.0) || !(finger_length > 0.0) || !(finger_depth > 0.0)) {
        throw Error(Errc::configuration, "gripper dimensions must be positive");
    }
    if (collision_threshold < 0) {
        throw Error(Errc::configuration, "collision threshold must be non-negative");
    }
}

const char* mode_name(Mode m) {
    switch (m) {
    case Mode::towel: return "towel";
    case Mode::rigid: return "rigid";
    case Mode::none: return "none";
    }
    return "none";
}

const char* stage_name(Stage s) {
    switch (s) {
    case Stage::dispatch: return "dispatch";
    case Stage::primary: return "primary";
    case Stage::solution1: return "solution1";
    case Stage::solution2: return "solution2";
    case Stage::towel: return "towel";
    }
    return "?";
}

const char* role_name(Role r) {
    switch (r) {
    case Role::covered: return "covered";
    case Role::rigid: return "rigid";
    case Role::towel: return "towel";
    }
    return "?";
}

std::string TraceEvent::to_string() const {
    std::ostringstream os;
    os << '[' << stage_name(stage) << "] " << event;
    if (target) {
        os << " target=" << *target;
    }
    if (candidate >= 0) {
        os << " P" << (candidate + 1);
    }
    os << (rejected ? " rejected" : " ok");
    if (!detail.empty()) {
        os << ": " << detail;
    }
    return os.str();
}

ClassMap ClassMap::defaults() {
    return ClassMap({
        {"rectangle", Role::covered},
        {"cylinder", Role::covered},
        {"towel", Role::towel},
        {"toothpaste", Role::rigid},
        {"coke", Role::rigid},
        {"cuboid", Role::rigid},
        {"box", Role::rigid},
        {"bottle", Role::rigid},
        {"can", Role::rigid},
        {"cup", Role::rigid},
    });
}

Role ClassMap::role(const std::string& class_name) const {
    const auto it = roles_.find(class_name);
    if (it == roles_.end()) {
        throw Error(Errc::configuration, "no planning role configured for class '" + class_name + "'");
    }
    return it->second;
}

FingerVolumes finger_volumes(const GraspPose& g, const GripperModel& grip) {
    if (!(g.opening > 0.0)) {
        throw Error(Errc::invalid_argument, "grasp opening must be positive");
    }
    if (g.opening > grip.max_opening) {
        throw Error(Errc::opening_limit, "opening " + fmt_num(g.opening) + " m exceeds gripper limit " +
                                             fmt_num(grip.max_opening) + " m");
    }
    const double yaw = normalize_angle_deg(rad2deg(std::atan2(g.closing_dir.y(), g.closing_dir.x())));
    const double offset = 0.5 * g.opening + 0.5 * grip.finger_width;
    const Eigen::Vector3d shift(g.closing_dir.x() * offset, g.closing_dir.y() * offset, 0.0);
    return {
        OrientedBox3D(g.position + shift, grip.finger_width, grip.finger_depth, grip.finger_length, yaw),
        OrientedBox3D(g.position - shift, grip.finger_width, grip.finger_depth, grip.finger_length, yaw),
    };
}

CollisionCounts collision_counts(const GraspPose& g, const GripperModel& grip, const PointCloud& scene) {
    const FingerVolumes v = finger_volumes(g, grip);
    CollisionCounts c;
    c.left = count_in(scene, v.left);
    c.right = count_in(scene, v.right);
    const auto limit = static_cast<std::size_t>(grip.collision_threshold);
    c.free = c.left <= limit && c.right <= limit;
    return c;
}

bool collision_free(const GraspPose& g, const GripperModel& grip, const PointCloud& scene) {
    return collision_counts(g, grip, scene).free;
}

std::array<Eigen::Vector3d, 3> rigid_candidates(const PrincipalFrame& frame, double h_r) {
    const Eigen::Vector3d step = kCandidateSpacing * h_r * frame.primary().normalized();
    return {frame.centroid, frame.centroid - step, frame.centroid + step};
}

PushPlan plan_push(const PrincipalFrame& frame, double h_r) {
    if (!(h_r > 0.0)) {
        throw Error(Errc::invalid_argument, "plan_push: object length must be positive");
    }
    const Eigen::Vector2d horizontal(frame.primary().x(), frame.primary().y());
    const double norm = horizontal.norm();
    if (norm < kMinHorizontal) {
        throw Error(Errc::degenerate_direction, "plan_push: primary axis is vertical");
    }
    PushPlan plan;
    plan.direction = horizontal / norm;
    plan.end = frame.centroid;
    plan.start = Eigen::Vector3d(frame.centroid.x() + plan.direction.x() * kPushLeadScale * h_r,
                                 frame.centroid.y() + plan.direction.y() * kPushLeadScale * h_r,
                                 frame.centroid.z());
    return plan;
}

PlanResult plan_rigid(std::span<const Detection> dets, const PointCloud& cloud, const GripperModel& grip,
                      const ClassMap& classes) {
    grip.validate();
    std::vector<std::size_t> rigid;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (classes.role(dets[i].class_name) == Role::rigid) {
            rigid.push_back(i);
        }
    }
    if (rigid.empty()) {
        throw Error(Errc::invalid_argument, "plan_rigid: no rigid-object detections");
    }

    PlanResult result;
    auto& trace = result.trace;
    auto accept = [&](GraspPose g) {
        result.mode = Mode::rigid;
        result.outcome = std::move(g);
        return result;
    };

    std::vector<TargetAnalysis> analysed;
    for (const std::size_t idx : score_sorted(dets, rigid)) {
        TargetAnalysis t;
        t.index = idx;
        try {
            t.box = lift_box(cloud, dets[idx].box);
        } catch (const Error& e) {
            trace.push_back(event(Stage::primary, "lift", idx, true, e.what()));
            continue;
        }
        const PointCloud object = crop(cloud, t.box);
        try {
            t.frame = pca(object);
        } catch (const Error& e) {
            trace.push_back(event(Stage::primary, "pca", idx, true, e.what()));
            continue;
        }
        const Eigen::Vector2d horizontal(t.frame.primary().x(), t.frame.primary().y());
        if (horizontal.norm() < kMinHorizontal) {
            trace.push_back(event(Stage::primary, "pca", idx, true, "primary axis is vertical"));
            continue;
        }
        t.along = horizontal.normalized();
        t.across = Eigen::Vector2d(-t.along.y(), t.along.x());
        t.w_r = std::min(t.box.extent_x, t.box.extent_y);
        t.h_r = std::max(t.box.extent_x, t.box.extent_y);
        analysed.push_back(t);
        trace.push_back(event(Stage::primary, "target", idx, false,
                              dets[idx].class_name + " score=" + fmt_num(dets[idx].score) + " points=" +
                                  std::to_string(object.size()) + " w_r=" + fmt_num(t.w_r) +
                                  " h_r=" + fmt_num(t.h_r)));

        GraspPose g;
        g.closing_dir = t.across;
        g.opening = kGraspOpeningScale * t.w_r;
        g.target = idx;
        if (g.opening > grip.max_opening) {
            trace.push_back(event(Stage::primary, "opening", idx, true,
                                  "1.5*w_r=" + fmt_num(g.opening) + " exceeds " + fmt_num(grip.max_opening)));
            continue;
        }
        const auto candidates = rigid_candidates(t.frame, t.h_r);
        for (int k = 0; k < 3; ++k) {
            g.position = candidates[k];
            const CollisionCounts c = collision_counts(g, grip, cloud);
            trace.push_back(
                event(Stage::primary, "collision", idx, !c.free, collision_detail(c, grip.collision_threshold), k));
            if (c.free) {
                trace.push_back(event(Stage::primary, "grasp", idx, false,
                                      "position " + fmt_point(g.position) + " opening " + fmt_num(g.opening)));
                return accept(g);
            }
        }
    }

    // Solution 1: close across the long side instead.
    for (const auto& t : analysed) {
        GraspPose g;
        g.position = t.frame.centroid;
        g.closing_dir = t.along;
        g.opening = kRegraspOpeningScale * t.h_r;
        g.target = t.index;
        if (g.opening > grip.max_opening) {
            trace.push_back(event(Stage::solution1, "opening", t.index, true,
                                  "1.2*h_r=" + fmt_num(g.opening) + " exceeds " + fmt_num(grip.max_opening)));
            continue;
        }
        const CollisionCounts c = collision_counts(g, grip, cloud);
        trace.push_back(
            event(Stage::solution1, "collision", t.index, !c.free, collision_detail(c, grip.collision_threshold), 0));
        if (c.free) {
            trace.push_back(event(Stage::solution1, "grasp", t.index, false,
                                  "position " + fmt_point(g.position) + " opening " + fmt_num(g.opening)));
            return accept(g);
        }
    }

    // Solution 2: push the highest-scoring analysable target.
    if (analysed.empty()) {
        trace.push_back(event(Stage::solution2, "push", std::nullopt, true, "no rigid target could be analysed"));
        result.outcome = NoAction{"no rigid detection could be lifted to the point cloud"};
        return result;
    }
    const auto& t = analysed.front();
    PushPlan push = plan_push(t.frame, t.h_r);
    push.target = t.index;
    trace.push_back(event(Stage::solution2, "push", t.index, false,
                          "from " + fmt_point(push.start) + " to " + fmt_point(push.end) +
                              "; workspace bounds not checked"));
    result.mode = Mode::rigid;
    result.outcome = push;
    return result;
}

std::vector<OrientedBox3D> FeasibleRegion::exclusions() const {
    std::vector<OrientedBox3D> all = covered_boxes;
    all.insert(all.end(), rigid_boxes.begin(), rigid_boxes.end());
    return all;
}

FeasibleRegion towel_feasible(const PointCloud& cloud, std::span<const Detection> dets, const PointCloud& organized,
                              const ClassMap& classes) {
    FeasibleRegion region;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const Role role = classes.role(dets[i].class_name);
        if (role == Role::towel) {
            continue;
        }
        OrientedBox3D box;
        try {
            box = lift_box(organized, dets[i].box);
        } catch (const Error& e) {
            region.trace.push_back(event(Stage::towel, "lift", i, true, e.what()));
            continue;
        }
        if (role == Role::covered) {
            region.covered_boxes.push_back(box);
            region.covered_targets.push_back(i);
            region.trace.push_back(event(Stage::towel, "exclude", i, false,
                                         dets[i].class_name + " box " + fmt_num(box.extent_x) + " x " +
                                             fmt_num(box.extent_y)));
        } else {
            const OrientedBox3D grown = expand(box, kRigidExclusionScale, kRigidExclusionScale);
            region.rigid_boxes.push_back(grown);
            region.rigid_targets.push_back(i);
            region.trace.push_back(event(Stage::towel, "exclude", i, false,
                                         dets[i].class_name + " box " + fmt_num(grown.extent_x) + " x " +
                                             fmt_num(grown.extent_y) + " (expanded 1.5x)"));
        }
    }
    const auto all = region.exclusions();
    region.cloud = subtract(cloud, all);
    return region;
}

GraspPose towel_grasp(const PointCloud& wrinkle) {
    const PrincipalFrame frame = pca(wrinkle);
    Eigen::Vector2d dir(frame.secondary().x(), frame.secondary().y());
    if (dir.norm() < kMinHorizontal) {
        dir = Eigen::Vector2d(-frame.primary().y(), frame.primary().x());
    }
    if (dir.norm() < kMinHorizontal) {
        throw Error(Errc::degenerate_direction, "towel_grasp: wrinkle has no horizontal extent");
    }
    GraspPose g;
    g.position = frame.centroid;
    g.closing_dir = dir.normalized();
    g.opening = kTowelOpening;
    return g;
}

PlanResult plan_scene(const PointCloud& cloud, std::span<const Detection> dets, const GripperModel& grip,
                      const ClassMap& classes) {
    grip.validate();
    bool has_covered = false;
    bool has_rigid = false;
    for (const auto& d : dets) {
        const Role r = classes.role(d.class_name);
        has_covered = has_covered || r == Role::covered;
        has_rigid = has_rigid || r == Role::rigid;
    }

    std::vector<TraceEvent> trace;
    if (has_covered) {
        trace.push_back(event(Stage::dispatch, "mode", std::nullopt, false,
                              "covered shapes detected: towel grasp on the feasible region"));
        FeasibleRegion region = towel_feasible(cloud, dets, cloud, classes);
        trace.insert(trace.end(), region.trace.begin(), region.trace.end());
        trace.push_back(event(Stage::towel, "feasible", std::nullopt, false,
                              std::to_string(cloud.size() - region.cloud.size()) + " of " +
                                  std::to_string(cloud.size()) + " points excluded"));
        return towel_mode(region.cloud, std::move(trace));
    }
    if (has_rigid) {
        trace.push_back(event(Stage::dispatch, "mode", std::nullopt, false, "rigid objects detected: rigid grasp"));
        PlanResult r = plan_rigid(dets, cloud, grip, classes);
        trace.insert(trace.end(), r.trace.begin(), r.trace.end());
        r.trace = std::move(trace);
        return r;
    }
    trace.push_back(event(Stage::dispatch, "mode", std::nullopt, false,
                          "no covered or rigid objects: towel grasp on the whole cloud"));
    return towel_mode(cloud, std::move(trace));
}

}  // namespace rgrasp
