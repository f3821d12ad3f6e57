#include "rgrasp/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "rgrasp/error.hpp"
#include "rgrasp/io.hpp"
#include "rgrasp/planner.hpp"
#include "rgrasp/scenegen.hpp"

namespace rgrasp::cli {

namespace {

void report_error(std::ostream& log, const Error& e) {
    log << "error (" << errc_name(e.code()) << "): " << e.what() << '\n';
}

// File-level detections win; a raw grid is decoded only when there are none.
std::vector<Detection> scene_detections(const SceneData& scene, double conf, double nms, std::ostream& log) {
    if (!scene.detections.empty() || !scene.raw_grid) {
        if (!scene.detections.empty() && scene.raw_grid) {
            log << "note: scene has both detections and a raw grid; using the detections\n";
        }
        return scene.detections;
    }
    const auto& raw = *scene.raw_grid;
    auto dets = decode_grid(raw.grid, raw.anchors, conf, raw.class_names);
    return nms_ariou(std::move(dets), nms);
}

int exit_code_for(const PlanResult& r) { return r.is_none() ? kExitNoAction : kExitOk; }

// Re-derives the collision verdict for a rigid grasp with the brute-force
// counter. Empty when the result is not a rigid grasp.
std::optional<bool> oracle_agrees(const PlanResult& r, const PointCloud& cloud, const GripperModel& grip) {
    const auto* g = std::get_if<GraspPose>(&r.outcome);
    if (r.mode != Mode::rigid || g == nullptr) {
        return std::nullopt;
    }
    const FingerVolumes v = finger_volumes(*g, grip);
    const std::vector<OrientedBox3D> boxes = {v.left, v.right};
    const auto counts = oracle_collision(cloud, boxes);
    const auto limit = static_cast<std::size_t>(grip.collision_threshold);
    const bool oracle_free = counts[0] <= limit && counts[1] <= limit;
    return oracle_free == collision_free(*g, grip, cloud);
}

}  // namespace

RotatedBox2D parse_box(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw Error(Errc::invalid_argument, "bad number '" + item + "' in box '" + text + "'");
        }
    }
    if (v.size() != 5) {
        throw Error(Errc::invalid_argument, "box must be cx,cy,w,h,theta_deg: '" + text + "'");
    }
    return {v[0], v[1], v[2], v[3], v[4]};
}

int plan(const PlanArgs& args, std::ostream& log) {
    try {
        const SceneData scene = load_scene(args.scene);
        for (const auto& w : scene.warnings) {
            log << "warning: " << w << '\n';
        }
        const PlannerConfig cfg = load_planner_config(args.gripper);
        const auto dets = scene_detections(scene, args.conf, args.nms, log);
        const PlanResult result = plan_scene(scene.cloud, dets, cfg.gripper, cfg.classes);
        write_text_file(args.out, dump_plan(result));
        if (result.is_none()) {
            log << "no action: " << std::get<NoAction>(result.outcome).reason << '\n';
        }
        return exit_code_for(result);
    } catch (const Error& e) {
        report_error(log, e);
        return kExitError;
    }
}

int gen(const std::filesystem::path& spec_path, const std::filesystem::path& out, std::ostream& log) {
    try {
        const SceneSpec spec = load_scene_spec(spec_path);
        const Scene scene = generate(spec);
        save_scene(out, to_scene_data(spec, scene));
        return kExitOk;
    } catch (const Error& e) {
        report_error(log, e);
        return kExitError;
    }
}

int ariou(const std::string& a, const std::string& b, std::ostream& out, std::ostream& log) {
    try {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", rgrasp::ariou(parse_box(a), parse_box(b)));
        out << buf << '\n';
        return kExitOk;
    } catch (const Error& e) {
        report_error(log, e);
        return kExitError;
    }
}

int eval(const std::filesystem::path& scenes, const std::filesystem::path& gripper,
         const std::filesystem::path& report, std::ostream& log) {
    using nlohmann::json;
    PlannerConfig cfg;
    std::vector<std::filesystem::path> files;
    try {
        cfg = load_planner_config(gripper);
        if (!std::filesystem::is_directory(scenes)) {
            throw Error(Errc::io, "'" + scenes.string() + "' is not a directory");
        }
        for (const auto& entry : std::filesystem::directory_iterator(scenes)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
    } catch (const Error& e) {
        report_error(log, e);
        return kExitError;
    }
    std::sort(files.begin(), files.end(),
              [](const auto& x, const auto& y) { return x.filename().string() < y.filename().string(); });

    json entries = json::array();
    std::map<std::string, int> modes;
    int errors = 0;
    int planned = 0;
    int no_action = 0;
    int checked = 0;
    int agreed = 0;
    for (const auto& f : files) {
        json entry = {{"file", f.filename().string()}};
        try {
            const SceneData scene = load_scene(f);
            const auto dets = scene_detections(scene, 0.5, 0.45, log);
            const PlanResult r = plan_scene(scene.cloud, dets, cfg.gripper, cfg.classes);
            entry["mode"] = mode_name(r.mode);
            entry["result"] = r.is_grasp() ? "grasp" : r.is_push() ? "push" : "none";
            entry["exit_code"] = exit_code_for(r);
            entry["trace_length"] = r.trace.size();
            const auto agrees = oracle_agrees(r, scene.cloud, cfg.gripper);
            entry["collision_oracle_agrees"] = agrees ? json(*agrees) : json(nullptr);
            if (agrees) {
                ++checked;
                agreed += *agrees ? 1 : 0;
            }
            ++modes[mode_name(r.mode)];
            (r.is_none() ? no_action : planned) += 1;
        } catch (const Error& e) {
            ++errors;
            entry["exit_code"] = kExitError;
            entry["error"] = std::string(errc_name(e.code())) + ": " + e.what();
            log << f.filename().string() << ": ";
            report_error(log, e);
        }
        entries.push_back(std::move(entry));
    }

    json summary = {
        {"scenes", files.size()},
        {"planned", planned},
        {"no_action", no_action},
        {"errors", errors},
        {"modes", modes},
        {"collision_checked", checked},
        {"collision_oracle_agreement", checked > 0 ? json(static_cast<double>(agreed) / checked) : json(nullptr)},
    };
    const json doc = {{"entries", std::move(entries)}, {"summary", std::move(summary)}};
    try {
        write_text_file(report, doc.dump(2) + "\n");
    } catch (const Error& e) {
        report_error(log, e);
        return kExitError;
    }
    return errors == 0 ? kExitOk : kExitError;
}

}  // namespace rgrasp::cli
