#include "rgrasp/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rgrasp/error.hpp"

namespace rgrasp {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
    throw Error(Errc::schema, path + ": " + msg);
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) {
        schema_error(path, "expected an object");
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
        schema_error(path, std::string("missing field '") + key + "'");
    }
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        schema_error(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        schema_error(path, "value is not finite");
    }
    return v;
}

long long as_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) {
        schema_error(path, "expected an integer");
    }
    return j.get<long long>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) {
        schema_error(path, "expected a string");
    }
    return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path, std::size_t len = 0) {
    if (!j.is_array()) {
        schema_error(path, "expected an array");
    }
    if (len != 0 && j.size() != len) {
        schema_error(path, "expected " + std::to_string(len) + " elements, found " + std::to_string(j.size()));
    }
    return j;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& path) {
    const auto it = obj.find(key);
    return it == obj.end() ? fallback : as_number(*it, path + "." + key);
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(Errc::parse, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

json box_json(const RotatedBox2D& b) { return json::array({b.cx, b.cy, b.w, b.h, b.theta}); }

json camera_json(const Camera& c) {
    return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
}

Camera parse_camera(const json& j, const std::string& path) {
    Camera c;
    c.fx = as_number(require(j, "fx", path), path + ".fx");
    c.fy = as_number(require(j, "fy", path), path + ".fy");
    c.cx = as_number(require(j, "cx", path), path + ".cx");
    c.cy = as_number(require(j, "cy", path), path + ".cy");
    c.width = static_cast<int>(as_integer(require(j, "width", path), path + ".width"));
    c.height = static_cast<int>(as_integer(require(j, "height", path), path + ".height"));
    if (!(c.fx > 0.0) || !(c.fy > 0.0) || c.width <= 0 || c.height <= 0) {
        schema_error(path, "intrinsics and image size must be positive");
    }
    return c;
}

bool all_scalars(const json& arr) {
    for (const auto& e : arr) {
        if (e.is_array() || e.is_object()) {
            return false;
        }
    }
    return true;
}

// Pretty printer that keeps flat numeric arrays on one line.
void write_json(std::ostringstream& os, const json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
    if (j.is_object()) {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            os << (first ? "" : ",\n") << inner << json(it.key()).dump() << ": ";
            write_json(os, it.value(), indent + 2);
            first = false;
        }
        os << '\n' << pad << '}';
    } else if (j.is_array()) {
        if (j.empty()) {
            os << "[]";
        } else if (all_scalars(j)) {
            os << '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                os << (i ? ", " : "") << j[i].dump();
            }
            os << ']';
        } else {
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                os << (i ? ",\n" : "") << inner;
                write_json(os, j[i], indent + 2);
            }
            os << '\n' << pad << ']';
        }
    } else {
        os << j.dump();
    }
}

std::string pretty(const json& j) {
    std::ostringstream os;
    write_json(os, j, 0);
    os << '\n';
    return os.str();
}

Role parse_role(const std::string& s, const std::string& path) {
    if (s == "covered") return Role::covered;
    if (s == "rigid") return Role::rigid;
    if (s == "towel") return Role::towel;
    throw Error(Errc::configuration, path + ": unknown role '" + s + "' (expected covered, rigid or towel)");
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::io, "cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::io, "cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw Error(Errc::io, "write to '" + path.string() + "' failed");
    }
}

SceneData parse_scene(std::string_view text) {
    const json root = parse_json(text);
    SceneData scene;
    const std::string top = "$";
    const long long version = as_integer(require(root, "schema_version", top), "$.schema_version");
    if (version != kSceneSchemaVersion) {
        schema_error("$.schema_version", "unsupported version " + std::to_string(version));
    }

    const json& meta = require(root, "meta", top);
    const std::string units = as_string(require(meta, "units", "$.meta"), "$.meta.units");
    if (units != "m") {
        throw Error(Errc::unit_mismatch, "$.meta.units: expected \"m\", found \"" + units + "\"");
    }
    if (const auto it = meta.find("seed"); it != meta.end()) {
        scene.seed = static_cast<std::uint64_t>(as_integer(*it, "$.meta.seed"));
    }

    scene.camera = parse_camera(require(root, "camera", top), "$.camera");

    const json& cloud = require(root, "cloud", top);
    const json& pts = as_array(require(cloud, "points", "$.cloud"), "$.cloud.points");
    scene.cloud.points.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string p = "$.cloud.points[" + std::to_string(i) + "]";
        const json& a = as_array(pts[i], p, 3);
        scene.cloud.points.emplace_back(as_number(a[0], p), as_number(a[1], p), as_number(a[2], p));
    }
    if (const auto it = cloud.find("pixels"); it != cloud.end()) {
        const json& pix = as_array(*it, "$.cloud.pixels");
        if (pix.size() != pts.size()) {
            schema_error("$.cloud.pixels", "length " + std::to_string(pix.size()) + " differs from points length " +
                                               std::to_string(pts.size()));
        }
        scene.cloud.pixels.emplace();
        scene.cloud.pixels->reserve(pix.size());
        for (std::size_t i = 0; i < pix.size(); ++i) {
            const std::string p = "$.cloud.pixels[" + std::to_string(i) + "]";
            const json& a = as_array(pix[i], p, 2);
            scene.cloud.pixels->push_back({static_cast<int>(as_integer(a[0], p)), static_cast<int>(as_integer(a[1], p))});
        }
    }

    if (const auto it = root.find("detections"); it != root.end()) {
        const json& dets = as_array(*it, "$.detections");
        std::set<std::string> names;
        for (const auto& d : dets) {
            if (d.is_object() && d.contains("class") && d["class"].is_string()) {
                names.insert(d["class"].get<std::string>());
            }
        }
        const std::vector<std::string> sorted(names.begin(), names.end());
        for (std::size_t i = 0; i < dets.size(); ++i) {
            const std::string p = "$.detections[" + std::to_string(i) + "]";
            Detection det;
            det.class_name = as_string(require(dets[i], "class", p), p + ".class");
            det.score = as_number(require(dets[i], "score", p), p + ".score");
            if (det.score < 0.0 || det.score > 1.0) {
                schema_error(p + ".score", "must lie in [0, 1]");
            }
            if (const auto cid = dets[i].find("class_id"); cid != dets[i].end()) {
                det.class_id = static_cast<int>(as_integer(*cid, p + ".class_id"));
            } else {
                det.class_id = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), det.class_name) -
                                                sorted.begin());
            }
            const json& b = as_array(require(dets[i], "box", p), p + ".box", 5);
            const double theta = as_number(b[4], p + ".box[4]");
            det.box = RotatedBox2D(as_number(b[0], p), as_number(b[1], p), as_number(b[2], p), as_number(b[3], p),
                                   theta);
            if (theta < 0.0 || theta >= 180.0) {
                std::ostringstream w;
                w << p << ".box: theta " << theta << " normalized to " << det.box.theta;
                scene.warnings.push_back(w.str());
            }
            scene.detections.push_back(std::move(det));
        }
    }

    if (const auto it = root.find("raw_grid"); it != root.end()) {
        const std::string p = "$.raw_grid";
        RawGridData raw;
        const json& shape = as_array(require(*it, "shape", p), p + ".shape", 4);
        raw.grid.grid_h = static_cast<int>(as_integer(shape[0], p + ".shape"));
        raw.grid.grid_w = static_cast<int>(as_integer(shape[1], p + ".shape"));
        raw.grid.num_anchors = static_cast<int>(as_integer(shape[2], p + ".shape"));
        raw.grid.num_classes = static_cast<int>(as_integer(shape[3], p + ".shape")) - 5;
        if (raw.grid.grid_h <= 0 || raw.grid.grid_w <= 0 || raw.grid.num_anchors <= 0 || raw.grid.num_classes < 1) {
            schema_error(p + ".shape", "expected [grid_h, grid_w, anchors, 5 + classes] with positive sizes");
        }
        raw.grid.stride = as_number(require(*it, "stride", p), p + ".stride");
        const json& anchors = as_array(require(*it, "anchors", p), p + ".anchors");
        if (anchors.size() != static_cast<std::size_t>(raw.grid.num_anchors)) {
            schema_error(p + ".anchors", "count differs from shape[2]");
        }
        for (std::size_t i = 0; i < anchors.size(); ++i) {
            const std::string ap = p + ".anchors[" + std::to_string(i) + "]";
            const json& a = as_array(anchors[i], ap, 3);
            raw.anchors.push_back({as_number(a[0], ap), as_number(a[1], ap), normalize_angle_deg(as_number(a[2], ap))});
        }
        if (const auto cn = it->find("classes"); cn != it->end()) {
            for (const auto& c : as_array(*cn, p + ".classes")) {
                raw.class_names.push_back(as_string(c, p + ".classes"));
            }
        }
        const json& values = as_array(require(*it, "values", p), p + ".values");
        raw.grid.values.reserve(values.size());
        for (const auto& v : values) {
            raw.grid.values.push_back(as_number(v, p + ".values"));
        }
        if (raw.grid.values.size() != raw.grid.expected_size()) {
            schema_error(p + ".values", "length " + std::to_string(raw.grid.values.size()) + " differs from shape product " +
                                            std::to_string(raw.grid.expected_size()));
        }
        scene.raw_grid = std::move(raw);
    }
    return scene;
}

SceneData load_scene(const std::filesystem::path& path) { return parse_scene(read_text_file(path)); }

std::string dump_scene(const SceneData& scene) {
    json root;
    root["schema_version"] = kSceneSchemaVersion;
    root["meta"] = {{"units", "m"}, {"seed", scene.seed}};
    root["camera"] = camera_json(scene.camera);

    json pts = json::array();
    for (const auto& p : scene.cloud.points) {
        pts.push_back(vec_json(p));
    }
    json cloud = {{"points", std::move(pts)}};
    if (scene.cloud.organized()) {
        json pix = json::array();
        for (const auto& px : *scene.cloud.pixels) {
            pix.push_back(json::array({px.u, px.v}));
        }
        cloud["pixels"] = std::move(pix);
    }
    root["cloud"] = std::move(cloud);

    json dets = json::array();
    for (const auto& d : scene.detections) {
        dets.push_back({{"class", d.class_name}, {"class_id", d.class_id}, {"score", d.score}, {"box", box_json(d.box)}});
    }
    root["detections"] = std::move(dets);

    if (scene.raw_grid) {
        const auto& r = *scene.raw_grid;
        json anchors = json::array();
        for (const auto& a : r.anchors) {
            anchors.push_back(json::array({a.w, a.h, a.theta}));
        }
        root["raw_grid"] = {
            {"shape", json::array({r.grid.grid_h, r.grid.grid_w, r.grid.num_anchors, r.grid.num_classes + 5})},
            {"stride", r.grid.stride},
            {"anchors", std::move(anchors)},
            {"classes", r.class_names},
            {"values", r.grid.values},
        };
    }
    return pretty(root);
}

void save_scene(const std::filesystem::path& path, const SceneData& scene) { write_text_file(path, dump_scene(scene)); }

SceneData to_scene_data(const SceneSpec& spec, const Scene& scene) {
    SceneData data;
    data.seed = spec.seed;
    data.camera = spec.camera;
    data.cloud = scene.cloud;
    data.detections = scene.truth_dets;
    return data;
}

SceneSpec parse_scene_spec(std::string_view text) {
    const json root = parse_json(text);
    const std::string top = "$";
    SceneSpec spec;
    if (!root.is_object()) {
        schema_error(top, "expected an object");
    }
    if (const auto it = root.find("seed"); it != root.end()) {
        spec.seed = static_cast<std::uint64_t>(as_integer(*it, "$.seed"));
    }
    if (const auto it = root.find("camera"); it != root.end()) {
        spec.camera = parse_camera(*it, "$.camera");
    }
    spec.camera_height = number_or(root, "camera_height", spec.camera_height, top);
    if (const auto it = root.find("table"); it != root.end()) {
        const json& t = as_array(*it, "$.table", 2);
        spec.table_x = as_number(t[0], "$.table[0]");
        spec.table_y = as_number(t[1], "$.table[1]");
    }
    spec.point_density = number_or(root, "point_density", spec.point_density, top);
    spec.noise_sigma = number_or(root, "noise_sigma", spec.noise_sigma, top);
    if (const auto it = root.find("objects"); it != root.end()) {
        const json& objs = as_array(*it, "$.objects");
        for (std::size_t i = 0; i < objs.size(); ++i) {
            const std::string p = "$.objects[" + std::to_string(i) + "]";
            ObjectSpec o;
            o.shape = parse_shape(as_string(require(objs[i], "shape", p), p + ".shape"));
            const json& pose = as_array(require(objs[i], "pose", p), p + ".pose", 3);
            o.x = as_number(pose[0], p + ".pose");
            o.y = as_number(pose[1], p + ".pose");
            o.yaw = normalize_angle_deg(as_number(pose[2], p + ".pose"));
            const json& dims = as_array(require(objs[i], "dims", p), p + ".dims");
            if (dims.size() < 2 || dims.size() > 3) {
                schema_error(p + ".dims", "expected 2 or 3 values");
            }
            for (std::size_t k = 0; k < dims.size(); ++k) {
                o.dims[k] = as_number(dims[k], p + ".dims");
            }
            if (const auto c = objs[i].find("class"); c != objs[i].end()) {
                o.class_name = as_string(*c, p + ".class");
            }
            o.score = number_or(objs[i], "score", 1.0, p);
            spec.objects.push_back(std::move(o));
        }
    }
    spec.validate();
    return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) { return parse_scene_spec(read_text_file(path)); }

PlannerConfig parse_planner_config(std::string_view text) {
    const json root = parse_json(text);
    if (!root.is_object()) {
        throw Error(Errc::configuration, "gripper config must be a JSON object");
    }
    PlannerConfig cfg;
    try {
        auto& g = cfg.gripper;
        g.max_opening = number_or(root, "max_opening", g.max_opening, "$");
        g.finger_width = number_or(root, "finger_width", g.finger_width, "$");
        g.finger_length = number_or(root, "finger_length", g.finger_length, "$");
        g.finger_depth = number_or(root, "finger_depth", g.finger_depth, "$");
        if (const auto it = root.find("collision_threshold"); it != root.end()) {
            g.collision_threshold = static_cast<int>(as_integer(*it, "$.collision_threshold"));
        }
    } catch (const Error& e) {
        throw Error(Errc::configuration, e.what());
    }
    cfg.gripper.validate();
    if (const auto it = root.find("class_roles"); it != root.end()) {
        if (!it->is_object()) {
            throw Error(Errc::configuration, "$.class_roles must be an object");
        }
        for (auto r = it->begin(); r != it->end(); ++r) {
            if (!r.value().is_string()) {
                throw Error(Errc::configuration, "$.class_roles." + r.key() + " must be a string");
            }
            cfg.classes.set(r.key(), parse_role(r.value().get<std::string>(), "$.class_roles." + r.key()));
        }
    }
    return cfg;
}

PlannerConfig load_planner_config(const std::filesystem::path& path) {
    return parse_planner_config(read_text_file(path));
}

std::string dump_plan(const PlanResult& plan) {
    json root;
    root["schema_version"] = kSceneSchemaVersion;
    root["mode"] = mode_name(plan.mode);
    json result;
    if (const auto* g = std::get_if<GraspPose>(&plan.outcome)) {
        result = {{"type", "grasp"},
                  {"position", vec_json(g->position)},
                  {"closing_dir", vec_json(g->closing_dir)},
                  {"approach", vec_json(g->approach)},
                  {"opening_m", g->opening},
                  {"target", g->target ? json(*g->target) : json(nullptr)}};
    } else if (const auto* p = std::get_if<PushPlan>(&plan.outcome)) {
        result = {{"type", "push"},
                  {"start", vec_json(p->start)},
                  {"end", vec_json(p->end)},
                  {"direction", vec_json(p->direction)},
                  {"target", p->target ? json(*p->target) : json(nullptr)}};
    } else {
        result = {{"type", "none"}, {"reason", std::get<NoAction>(plan.outcome).reason}};
    }
    root["result"] = std::move(result);
    json trace = json::array();
    for (const auto& e : plan.trace) {
        trace.push_back(e.to_string());
    }
    root["trace"] = std::move(trace);
    return pretty(root);
}

std::vector<Anchor> parse_anchors(std::string_view text) {
    const json root = parse_json(text);
    const json& list = as_array(require(root, "anchors", "$"), "$.anchors");
    std::vector<std::array<double, 2>> sizes;
    std::vector<double> angles;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string p = "$.anchors[" + std::to_string(i) + "]";
        const json& a = as_array(list[i], p, 3);
        sizes.push_back({as_number(a[0], p), as_number(a[1], p)});
        angles.push_back(as_number(a[2], p));
    }
    return pair_anchors(sizes, angles);
}

}  // namespace rgrasp
