#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgrasp/cli.hpp"
#include "rgrasp/error.hpp"
#include "rgrasp/io.hpp"
#include "rgrasp/planner.hpp"
#include "rgrasp/scenegen.hpp"
#include "support.hpp"

using namespace rgrasp;
using rgrasp::test::config;
using rgrasp::test::fixture;
using rgrasp::test::fixture_spec;

namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "schema_version": 1,
  "meta": {"units": "m", "seed": 4},
  "camera": {"fx": 600, "fy": 600, "cx": 320, "cy": 240, "width": 640, "height": 480},
  "cloud": {"points": [[0.1, 0.2, 0.3]], "pixels": [[10, 20]]},
  "detections": []
})";

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::io;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "rgrasp_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string with(const std::string& from, const std::string& to) {
    std::string s = kMinimal;
    const auto at = s.find(from);
    REQUIRE(at != std::string::npos);
    s.replace(at, from.size(), to);
    return s;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("minimal scene loads") {
    const auto s = parse_scene(kMinimal);
    CHECK(s.cloud.size() == 1);
    CHECK(s.cloud.organized());
    CHECK(s.cloud.points[0] == Eigen::Vector3d(0.1, 0.2, 0.3));
    CHECK((*s.cloud.pixels)[0] == PixelIndex{10, 20});
    CHECK(s.detections.empty());
    CHECK(s.seed == 4);
    CHECK_FALSE(s.raw_grid.has_value());
    CHECK(s.warnings.empty());
}

TEST_CASE("out-of-range angles are normalized with a warning") {
    const auto s = parse_scene(with(R"("detections": [])",
                                    R"("detections": [{"class": "coke", "score": 0.8, "box": [1, 2, 3, 4, 270]}])"));
    REQUIRE(s.detections.size() == 1);
    CHECK(s.detections[0].box.theta == doctest::Approx(90.0));
    CHECK(s.detections[0].class_name == "coke");
    REQUIRE(s.warnings.size() == 1);
    CHECK(s.warnings[0].find("270") != std::string::npos);
}

TEST_CASE("malformed scenes report distinct codes") {
    const std::string text = kMinimal;
    CHECK(code_of([&] { parse_scene(text.substr(0, text.size() / 2)); }) == Errc::parse);
    CHECK(message_of([&] { parse_scene(text.substr(0, text.size() / 2)); }).find("line") != std::string::npos);
    CHECK(code_of([&] { parse_scene(with(R"("units": "m")", R"("units": "mm")")); }) == Errc::unit_mismatch);
    CHECK(code_of([&] { parse_scene(with(R"("schema_version": 1,)", "")); }) == Errc::schema);
    CHECK(code_of([&] { parse_scene(with(R"("schema_version": 1)", R"("schema_version": 7)")); }) == Errc::schema);
    CHECK(code_of([&] { parse_scene(with("[[10, 20]]", "[[10, 20], [1, 1]]")); }) == Errc::schema);
    CHECK(code_of([&] { parse_scene(with("[[0.1, 0.2, 0.3]]", "[[0.1, 0.2]]")); }) == Errc::schema);
    const auto msg = message_of([&] { parse_scene(with("[[0.1, 0.2, 0.3]]", R"([[0.1, "x", 0.3]])")); });
    CHECK(msg.find("$.cloud.points[0]") != std::string::npos);
    CHECK(code_of([&] {
              parse_scene(with(R"("detections": [])", R"("detections": [{"class": "coke", "box": [1, 2, 3, 4, 5]}])"));
          }) == Errc::schema);
    CHECK(code_of([&] { load_scene(scratch("does_not_exist.json")); }) == Errc::io);
}

TEST_CASE("generated scenes round-trip through the file format") {
    const auto spec = fixture_spec("scene_c_solution1.json");
    const auto data = to_scene_data(spec, generate(spec));
    const auto text = dump_scene(data);
    const auto back = parse_scene(text);
    REQUIRE(back.cloud.size() == data.cloud.size());
    for (std::size_t i = 0; i < data.cloud.size(); ++i) {
        CHECK((back.cloud.points[i] - data.cloud.points[i]).norm() <= 1e-9);
    }
    CHECK(*back.cloud.pixels == *data.cloud.pixels);
    REQUIRE(back.detections.size() == data.detections.size());
    for (std::size_t i = 0; i < data.detections.size(); ++i) {
        const auto& a = data.detections[i];
        const auto& b = back.detections[i];
        CHECK(a.class_name == b.class_name);
        CHECK(a.class_id == b.class_id);
        CHECK(std::abs(a.score - b.score) <= 1e-9);
        CHECK(std::abs(a.box.cx - b.box.cx) <= 1e-9);
        CHECK(std::abs(a.box.theta - b.box.theta) <= 1e-9);
    }
    CHECK(back.camera.fx == data.camera.fx);
    CHECK(back.seed == spec.seed);
    CHECK(dump_scene(back) == text);
}

TEST_CASE("raw grids round-trip and keep their shape") {
    SceneData s = parse_scene(kMinimal);
    RawGridData raw;
    raw.grid.grid_w = 3;
    raw.grid.grid_h = 2;
    raw.grid.stride = 32;
    raw.grid.num_anchors = 9;
    raw.grid.num_classes = 2;
    raw.grid.values.resize(raw.grid.expected_size());
    for (std::size_t i = 0; i < raw.grid.values.size(); ++i) {
        raw.grid.values[i] = std::sin(static_cast<double>(i)) * 3.0;
    }
    raw.anchors = default_anchors();
    raw.class_names = {"coke", "towel"};
    s.raw_grid = raw;
    const auto back = parse_scene(dump_scene(s));
    REQUIRE(back.raw_grid.has_value());
    CHECK(back.raw_grid->grid.grid_w == 3);
    CHECK(back.raw_grid->grid.grid_h == 2);
    CHECK(back.raw_grid->grid.values == raw.grid.values);
    CHECK(back.raw_grid->class_names == raw.class_names);
    CHECK(back.raw_grid->anchors.size() == 9);

    auto j = nlohmann::json::parse(dump_scene(s));
    j["raw_grid"]["values"].erase(0);
    CHECK(code_of([&] { parse_scene(j.dump()); }) == Errc::schema);
}

TEST_CASE("scene specs") {
    const auto spec = fixture_spec("scene_a_covered.json");
    CHECK(spec.seed == 11);
    REQUIRE(spec.objects.size() == 3);
    CHECK(spec.objects[0].class_name == "rectangle");
    CHECK(spec.objects[2].shape == Shape::towel_ridge);
    CHECK(spec.objects[2].class_name.empty());
    CHECK(spec.table_x == 0.30);
    CHECK(code_of([] { parse_scene_spec(R"({"objects": [{"shape": "blob", "pose": [0,0,0], "dims": [1]}]})"); }) ==
          Errc::invalid_spec);
    CHECK(code_of([] { parse_scene_spec(R"({"objects": [{"shape": "cuboid", "dims": [1, 1, 1]}]})"); }) ==
          Errc::schema);
}

TEST_CASE("planner configuration") {
    const auto cfg = load_planner_config(config("gripper.json"));
    CHECK(cfg.gripper.max_opening == 0.1);
    CHECK(cfg.gripper.collision_threshold == 60);
    CHECK(cfg.classes.role("toothpaste") == Role::rigid);

    const auto custom = parse_planner_config(R"({"collision_threshold": 10, "class_roles": {"mug": "rigid"}})");
    CHECK(custom.gripper.collision_threshold == 10);
    CHECK(custom.gripper.finger_width == 0.010);
    CHECK(custom.classes.role("mug") == Role::rigid);
    CHECK(custom.classes.role("rectangle") == Role::covered);

    CHECK(code_of([] { parse_planner_config(R"({"max_opening": 0})"); }) == Errc::configuration);
    CHECK(code_of([] { parse_planner_config(R"({"collision_threshold": 1.5})"); }) == Errc::configuration);
    CHECK(code_of([] { parse_planner_config(R"({"class_roles": {"mug": "edible"}})"); }) == Errc::configuration);
    CHECK(code_of([] { parse_planner_config("{"); }) == Errc::parse);
}

TEST_CASE("plan files keep full precision and a fixed key order") {
    PlanResult r;
    r.mode = Mode::rigid;
    GraspPose g;
    g.position = {0.1234567890123, -1.0 / 3.0, 2e-7};
    g.closing_dir = {0.6, 0.8};
    g.opening = 0.0512345678901;
    g.target = 3;
    r.outcome = g;
    r.trace.push_back({Stage::primary, "grasp", std::size_t{3}, 0, false, "ok"});
    const auto text = dump_plan(r);
    CHECK(text == dump_plan(r));
    const auto j = nlohmann::json::parse(text);
    CHECK(j["mode"] == "rigid");
    CHECK(j["result"]["type"] == "grasp");
    CHECK(j["result"]["position"][1].get<double>() == -1.0 / 3.0);
    CHECK(j["result"]["opening_m"].get<double>() == 0.0512345678901);
    CHECK(j["result"]["target"] == 3);
    CHECK(j["trace"][0] == "[primary] grasp target=3 P1 ok: ok");
    CHECK(text.find("\"mode\"") < text.find("\"result\""));
    CHECK(text.find("\"result\"") < text.find("\"trace\""));

    PlanResult none;
    none.outcome = NoAction{"nothing to do"};
    none.trace.push_back({Stage::towel, "wrinkles", std::nullopt, -1, true, "none"});
    const auto n = nlohmann::json::parse(dump_plan(none));
    CHECK(n["mode"] == "none");
    CHECK(n["result"]["type"] == "none");
    CHECK(n["result"]["reason"] == "nothing to do");
}

TEST_CASE("anchor files") {
    const auto a = parse_anchors(R"({"anchors": [[10, 13, 10], [16, 30, 390]]})");
    REQUIRE(a.size() == 2);
    CHECK(a[1].theta == doctest::Approx(30));
    CHECK_THROWS_AS(parse_anchors(R"({"anchors": [[10, 13]]})"), Error);
    CHECK_THROWS_AS(parse_anchors(R"({"anchors": [[-1, 13, 10]]})"), Error);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("ariou command") {
    std::ostringstream out;
    std::ostringstream log;
    CHECK(cli::ariou("0,0,2,2,0", "0,0,2,2,0", out, log) == cli::kExitOk);
    CHECK(out.str() == "1.000000\n");
    out.str("");
    CHECK(cli::ariou("0,0,2,2,0", "1,0,2,2,0", out, log) == cli::kExitOk);
    CHECK(out.str() == "0.333333\n");
    CHECK(cli::ariou("0,0,2,2", "1,0,2,2,0", out, log) == cli::kExitError);
    CHECK(cli::ariou("0,0,2,2,zz", "1,0,2,2,0", out, log) == cli::kExitError);
    CHECK_FALSE(log.str().empty());
}

TEST_CASE("parse_box") {
    const auto b = cli::parse_box(" 1.5, -2,3,4 ,200");
    CHECK(b.cx == 1.5);
    CHECK(b.cy == -2);
    CHECK(b.theta == doctest::Approx(20));
    CHECK_THROWS_AS(cli::parse_box("1,2,3,4,5,6"), Error);
    CHECK_THROWS_AS(cli::parse_box("1,2,,4,5"), Error);
}

TEST_CASE("gen and plan exit codes") {
    std::ostringstream log;
    const auto gen1 = scratch("d1.json");
    const auto gen2 = scratch("d2.json");
    REQUIRE(cli::gen(fixture("scene_d_push.json"), gen1, log) == cli::kExitOk);
    REQUIRE(cli::gen(fixture("scene_d_push.json"), gen2, log) == cli::kExitOk);
    CHECK(read_text_file(gen1) == read_text_file(gen2));

    cli::PlanArgs args{gen1, config("gripper.json"), scratch("d_plan.json")};
    CHECK(cli::plan(args, log) == cli::kExitOk);
    const auto plan = nlohmann::json::parse(read_text_file(args.out));
    CHECK(plan["mode"] == "rigid");
    CHECK(plan["result"]["type"] == "push");

    cli::PlanArgs empty{fixture("empty_scene.json"), config("gripper.json"), scratch("empty_plan.json")};
    CHECK(cli::plan(empty, log) == cli::kExitNoAction);
    const auto none = nlohmann::json::parse(read_text_file(empty.out));
    CHECK(none["mode"] == "none");
    CHECK_FALSE(none["trace"].empty());

    cli::PlanArgs missing{scratch("nope.json"), config("gripper.json"), scratch("x.json")};
    CHECK(cli::plan(missing, log) == cli::kExitError);
    write_text_file(scratch("bad_gripper.json"), R"({"finger_width": -3})");
    cli::PlanArgs bad_grip{gen1, scratch("bad_gripper.json"), scratch("x.json")};
    CHECK(cli::plan(bad_grip, log) == cli::kExitError);
    write_text_file(scratch("bad_spec.json"), R"({"objects": [{"shape": "cuboid", "pose": [0, 0, 0], "dims": [0, 1, 1]}]})");
    CHECK(cli::gen(scratch("bad_spec.json"), scratch("x.json"), log) == cli::kExitError);
}

TEST_CASE("plan decodes a raw grid when the scene has no detections") {
    std::ostringstream log;
    const auto spec = fixture_spec("scene_b_second_candidate.json");
    const auto scene = generate(spec);
    SceneData data = to_scene_data(spec, scene);

    // One hot cell per truth detection, placed so the decoded box equals it.
    const auto anchors = default_anchors();
    RawGridData raw;
    raw.grid.grid_w = 20;
    raw.grid.grid_h = 15;
    raw.grid.stride = 32;
    raw.grid.num_anchors = 9;
    raw.grid.num_classes = 2;
    raw.grid.values.assign(raw.grid.expected_size(), -30.0);
    raw.class_names = {"cuboid", "toothpaste"};
    std::vector<Anchor> custom = anchors;
    for (const auto& d : data.detections) {
        const int col = static_cast<int>(d.box.cx / 32);
        const int row = static_cast<int>(d.box.cy / 32);
        const int a = static_cast<int>(d.box.theta / 20.0);
        custom[static_cast<std::size_t>(a)] = {d.box.w, d.box.h, d.box.theta};
        auto s = raw.grid.slot(col, row, a);
        const double fx = std::clamp(d.box.cx / 32 - col, 1e-12, 1 - 1e-12);
        const double fy = std::clamp(d.box.cy / 32 - row, 1e-12, 1 - 1e-12);
        s[0] = std::log(fx / (1 - fx));
        s[1] = std::log(fy / (1 - fy));
        s[2] = 0.0;
        s[3] = 0.0;
        s[4] = std::log(d.score / (1 - d.score));
        s[5 + (d.class_name == "toothpaste" ? 1 : 0)] = 40.0;
    }
    raw.anchors = custom;
    data.raw_grid = raw;
    const auto with_dets = scratch("raw_with_dets.json");
    save_scene(with_dets, data);
    data.detections.clear();
    const auto grid_only = scratch("raw_only.json");
    save_scene(grid_only, data);

    cli::PlanArgs a{with_dets, config("gripper.json"), scratch("plan_a.json")};
    cli::PlanArgs b{grid_only, config("gripper.json"), scratch("plan_b.json")};
    CHECK(cli::plan(a, log) == cli::kExitOk);
    CHECK(cli::plan(b, log) == cli::kExitOk);
    const auto pa = nlohmann::json::parse(read_text_file(a.out));
    const auto pb = nlohmann::json::parse(read_text_file(b.out));
    CHECK(pb["mode"] == "rigid");
    CHECK(pb["result"]["type"] == "grasp");
    for (int k = 0; k < 3; ++k) {
        CHECK(pb["result"]["position"][k].get<double>() ==
              doctest::Approx(pa["result"]["position"][k].get<double>()).epsilon(1e-6));
    }
    CHECK(log.str().find("using the detections") != std::string::npos);
}

TEST_CASE("eval reports every scene") {
    std::ostringstream log;
    const fs::path dir = scratch("eval_corpus");
    fs::remove_all(dir);
    fs::create_directories(dir);
    const char* fixtures[] = {"scene_a_covered.json", "scene_b_second_candidate.json", "scene_c_solution1.json",
                              "scene_d_push.json", "scene_towel_only.json"};
    for (int i = 0; i < 20; ++i) {
        auto spec = fixture_spec(fixtures[i % 5]);
        spec.seed += static_cast<std::uint64_t>(100 * i);
        spec.point_density = 2.5e5;
        char name[32];
        std::snprintf(name, sizeof name, "scene_%02d.json", i);
        save_scene(dir / name, to_scene_data(spec, generate(spec)));
    }
    const auto report_path = scratch("report.json");
    CHECK(cli::eval(dir, config("gripper.json"), report_path, log) == cli::kExitOk);
    const auto report = nlohmann::json::parse(read_text_file(report_path));
    REQUIRE(report["entries"].size() == 20);
    CHECK(report["entries"][0]["file"] == "scene_00.json");
    CHECK(report["entries"][19]["file"] == "scene_19.json");
    CHECK(report["summary"]["scenes"] == 20);
    CHECK(report["summary"]["errors"] == 0);
    CHECK(report["summary"]["planned"].get<int>() + report["summary"]["no_action"].get<int>() == 20);
    CHECK(report["summary"]["collision_checked"].get<int>() > 0);
    CHECK(report["summary"]["collision_oracle_agreement"].get<double>() == 1.0);

    write_text_file(dir / "zz_broken.json", "{");
    CHECK(cli::eval(dir, config("gripper.json"), report_path, log) == cli::kExitError);
    const auto broken = nlohmann::json::parse(read_text_file(report_path));
    CHECK(broken["entries"].size() == 21);
    CHECK(broken["summary"]["errors"] == 1);
    CHECK(broken["entries"][20]["error"].get<std::string>().find("parse") != std::string::npos);
}

}  // TEST_SUITE
