// Command-line front end: plan, gen, ariou, eval.

#include <iostream>

#include <CLI11.hpp>

#include "rgrasp/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Rotated-box grasp planning for mixed rigid/towel scenes"};
    app.require_subcommand(1);

    rgrasp::cli::PlanArgs plan_args;
    auto* plan = app.add_subcommand("plan", "Plan a grasp or push for a scene file");
    plan->add_option("--scene", plan_args.scene, "Scene file")->required();
    plan->add_option("--gripper", plan_args.gripper, "Gripper / class-role config")->required();
    plan->add_option("--out", plan_args.out, "Plan file to write")->required();
    plan->add_option("--conf", plan_args.conf, "Confidence threshold for raw-grid decoding")
        ->check(CLI::Range(0.0, 1.0));
    plan->add_option("--nms", plan_args.nms, "ArIOU suppression threshold")->check(CLI::Range(0.0, 1.0));

    std::string spec_path;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic scene file");
    gen->add_option("--spec", spec_path, "Scene spec file")->required();
    gen->add_option("--out", gen_out, "Scene file to write")->required();

    std::string box_a;
    std::string box_b;
    auto* ariou = app.add_subcommand("ariou", "Angle-related IoU of two boxes (cx,cy,w,h,theta_deg)");
    ariou->add_option("--a", box_a, "First box")->required();
    ariou->add_option("--b", box_b, "Second box")->required();

    std::string scenes_dir;
    std::string eval_gripper;
    std::string report;
    auto* eval = app.add_subcommand("eval", "Plan a directory of scenes and write a report");
    eval->add_option("--scenes", scenes_dir, "Directory of scene files")->required();
    eval->add_option("--gripper", eval_gripper, "Gripper / class-role config")->required();
    eval->add_option("--report", report, "Report file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : rgrasp::cli::kExitError;
    }

    if (*plan) {
        return rgrasp::cli::plan(plan_args, std::cerr);
    }
    if (*gen) {
        return rgrasp::cli::gen(spec_path, gen_out, std::cerr);
    }
    if (*ariou) {
        return rgrasp::cli::ariou(box_a, box_b, std::cout, std::cerr);
    }
    return rgrasp::cli::eval(scenes_dir, eval_gripper, report, std::cerr);
}
