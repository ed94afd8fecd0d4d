// sandbox3d: run, synth, eval, render.
//
// Exit codes: 0 success, 1 a record failed, 2 bad configuration or arguments.

#include "sandbox3d/bundle.hpp"
#include "sandbox3d/errors.hpp"
#include "sandbox3d/eval.hpp"
#include "sandbox3d/image_io.hpp"
#include "sandbox3d/pipeline.hpp"
#include "sandbox3d/synthetic_world.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace sandbox3d;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
    std::string config_path;
    std::string mode;
    std::string vlm;
    int parallel = -1;
};

PipelineConfig resolve_config(const CommonOptions& o) {
    PipelineConfig c = o.config_path.empty() ? PipelineConfig{} : load_config(o.config_path);
    if (!o.mode.empty()) {
        const auto m = mode_from_string(o.mode);
        if (!m) throw ConfigError("unknown mode '" + o.mode + "'");
        c.mode = *m;
        c.eval_modes.clear();
    }
    if (!o.vlm.empty()) {
        if (o.vlm == "geometry") c.vlm = VlmKind::geometry;
        else if (o.vlm == "random") c.vlm = VlmKind::random;
        else if (o.vlm == "http") c.vlm = VlmKind::http;
        else throw ConfigError("unknown vlm '" + o.vlm + "'");
    }
    if (o.parallel >= 0) c.parallel = o.parallel;
    c.validate();
    set_prompt_directory(c.prompt_dir);
    return c;
}

// A question file holds one JSON record, or JSONL whose first record is used.
QARecord read_question(const fs::path& path) {
    const auto text = read_text_file(path);
    try {
        return qa_from_json(nlohmann::json::parse(text));
    } catch (const std::exception&) {
        const auto records = read_jsonl(path.string());
        if (records.empty()) throw ConfigError("no question in " + path.string());
        return records.front();
    }
}

std::vector<AbstractMotion> parse_motions(const std::string& list) {
    std::vector<AbstractMotion> all = {AbstractMotion::left, AbstractMotion::fwd_left, AbstractMotion::forward,
                                       AbstractMotion::fwd_right, AbstractMotion::right};
    if (list == "all") return all;
    std::vector<AbstractMotion> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        const auto item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        bool found = false;
        for (auto m : all)
            if (to_string(m) == item) {
                out.push_back(m);
                found = true;
            }
        if (!found) throw ConfigError("unknown motion '" + item + "'");
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

int cmd_run(const CommonOptions& common, const std::string& bundle, const std::string& scene_ref,
            const std::string& question_path, const std::string& out) {
    PipelineConfig cfg;
    QARecord rec;
    try {
        cfg = resolve_config(common);
        rec = read_question(question_path);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "cannot read question: " << e.what() << "\n";
        return kExitConfig;
    }
    const std::string ref = !bundle.empty() ? bundle : !scene_ref.empty() ? scene_ref : rec.scene_ref;
    const fs::path base = bundle.empty() && scene_ref.empty() ? fs::path(question_path).parent_path() : fs::path();
    SceneSource scene;
    try {
        scene = open_scene(ref, base);
    } catch (const std::exception& e) {
        std::cerr << "cannot open scene '" << ref << "': " << e.what() << "\n";
        return kExitFailed;
    }
    std::shared_ptr<ChatVlm> vlm;
    try {
        vlm = make_vlm_factory(cfg)(rec, scene);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    const auto res = run_pipeline(cfg, scene, {rec.id, rec.question, rec.choices}, *vlm, out);
    nlohmann::json summary = {{"id", rec.id},
                              {"mode", std::string(to_string(res.used_mode))},
                              {"predicted", res.predicted ? std::string(1, *res.predicted) : std::string()},
                              {"gold", std::string(1, rec.gold)},
                              {"flags", res.flags}};
    if (res.failed_stage) {
        summary["failed_stage"] = *res.failed_stage;
        summary["error"] = res.error;
    }
    std::cout << summary.dump() << "\n";
    return res.failed() ? kExitFailed : kExitOk;
}

int cmd_synth(unsigned seed, int objects, const std::string& out, const std::string& motions, int questions,
              int benchmark, int per_world, const TrajectoryParams& traj) {
    try {
        if (benchmark > 0) {
            const auto records = make_synthetic_benchmark(benchmark, seed, per_world);
            write_jsonl((fs::path(out) / "benchmark.jsonl").string(), records);
            std::cout << "wrote " << records.size() << " questions to " << (fs::path(out) / "benchmark.jsonl").string()
                      << "\n";
            return kExitOk;
        }
        const auto world = generate_world(seed, objects);
        write_world_bundle(out, world, parse_motions(motions), traj);
        if (questions > 0) {
            auto qs = generate_questions(world, questions, seed);
            for (auto& q : qs) q.scene_ref = ".";
            write_jsonl((fs::path(out) / "questions.jsonl").string(), qs);
        }
        std::cout << "wrote bundle " << out << " (" << world.cuboids.size() << " objects)\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitFailed;
    }
}

int cmd_eval(const CommonOptions& common, const std::string& benchmark, const std::string& out,
             const std::string& modes) {
    PipelineConfig cfg;
    std::vector<QARecord> records;
    try {
        cfg = resolve_config(common);
        if (!modes.empty()) {
            cfg.eval_modes.clear();
            std::size_t start = 0;
            while (start <= modes.size()) {
                const auto comma = modes.find(',', start);
                const auto item = modes.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
                const auto m = mode_from_string(item);
                if (!m) throw ConfigError("unknown mode '" + item + "'");
                cfg.eval_modes.push_back(*m);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        }
        records = read_jsonl(benchmark);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    RunReport report;
    try {
        report = run_eval(cfg, records, make_vlm_factory(cfg), fs::path(benchmark).parent_path(), out);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    write_report(report, out);
    std::cout << report_csv(report);
    return report.failed_records() > 0 ? kExitFailed : kExitOk;
}

int cmd_render(const std::string& sandbox_path, const std::string& view, const std::string& out, int width,
               int height, double stepback) {
    SandboxScene scene;
    try {
        scene = sandbox_from_json(nlohmann::json::parse(read_text_file(sandbox_path)));
    } catch (const std::exception& e) {
        std::cerr << "cannot read sandbox: " << e.what() << "\n";
        return kExitConfig;
    }
    RenderStyle style;
    style.width = width;
    style.height = height;
    try {
        const double ground = scene_ground_level(scene);
        RenderCamera cam;
        if (view == "topdown")
            cam = orthographic_camera(topdown_camera(scene, 0.1), style, scene.origin_pose, scene.up_axis, ground);
        else if (view == "stepback")
            cam = perspective_camera(stepback_camera(scene.origin_pose, stepback), scene.origin_intrinsics, style,
                                     scene.origin_pose, scene.up_axis, ground);
        else if (view == "origin")
            cam = perspective_camera(scene.origin_pose, scene.origin_intrinsics, style, scene.origin_pose,
                                     scene.up_axis, ground);
        else {
            std::cerr << "unknown view '" << view << "'\n";
            return kExitConfig;
        }
        const auto r = render_boxes(scene, cam, style);
        write_image(out, r.image);
        for (const auto& e : r.legend) std::cout << e.color_name << ": " << e.label << " (id " << e.instance_id << ")\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitFailed;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D sandbox toolkit: box abstraction of a scene for spatial question answering"};
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "Config file (key = value with [sections])");
        sub->add_option("--mode", common.mode, "full, mv_only, text_coords, proxy_render, pointcloud_render");
        sub->add_option("--vlm", common.vlm, "geometry, random or http");
    };

    std::string bundle, scene_ref, question, out;
    auto* run = app.add_subcommand("run", "Answer one question about one scene");
    add_common(run);
    run->add_option("--bundle", bundle, "Scene bundle directory");
    run->add_option("--scene", scene_ref, "Scene reference, e.g. synthetic:7:3");
    run->add_option("--question", question, "Question record (JSON or JSONL)")->required();
    run->add_option("--out", out, "Artifact directory")->required();

    unsigned seed = 0;
    int objects = 3, questions = 0, benchmark = 0, per_world = 5;
    std::string motions = "all";
    TrajectoryParams traj;
    auto* synth = app.add_subcommand("synth", "Write a synthetic scene bundle or benchmark");
    synth->add_option("--seed", seed, "World seed (first seed for --benchmark)");
    synth->add_option("--objects", objects, "Number of cuboids (1-8)");
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--motions", motions, "Comma-separated motions to render, or 'all'");
    synth->add_option("--trajectories", traj.count, "Trajectories per motion");
    synth->add_option("--length", traj.length, "Frames per trajectory");
    synth->add_option("--questions", questions, "Also write this many questions about the bundle");
    synth->add_option("--benchmark", benchmark, "Write an N-question benchmark.jsonl over synthetic worlds instead");
    synth->add_option("--per-world", per_world, "Questions per world in --benchmark mode");

    std::string bench_path, modes;
    auto* eval = app.add_subcommand("eval", "Evaluate a JSONL benchmark");
    add_common(eval);
    eval->add_option("--benchmark", bench_path, "Benchmark JSONL")->required();
    eval->add_option("--out", out, "Report directory")->required();
    eval->add_option("--modes", modes, "Comma-separated modes (overrides config)");
    eval->add_option("--parallel", common.parallel, "Records in flight");

    std::string sandbox_path, view = "topdown";
    int width = 512, height = 512;
    double stepback = 2.0;
    auto* render = app.add_subcommand("render", "Render a sandbox.json");
    render->add_option("--sandbox", sandbox_path, "sandbox.json written by a run")->required();
    render->add_option("--view", view, "topdown, stepback or origin");
    render->add_option("--out", out, "Image path (.png or .ppm)")->required();
    render->add_option("--width", width);
    render->add_option("--height", height);
    render->add_option("--stepback", stepback, "Metres behind the camera for the stepback view");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (run->parsed()) return cmd_run(common, bundle, scene_ref, question, out);
    if (synth->parsed()) return cmd_synth(seed, objects, out, motions, questions, benchmark, per_world, traj);
    if (eval->parsed()) return cmd_eval(common, bench_path, out, modes);
    if (render->parsed()) return cmd_render(sandbox_path, view, out, width, height, stepback);
    return kExitConfig;
}
