#include "sandbox3d/pipeline.hpp"

#include "sandbox3d/errors.hpp"
#include "sandbox3d/image_io.hpp"
#include "sandbox3d/text_coords.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <future>

namespace sandbox3d {

namespace fs = std::filesystem;

namespace {

class ArtifactWriter {
public:
    ArtifactWriter(fs::path root, bool enabled) : root_(std::move(root)), enabled_(enabled && !root_.empty()) {}

    void text(const std::string& rel, const std::string& content) {
        if (!enabled_) return;
        write_text_file(root_ / rel, content);
        paths_.push_back(rel);
    }
    void json(const std::string& rel, const nlohmann::json& j) { text(rel, j.dump(2) + "\n"); }
    void image(const std::string& rel, const RgbImage& img) {
        if (!enabled_) return;
        write_image(root_ / rel, img);
        paths_.push_back(rel);
    }
    const std::vector<std::string>& paths() const { return paths_; }

private:
    fs::path root_;
    bool enabled_;
    std::vector<std::string> paths_;
};

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

nlohmann::json pose_json(const CameraPose& p) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({p.rotation(r, 0), p.rotation(r, 1), p.rotation(r, 2)});
    return {{"rotation", rows}, {"translation", vec_json(p.translation)}};
}

}  // namespace

nlohmann::json sandbox_to_json(const SandboxScene& s) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : s.boxes) {
        nlohmann::json axes = nlohmann::json::array();
        for (int c = 0; c < 3; ++c) axes.push_back(vec_json(b.axes.col(c)));
        boxes.push_back({{"label", b.label},
                         {"instance_id", b.instance_id},
                         {"center", vec_json(b.center)},
                         {"axes", axes},
                         {"half_extents", vec_json(b.half_extents)}});
    }
    const auto& k = s.origin_intrinsics;
    return {{"boxes", boxes},
            {"origin_pose", pose_json(s.origin_pose)},
            {"origin_intrinsics",
             {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
            {"up", vec_json(s.up_axis)}};
}

SandboxScene sandbox_from_json(const nlohmann::json& j) {
    auto vec = [](const nlohmann::json& a) {
        if (!a.is_array() || a.size() != 3) throw std::invalid_argument("expected a 3-vector");
        return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    try {
        SandboxScene s;
        for (const auto& b : j.at("boxes")) {
            OrientedBox3 box;
            box.label = b.at("label").get<std::string>();
            box.instance_id = b.at("instance_id").get<int>();
            box.center = vec(b.at("center"));
            for (int c = 0; c < 3; ++c) box.axes.col(c) = vec(b.at("axes").at(static_cast<std::size_t>(c)));
            box.half_extents = vec(b.at("half_extents"));
            s.boxes.push_back(std::move(box));
        }
        const auto& p = j.at("origin_pose");
        for (int r = 0; r < 3; ++r) s.origin_pose.rotation.row(r) = vec(p.at("rotation").at(static_cast<std::size_t>(r))).transpose();
        s.origin_pose.translation = vec(p.at("translation"));
        if (!s.origin_pose.is_valid(1e-5)) throw std::invalid_argument("origin pose is not a rotation");
        const auto& k = j.at("origin_intrinsics");
        s.origin_intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                               k.at("cy").get<double>(), k.at("width").get<int>(), k.at("height").get<int>()};
        s.origin_intrinsics.validate();
        if (j.contains("up")) s.up_axis = vec(j.at("up")).normalized();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed sandbox: ") + e.what());
    }
}

namespace {

double lowest_up(std::span<const Vec3> pts, const Vec3& up) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) lo = std::min(lo, p.dot(up));
    return std::isfinite(lo) ? lo : 0.0;
}

}  // namespace

std::string image_digest(const RgbImage& image) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(image.data.data(), image.data.size(), md, &len, EVP_sha256(), nullptr);
    std::string hex = std::to_string(image.width) + "x" + std::to_string(image.height) + ":sha256:";
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

nlohmann::json transcript_json(const std::vector<ChatTurn>& turns) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : turns) {
        nlohmann::json parts = nlohmann::json::array();
        for (const auto& p : t.parts) {
            if (p.kind == ChatPart::Kind::text)
                parts.push_back({{"text", p.text}});
            else
                parts.push_back({{"image", image_digest(p.image)}});
        }
        out.push_back({{"role", std::string(to_string(t.role))}, {"parts", parts}});
    }
    return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const SceneSource& scene, const PipelineQuestion& q,
                            ChatVlm& inner_vlm, const fs::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    PipelineResult res;
    res.requested_mode = res.used_mode = cfg.mode;
    ArtifactWriter out(out_dir, cfg.write_artifacts);
    CountingVlm vlm(inner_vlm);
    std::string stage = "direction";
    nlohmann::json log;

    try {
        const ViewFrame& input = scene.input;
        PipelineMode mode = cfg.mode;
        auto downgrade = [&](const std::string& flag) {
            res.flags.push_back(flag);
            mode = PipelineMode::mv_only;
        };

        // 1. direction
        const auto direction_reply = vlm.complete(compose_direction_prompt(q.question, q.choices, input.image), cfg.decode);
        const auto motion = parse_motion(direction_reply);
        if (motion.defaulted) res.flags.push_back("direction_defaulted");
        out.text("direction.txt", "reply: " + direction_reply + "\nmotion: " + std::string(to_string(motion.motion)) +
                                      (motion.defaulted ? " (default)" : "") + "\n");

        // 2. trajectories
        stage = "trajectories";
        const auto trajectories = instantiate_trajectories(motion.motion, cfg.trajectory);
        {
            nlohmann::json tj = nlohmann::json::array();
            for (const auto& t : trajectories) {
                nlohmann::json poses = nlohmann::json::array();
                for (const auto& p : t.poses) poses.push_back(pose_json(p));
                tj.push_back({{"index", t.index}, {"heading_deg", t.heading_deg}, {"poses", poses}});
            }
            out.json("trajectories.json",
                     {{"motion", std::string(to_string(motion.motion))}, {"trajectories", tj}});
        }

        // 3. views
        stage = "views";
        std::vector<ViewFrame> views{input};
        for (const auto& t : trajectories) {
            try {
                auto frames = scene.generator->generate(input, t);
                for (auto& f : frames) views.push_back(std::move(f));
            } catch (const MissingViewError& e) {
                res.flags.push_back("missing_view m=" + std::to_string(e.trajectory()) +
                                    " t=" + std::to_string(e.timestep()));
            }
        }
        if (cfg.write_frames)
            for (const auto& v : views) out.image("frames/" + v.view_id.to_string() + default_image_extension(), v.image);

        // 4. depth and cameras
        stage = "depth";
        {
            const auto est = scene.depth->estimate(views);
            if (est.size() != views.size()) throw BundleFormatError("depth", "estimate count differs from view count");
            for (std::size_t i = 0; i < views.size(); ++i) {
                views[i].depth = est[i].depth;
                views[i].intrinsics = est[i].intrinsics;
                views[i].pose = est[i].pose;
            }
        }
        const ViewFrame& origin = views.front();
        if (views.size() < 2) downgrade("too_few_views");

        const bool needs_proxies = mode == PipelineMode::full || mode == PipelineMode::text_coords ||
                                   mode == PipelineMode::proxy_render;

        // 5. hints
        std::vector<ObjectHint> hints;
        if (needs_proxies) {
            stage = "hints";
            const auto reply = vlm.complete(compose_hints_prompt(q.question, q.choices, input.image), cfg.decode);
            nlohmann::json hj = {{"reply", reply}};
            try {
                const auto parsed = parse_object_hints(reply, input.image.width, input.image.height);
                hints = parsed.hints;
                if (parsed.clamped) res.flags.push_back("hints_clamped");
                nlohmann::json list = nlohmann::json::array();
                for (const auto& h : hints)
                    list.push_back({{"label", h.label}, {"x", h.center_px.x}, {"y", h.center_px.y}, {"object_id", h.object_id}});
                hj["hints"] = list;
                hj["clamped"] = parsed.clamped;
            } catch (const HintParseError& e) {
                hj["error"] = e.what();
                downgrade("hint_parse_error");
            }
            out.json("hints.json", hj);
        }

        // 6. elevation
        ProxyCloud cloud;
        if (mode != PipelineMode::mv_only && needs_proxies) {
            stage = "elevation";
            std::vector<std::future<std::pair<ProxyCloud, int>>> jobs;
            for (const auto& view : views) {
                jobs.push_back(std::async(std::launch::async, [&, vp = &view] {
                    ProxyCloud c;
                    int misses = 0;
                    for (const auto& h : hints) {
                        try {
                            c.append(elevate_object(*vp, h, *scene.segmenter, cfg.elevation).cloud);
                        } catch (const ObjectNotFoundError&) {
                            ++misses;
                        } catch (const EmptyProxyError&) {
                            ++misses;
                        }
                    }
                    return std::make_pair(std::move(c), misses);
                }));
            }
            int misses = 0;
            for (auto& j : jobs) {
                auto [c, m] = j.get();
                cloud.append(c);
                misses += m;
            }
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& p : cloud.points)
                pts.push_back({{"xyz", vec_json(p.xyz)}, {"object_id", p.object_id}, {"label", p.label},
                               {"view", p.view_id.to_string()}});
            out.json("proxies.json", {{"points", pts}, {"segment_misses", misses}});
        }

        // 7. sandbox
        ProxyCloud voted;
        if (mode != PipelineMode::mv_only && needs_proxies) {
            stage = "sandbox";
            if (mode == PipelineMode::proxy_render) {
                voted = filter_by_consensus(cloud, cfg.consensus);
                if (voted.empty()) downgrade("empty_sandbox");
            } else {
                SandboxDiagnostics diag;
                try {
                    res.sandbox = build_sandbox(cloud, cfg.consensus, cfg.cluster, origin.pose, origin.intrinsics,
                                                scene.up_axis, &diag);
                    auto sj = sandbox_to_json(*res.sandbox);
                    sj["diagnostics"] = {{"input_points", diag.input_points},
                                         {"after_consensus", diag.after_consensus},
                                         {"after_outlier_filter", diag.after_outlier_filter},
                                         {"noise_points", diag.noise_points},
                                         {"dropped_small_clusters", diag.dropped_small_clusters}};
                    out.json("sandbox.json", sj);
                } catch (const EmptySandboxError&) {
                    downgrade("empty_sandbox");
                }
            }
        }

        // 8. renders
        stage = "render";
        PromptContext ctx;
        ctx.stepback_m = cfg.stepback_m;
        const auto stepback_pose = stepback_camera(origin.pose, cfg.stepback_m);
        auto render_pair = [&](auto&& draw, std::span<const Vec3> extent_points, double ground) {
            const auto persp =
                perspective_camera(stepback_pose, origin.intrinsics, cfg.style, origin.pose, scene.up_axis, ground);
            const auto ortho = orthographic_camera(topdown_camera(extent_points, origin.pose, scene.up_axis, cfg.topdown_margin),
                                                   cfg.style, origin.pose, scene.up_axis, ground);
            ctx.renders.push_back(draw(persp));
            ctx.renders.push_back(draw(ortho));
        };
        if (mode == PipelineMode::full) {
            std::vector<Vec3> corners;
            for (const auto& b : res.sandbox->boxes)
                for (const auto& c : box_corners(b)) corners.push_back(c);
            render_pair([&](const RenderCamera& cam) { return render_boxes(*res.sandbox, cam, cfg.style); }, corners,
                        scene_ground_level(*res.sandbox));
        } else if (mode == PipelineMode::proxy_render) {
            std::vector<Vec3> pts;
            for (const auto& p : voted.points) pts.push_back(p.xyz);
            render_pair([&](const RenderCamera& cam) { return render_points(voted, cam, cfg.style); }, pts,
                        lowest_up(pts, scene.up_axis));
        } else if (mode == PipelineMode::pointcloud_render) {
            std::vector<Vec3> pts;
            std::vector<Rgb> cols;
            for (const auto& v : views)
                for (int y = 0; y < v.depth.height; y += cfg.pointcloud_stride)
                    for (int x = 0; x < v.depth.width; x += cfg.pointcloud_stride) {
                        if (!v.depth.valid_at(x, y)) continue;
                        const auto p = backproject({double(x), double(y)}, v.depth.at(x, y), v.intrinsics, v.pose);
                        if (!p) continue;
                        pts.push_back(*p);
                        const auto* c = v.image.px(x, y);
                        cols.push_back({c[0], c[1], c[2]});
                    }
            if (pts.empty()) {
                downgrade("empty_pointcloud");
            } else {
                render_pair([&](const RenderCamera& cam) { return render_colored_points(pts, cols, cam, cfg.style); },
                            pts, lowest_up(pts, scene.up_axis));
            }
        }
        if (mode == PipelineMode::mv_only)
            for (std::size_t i = 1; i < views.size(); ++i) ctx.frames.push_back(views[i].image);
        if (mode == PipelineMode::text_coords) ctx.coords_json = serialize_text_coords(*res.sandbox);
        if (ctx.renders.size() == 2) {
            const auto ext = default_image_extension();
            out.image(scene.scene_id + "_stepback" + ext, ctx.renders[0].image);
            out.image(scene.scene_id + "_topdown" + ext, ctx.renders[1].image);
        }
        res.used_mode = mode;

        // 9. prompt
        stage = "prompt";
        const auto turns = compose_prompt(q.question, q.choices, input.image, ctx, mode);
        out.json("prompt.json", {{"mode", std::string(to_string(mode))},
                                 {"prompt_version", std::string(kPromptVersion)},
                                 {"turns", transcript_json(turns)}});

        // 10. answer
        stage = "answer";
        res.raw_answer = vlm.complete(turns, cfg.decode);
        nlohmann::json aj = {{"reply", res.raw_answer}};
        try {
            const auto parsed = parse_answer(res.raw_answer, q.choices);
            res.predicted = parsed.letter;
            aj["letter"] = std::string(1, parsed.letter);
            aj["thinking"] = parsed.thinking;
        } catch (const AnswerParseError& e) {
            res.flags.push_back("answer_parse_error");
            aj["error"] = e.what();
        }
        out.json("answer.json", aj);
    } catch (const std::exception& e) {
        res.failed_stage = stage;
        res.error = e.what();
    }

    res.vlm_calls = vlm.calls();
    log = {{"question_id", q.id},
           {"scene", scene.scene_id},
           {"requested_mode", std::string(to_string(res.requested_mode))},
           {"used_mode", std::string(to_string(res.used_mode))},
           {"flags", res.flags},
           {"vlm_calls", res.vlm_calls},
           {"predicted", res.predicted ? std::string(1, *res.predicted) : std::string()}};
    if (res.failed_stage) {
        log["failed_stage"] = *res.failed_stage;
        log["error"] = res.error;
    }
    out.json("log.json", log);
    res.artifacts = out.paths();
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace sandbox3d
