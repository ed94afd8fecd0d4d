#include "sandbox3d/bundle.hpp"
#include "sandbox3d/config.hpp"
#include "sandbox3d/errors.hpp"
#include "sandbox3d/image_io.hpp"
#include "sandbox3d/qa.hpp"
#include "sandbox3d/synthetic_providers.hpp"
#include "sandbox3d/text_coords.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <fstream>

using namespace sandbox3d;
using namespace sandbox3d::test;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_manifest(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    return nlohmann::json::parse(in);
}

void write_manifest(const fs::path& dir, const nlohmann::json& j) {
    std::ofstream(dir / "manifest.json") << j.dump(2);
}

std::string bundle_error_field(const fs::path& dir) {
    try {
        load_bundle(dir);
    } catch (const BundleFormatError& e) {
        return e.field();
    }
    return "<none>";
}

TrajectoryParams small_params() {
    TrajectoryParams p;
    p.count = 3;
    p.length = 4;
    return p;
}

}  // namespace

TEST_SUITE("bundle") {
    TEST_CASE("depth file round trip keeps NaN and exact floats") {
        ScratchDir tmp("depth");
        DepthGrid d(5, 3);
        std::mt19937_64 rng(4);
        for (auto& v : d.values) v = static_cast<float>(uniform(rng, 0.1, 20));
        d.values[7] = std::numeric_limits<float>::quiet_NaN();
        write_depth_file(tmp / "d.f32", d);
        CHECK(fs::file_size(tmp / "d.f32") == 60);
        const auto back = read_depth_file(tmp / "d.f32", 5, 3);
        REQUIRE(back.size() == 15);
        for (std::size_t i = 0; i < 15; ++i) {
            if (i == 7) CHECK(std::isnan(back[i]));
            else CHECK(back[i] == d.values[i]);
        }
        CHECK_THROWS_AS(read_depth_file(tmp / "d.f32", 5, 4), BundleFormatError);
    }

    TEST_CASE("world bundle round trip") {
        ScratchDir tmp("bundle");
        const auto w = generate_world(5, 3);
        write_world_bundle(tmp.path(), w, {AbstractMotion::fwd_left}, small_params());
        const auto b = load_bundle(tmp.path());
        REQUIRE(b.views.size() == 1 + 3 * 4);
        CHECK(b.up_axis.isApprox(w.up_axis));
        const auto& in = b.input();
        CHECK(in.frame.view_id.is_input());
        CHECK(in.frame.pose.is_valid(1e-9));
        CHECK(in.frame.intrinsics.fx == doctest::Approx(w.intrinsics.fx));

        const auto fresh = render_view(w, w.input_pose, ViewId::input());
        CHECK(in.frame.image.data == fresh.image.data);
        CHECK(std::equal(in.frame.depth.values.begin(), in.frame.depth.values.end(), fresh.depth.values.begin(),
                         [](float a, float c) { return a == c || (std::isnan(a) && std::isnan(c)); }));
        for (const auto& m : b.masks) {
            const auto loaded = load_mask(b, m);
            const auto truth = render_instance_mask(w, b.views[m.view].frame.pose, w.intrinsics, m.object_id);
            CHECK(loaded.bits == truth.bits);
            CHECK(loaded.label == m.label);
        }
        // Poses survive the 4x4 round trip to double precision.
        SyntheticGenerator gen(std::make_shared<const WorldSpec>(w));
        const auto trajs = instantiate_trajectories(AbstractMotion::fwd_left, small_params());
        const auto frames = gen.generate(fresh, trajs[2]);
        BundleGenerator bgen(std::make_shared<const Bundle>(b));
        const auto stored = bgen.generate(fresh, trajs[2]);
        REQUIRE(stored.size() == frames.size());
        for (std::size_t i = 0; i < frames.size(); ++i) {
            CHECK(stored[i].pose.rotation.isApprox(frames[i].pose.rotation, 1e-12));
            CHECK(stored[i].pose.translation.isApprox(frames[i].pose.translation, 1e-12));
            CHECK(stored[i].view_id == frames[i].view_id);
        }
    }

    TEST_CASE("missing view surfaces its trajectory and timestep") {
        ScratchDir tmp("missing");
        const auto w = generate_world(5, 3);
        write_world_bundle(tmp.path(), w, {AbstractMotion::fwd_left}, small_params());
        auto j = read_manifest(tmp.path());
        auto& views = j["views"];
        for (auto it = views.begin(); it != views.end(); ++it)
            if ((*it)["trajectory"] == 1 && (*it)["timestep"] == 2) {
                views.erase(it);
                break;
            }
        j["masks"] = nlohmann::json::array();
        write_manifest(tmp.path(), j);
        const auto b = std::make_shared<const Bundle>(load_bundle(tmp.path()));
        BundleGenerator gen(b);
        const auto trajs = instantiate_trajectories(AbstractMotion::fwd_left, small_params());
        CHECK_NOTHROW(gen.generate(b->input().frame, trajs[0]));
        try {
            gen.generate(b->input().frame, trajs[1]);
            FAIL("expected MissingViewError");
        } catch (const MissingViewError& e) {
            CHECK(e.trajectory() == 1);
            CHECK(e.timestep() == 2);
        }
        // Views of a different motion do not stand in.
        const auto other = instantiate_trajectories(AbstractMotion::fwd_right, small_params());
        CHECK_THROWS_AS(gen.generate(b->input().frame, other[0]), MissingViewError);
    }

    TEST_CASE("malformed bundles name the failing field") {
        ScratchDir tmp("bad");
        const auto w = generate_world(2, 2);
        write_world_bundle(tmp.path(), w, {AbstractMotion::forward}, small_params());
        const auto good = read_manifest(tmp.path());

        // Truncated depth.
        {
            const auto depth = tmp / good["views"][0]["depth"].get<std::string>();
            const auto saved = read_file_bytes(depth);
            fs::resize_file(depth, fs::file_size(depth) - 4);
            CHECK(bundle_error_field(tmp.path()) == "depth length");
            write_file_bytes(depth, saved);
        }
        // Non-rigid pose.
        {
            auto j = good;
            j["views"][1]["pose"][0] = 2.0;
            write_manifest(tmp.path(), j);
            CHECK(bundle_error_field(tmp.path()) == "pose");
        }
        {
            auto j = good;
            j["views"][1]["pose"] = {1, 2, 3};
            write_manifest(tmp.path(), j);
            CHECK(bundle_error_field(tmp.path()) == "pose");
        }
        {
            auto j = good;
            j["views"][0]["intrinsics"]["fx"] = -1.0;
            write_manifest(tmp.path(), j);
            CHECK(bundle_error_field(tmp.path()) == "intrinsics");
        }
        {
            auto j = good;
            for (auto& v : j["views"]) v["trajectory"] = 0;
            write_manifest(tmp.path(), j);
            CHECK(bundle_error_field(tmp.path()) == "views");
        }
        {
            auto j = good;
            j["views"][0].erase("image");
            write_manifest(tmp.path(), j);
            CHECK(bundle_error_field(tmp.path()) == "views[0].image");
        }
        {
            auto j = good;
            j["masks"][0]["view"] = 999;
            write_manifest(tmp.path(), j);
            CHECK(bundle_error_field(tmp.path()) == "masks[0].view");
        }
        {
            std::ofstream(tmp / "manifest.json") << "{ not json";
            CHECK(bundle_error_field(tmp.path()) == "manifest.json");
        }
        write_manifest(tmp.path(), good);
        CHECK_NOTHROW(load_bundle(tmp.path()));
        CHECK(bundle_error_field(tmp / "nowhere") == "manifest.json");
    }

    TEST_CASE("bundle segmenter resolves hints through the input masks") {
        ScratchDir tmp("seg");
        const auto w = generate_world(8, 3);
        write_world_bundle(tmp.path(), w, {AbstractMotion::forward}, small_params());
        const auto b = std::make_shared<const Bundle>(load_bundle(tmp.path()));
        const auto scene = bundle_scene(b);
        const auto hints = reference_hints(scene);
        const auto truth = visible_object_hints(w, w.input_pose, w.intrinsics);
        CHECK(hints.size() == truth.size());
        for (const auto& h : hints) {
            for (const auto& v : b->views) {
                const auto* c = [&]() -> const CuboidSpec* {
                    for (const auto& cc : w.cuboids)
                        if (cc.label == h.label) return &cc;
                    return nullptr;
                }();
                REQUIRE(c);
                const auto expect = render_instance_mask(w, v.frame.pose, w.intrinsics, h.object_id);
                if (expect.empty()) {
                    CHECK_THROWS_AS(scene.segmenter->segment(v.frame, h), ObjectNotFoundError);
                } else {
                    CHECK(scene.segmenter->segment(v.frame, h).bits == expect.bits);
                }
            }
        }
    }

    TEST_CASE("open_scene dispatches on the reference") {
        ScratchDir tmp("open");
        const auto w = generate_world(3, 2);
        write_world_bundle(tmp / "b", w, {AbstractMotion::forward}, small_params());
        CHECK(open_scene("b", tmp.path()).bundle);
        CHECK(open_scene("synthetic:3:2").world);
        CHECK_THROWS_AS(open_scene("missing_dir", tmp.path()), BundleFormatError);
    }
}

TEST_SUITE("text_coords") {
    SandboxScene one_box_scene(double yaw_deg) {
        SandboxScene s;
        s.up_axis = Vec3(0, -1, 0);
        OrientedBox3 b;
        b.center = Vec3(1.234, 0.5, 3.0);
        b.half_extents = Vec3(0.2, 0.3, 0.4);
        b.axes = yaw_rotation(yaw_deg);
        b.label = "chair";
        b.instance_id = 0;
        s.boxes.push_back(b);
        return s;
    }

    TEST_CASE("fixed snippet") {
        CHECK(serialize_text_coords(one_box_scene(0.0)) ==
              R"({"frame":"origin_camera","units":"m","axes":{"x":"right","y":"down","z":"forward"},)"
              R"("yaw":"degrees of the first box axis about the up axis, 0 along +x, positive toward +z",)"
              R"("boxes":[{"label":"chair","instance_id":0,"center":[1.23,0.5,3.0],"size":[0.4,0.6,0.8],"yaw_deg":0.0}]})");
    }

    TEST_CASE("empty scene") {
        SandboxScene s;
        const auto text = serialize_text_coords(s);
        CHECK(text.find(R"("boxes":[])") != std::string::npos);
        CHECK(parse_text_coords(text).empty());
    }

    TEST_CASE("yaw follows the documented sign and folds into (-90, 90]") {
        // yaw_rotation(t) turns +x toward -z, so the text yaw is -t.
        CHECK(yaw_about_up(yaw_rotation(30).col(0), Vec3(0, -1, 0)) == doctest::Approx(-30));
        CHECK(yaw_about_up(Vec3(1, 0, 1), Vec3(0, -1, 0)) == doctest::Approx(45));
        CHECK(yaw_about_up(Vec3(-1, 0, 0), Vec3(0, -1, 0)) == doctest::Approx(0));
        CHECK(yaw_about_up(Vec3(0, 0, 1), Vec3(0, -1, 0)) == doctest::Approx(90));
        CHECK(yaw_about_up(Vec3(0, 0, -1), Vec3(0, -1, 0)) == doctest::Approx(90));
    }

    TEST_CASE("property: serialize then parse recovers boxes to rounding") {
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 100; ++trial) {
            SandboxScene s;
            s.origin_pose = random_pose(rng);
            s.up_axis = s.origin_pose.rotation * Vec3(0, -1, 0);
            const int n = uniform_int(rng, 1, 6);
            for (int i = n - 1; i >= 0; --i) {
                OrientedBox3 b;
                b.center = s.origin_pose.to_world(Vec3(uniform(rng, -3, 3), uniform(rng, -1, 1), uniform(rng, 1, 8)));
                b.half_extents = Vec3(uniform(rng, 0.1, 1), uniform(rng, 0.1, 1), uniform(rng, 0.1, 1));
                b.axes = s.origin_pose.rotation * yaw_rotation(uniform(rng, -89, 89));
                b.label = "obj" + std::to_string(i);
                b.instance_id = i;
                s.boxes.push_back(b);
            }
            const auto parsed = parse_text_coords(serialize_text_coords(s));
            const auto direct = to_text_boxes(s);
            REQUIRE(parsed.size() == direct.size());
            for (std::size_t i = 0; i < parsed.size(); ++i) {
                CHECK(parsed[i].instance_id == static_cast<int>(i));
                CHECK(parsed[i].label == direct[i].label);
                CHECK((parsed[i].center - direct[i].center).cwiseAbs().maxCoeff() <= 0.005 + 1e-9);
                CHECK((parsed[i].size - direct[i].size).cwiseAbs().maxCoeff() <= 0.005 + 1e-9);
                CHECK(std::abs(parsed[i].yaw_deg - direct[i].yaw_deg) <= 0.05 + 1e-9);
            }
        }
    }

    TEST_CASE("malformed text") {
        CHECK_THROWS_AS(parse_text_coords("not json"), std::invalid_argument);
        CHECK_THROWS_AS(parse_text_coords(R"({"frame":"world","boxes":[]})"), std::invalid_argument);
        CHECK_THROWS_AS(parse_text_coords(R"({"frame":"origin_camera","boxes":[{"label":"x"}]})"), std::invalid_argument);
    }
}

TEST_SUITE("config") {
    TEST_CASE("defaults") {
        const auto c = parse_config("");
        CHECK(c.mode == PipelineMode::full);
        CHECK(c.trajectory.count == 3);
        CHECK(c.trajectory.length == 4);
        CHECK(c.consensus.delta == doctest::Approx(0.10));
        CHECK(c.consensus.n_agree == 2);
        CHECK(c.cluster.min_pts == 5);
        CHECK(c.elevation.n_pts == 30);
        CHECK(c.vlm == VlmKind::geometry);
        CHECK(c.modes_to_evaluate() == std::vector<PipelineMode>{PipelineMode::full});
    }

    TEST_CASE("values land in the right fields") {
        const auto c = parse_config("mode = text_coords\nseed = 9\n[trajectory]\ncount = 5 ; c\nsweep = 30\n"
                                    "[cluster]\neps = 0.25\ngravity_aligned = no\n[vlm]\nprovider = http\n"
                                    "base_url = \"http://localhost:8000/v1#frag\"\nmax_retries = 1\n"
                                    "[eval]\nmodes = full, mv_only\n");
        CHECK(c.mode == PipelineMode::text_coords);
        CHECK(c.seed == 9);
        CHECK(c.trajectory.count == 5);
        CHECK(c.trajectory.sweep_deg == 30);
        CHECK(c.cluster.eps == 0.25);
        CHECK_FALSE(c.cluster.gravity_aligned);
        CHECK(c.vlm == VlmKind::http);
        CHECK(c.http.base_url == "http://localhost:8000/v1#frag");
        CHECK(c.http.max_retries == 1);
        CHECK(c.modes_to_evaluate() == std::vector<PipelineMode>{PipelineMode::full, PipelineMode::mv_only});
    }

    TEST_CASE("errors carry the line number") {
        auto message = [](const std::string& text) {
            try {
                parse_config(text);
            } catch (const ConfigError& e) {
                return std::string(e.what());
            }
            return std::string("<no error>");
        };
        CHECK(message("mode = full\n\nbogus = 1\n").find("line 3") != std::string::npos);
        CHECK(message("[cluster]\neps = abc\n").find("line 2") != std::string::npos);
        CHECK(message("[cluster\n").find("line 1") != std::string::npos);
        CHECK(message("mode full\n").find("line 1") != std::string::npos);
        CHECK(message("mode = sideways\n").find("unknown mode") != std::string::npos);
        CHECK(message("[vlm]\nprovider = carrier_pigeon\n").find("line 2") != std::string::npos);
        CHECK(message("[trajectory]\ncount = 0\n").find("trajectory.count") != std::string::npos);
        CHECK(message("[eval]\nartifacts = maybe\n").find("boolean") != std::string::npos);
        CHECK(message("[cluster]\neps = -1\n").find("cluster.eps") != std::string::npos);
    }

    TEST_CASE("load_config reads files") {
        ScratchDir tmp("cfg");
        std::ofstream(tmp / "a.cfg") << "[consensus]\nn_agree = 1\n";
        CHECK(load_config(tmp / "a.cfg").consensus.n_agree == 1);
        CHECK_THROWS_AS(load_config(tmp / "missing.cfg"), ConfigError);
    }
}

TEST_SUITE("qa_records") {
    TEST_CASE("jsonl round trip") {
        ScratchDir tmp("qa");
        const auto records = make_synthetic_benchmark(12, 3);
        write_jsonl((tmp / "b.jsonl").string(), records);
        const auto back = read_jsonl((tmp / "b.jsonl").string());
        REQUIRE(back.size() == records.size());
        for (std::size_t i = 0; i < back.size(); ++i) CHECK(to_json(back[i]) == to_json(records[i]));
    }

    TEST_CASE("bad records report the line") {
        ScratchDir tmp("qa_bad");
        std::ofstream(tmp / "b.jsonl")
            << R"({"id":"a","scene":"s","question":"q","choices":["x","y"],"answer":"A"})" << "\n\n"
            << R"({"id":"b","scene":"s","question":"q","choices":["x","y"],"answer":"C"})" << "\n";
        try {
            read_jsonl((tmp / "b.jsonl").string());
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find(":3:") != std::string::npos);
        }
        CHECK_THROWS_AS(read_jsonl((tmp / "none.jsonl").string()), Error);
        const auto r = qa_from_json(nlohmann::json::parse(R"({"id":"a","scene":"s","question":"q","choices":["x"],"answer":"A"})"));
        CHECK(r.category == "uncategorized");
    }
}
