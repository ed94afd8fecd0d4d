#include "sandbox3d/errors.hpp"
#include "sandbox3d/prompts.hpp"
#include "sandbox3d/providers.hpp"
#include "sandbox3d/synthetic_providers.hpp"
#include "sandbox3d/synthetic_world.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <map>
#include <thread>

using namespace sandbox3d;
using namespace sandbox3d::test;

namespace {

std::vector<ChatTurn> user_text(const std::string& text) {
    return {ChatTurn{ChatRole::user, {ChatPart::from_text(text)}}};
}

}  // namespace

TEST_SUITE("providers") {
    TEST_CASE("hint parsing: plain array") {
        const auto r = parse_object_hints(R"([{"label":"chair","x":120,"y":200}])", 256, 256);
        REQUIRE(r.hints.size() == 1);
        CHECK(r.hints[0].label == "chair");
        CHECK(r.hints[0].center_px.x == 120);
        CHECK(r.hints[0].center_px.y == 200);
        CHECK(r.hints[0].object_id == 0);
        CHECK_FALSE(r.clamped);
    }

    TEST_CASE("hint parsing: clamping, dedupe, prose around the array") {
        const auto r = parse_object_hints(
            "Sure! Here you go:\n```json\n[{\"label\":\"lamp\",\"x\":261,\"y\":-4},"
            "{\"label\":\"lamp\",\"x\":261,\"y\":-4},{\"label\":\"sofa\",\"x\":10.6,\"y\":20}]\n```",
            256, 256);
        REQUIRE(r.hints.size() == 2);
        CHECK(r.clamped);
        CHECK(r.hints[0].center_px.x == 255);
        CHECK(r.hints[0].center_px.y == 0);
        CHECK(r.hints[1].label == "sofa");
        CHECK(r.hints[1].object_id == 1);
    }

    TEST_CASE("hint parsing: failures") {
        CHECK_THROWS_AS(parse_object_hints("I see a chair and a table.", 64, 64), HintParseError);
        CHECK_THROWS_AS(parse_object_hints("[not json", 64, 64), HintParseError);
        CHECK_THROWS_AS(parse_object_hints(R"({"label":"a","x":1,"y":1})", 64, 64), HintParseError);
        CHECK(parse_object_hints("[]", 64, 64).hints.empty());
        // A bracketed aside before the real array is skipped.
        const auto r = parse_object_hints(R"(objects [see below]: [{"label":"cup","x":3,"y":4}])", 64, 64);
        REQUIRE(r.hints.size() == 1);
        CHECK(r.hints[0].label == "cup");
    }

    TEST_CASE("answer parsing: tags, fallbacks, failures") {
        const std::vector<std::string> choices{"left", "right"};
        const auto a = parse_answer("<thinking>left of sofa</thinking><answer>B</answer>", choices);
        CHECK(a.letter == 'B');
        CHECK(a.thinking == "left of sofa");
        CHECK(parse_answer("Answer: B", choices).letter == 'B');
        CHECK(parse_answer("<answer> (A) </answer>", choices).letter == 'A');
        CHECK(parse_answer("<answer>It is to the right.</answer>", choices).letter == 'B');
        CHECK(parse_answer("reasoning...\n\nright\n", choices).letter == 'B');
        CHECK_THROWS_AS(parse_answer("<answer>maybe</answer>", choices), AnswerParseError);
        CHECK_THROWS_AS(parse_answer("<answer>C</answer>", choices), AnswerParseError);
        CHECK_THROWS_AS(parse_answer("", choices), AnswerParseError);
        // Both choice texts present: ambiguous.
        CHECK_THROWS_AS(parse_answer("<answer>left or right</answer>", choices), AnswerParseError);
        CHECK(parse_answer("<answer>the sofa</answer>", {"the chair", "the sofa", "the lamp"}).letter == 'B');
    }

    TEST_CASE("choice helpers") {
        CHECK(choice_letter(0) == 'A');
        CHECK(choice_letter(3) == 'D');
        CHECK(count_listed_choices(question_block("q?", {"a", "b", "c", "d"})) == 4);
        CHECK(count_listed_choices("no choices here") == 0);
        CHECK(stable_hash("") == 14695981039346656037ull);
        CHECK(stable_hash("a") == 0xaf63dc4c8601ec8cull);
    }

    TEST_CASE("scripted mock returns queued replies and records calls") {
        ScriptedVlm vlm({"fwd-left"});
        CHECK(vlm.complete(user_text("which way?"), {}) == "fwd-left");
        CHECK(vlm.call_count() == 1);
        CHECK(vlm.calls()[0][0].joined_text() == "which way?");
        CHECK_THROWS_AS(vlm.complete(user_text("again"), {}), ProviderError);
        vlm.push("B");
        CHECK(vlm.complete(user_text("x"), {}) == "B");
    }

    TEST_CASE("random mock is seed-deterministic and uniform over listed choices") {
        RandomChoiceVlm a(7), b(7);
        std::map<char, int> hist;
        for (int i = 0; i < 400; ++i) {
            auto turns = compose_prompt("question " + std::to_string(i), {"w", "x", "y", "z"}, RgbImage(2, 2), {},
                                        PipelineMode::mv_only);
            const auto ra = a.complete(turns, {}), rb = b.complete(turns, {});
            CHECK(ra == rb);
            hist[parse_answer(ra, {"w", "x", "y", "z"}).letter]++;
        }
        CHECK(hist.size() == 4);
        for (auto [c, n] : hist) CHECK(n > 60);
        auto dir = compose_direction_prompt("q", {"a", "b"}, RgbImage(2, 2));
        CHECK(parse_motion(a.complete(dir, {})).motion == AbstractMotion::forward);
    }

    TEST_CASE("counting wrapper") {
        ScriptedVlm inner({"a", "b"});
        CountingVlm c(inner);
        c.complete(user_text("1"), {});
        c.complete(user_text("2"), {});
        CHECK(c.calls() == 2);
    }

    TEST_CASE("synthetic generator frames carry composed poses and analytic depth") {
        const auto w = std::make_shared<const WorldSpec>(generate_world(5, 3));
        const auto scene_input = render_view(*w, w->input_pose, ViewId::input());
        SyntheticGenerator gen(w);
        TrajectoryParams tp;
        tp.count = 2;
        const auto trajs = instantiate_trajectories(AbstractMotion::fwd_left, tp);
        const auto frames = gen.generate(scene_input, trajs[1]);
        REQUIRE(frames.size() == 4);
        for (int t = 0; t < 4; ++t) {
            const auto& f = frames[t];
            CHECK(f.view_id == ViewId{1, t + 1});
            const auto expected = w->input_pose.compose(trajs[1].poses[t]);
            CHECK((f.pose.translation - expected.translation).norm() < 1e-12);
            CHECK((f.pose.rotation - expected.rotation).norm() < 1e-12);
            for (int y = 0; y < f.depth.height; y += 17)
                for (int x = 0; x < f.depth.width; x += 17) {
                    const auto h = trace_pixel(*w, {double(x), double(y)}, f.intrinsics, f.pose);
                    if (h.instance_id == PixelHit::kNoHit)
                        CHECK_FALSE(f.depth.valid_at(x, y));
                    else
                        CHECK(std::abs(f.depth.at(x, y) - h.depth) < 1e-5 * h.depth);
                }
        }
        SyntheticDepthEstimator est(w);
        const auto e = est.estimate(frames);
        REQUIRE(e.size() == frames.size());
        for (std::size_t i = 0; i < frames.size(); ++i) {
            CHECK(e[i].depth.values.size() == frames[i].depth.values.size());
            CHECK(std::equal(e[i].depth.values.begin(), e[i].depth.values.end(), frames[i].depth.values.begin(),
                             [](float a, float b) { return a == b || (std::isnan(a) && std::isnan(b)); }));
            CHECK(e[i].pose == frames[i].pose);
        }
        ViewFrame wrong = frames[0];
        wrong.image = RgbImage(3, 3);
        CHECK_THROWS_AS(est.estimate(std::vector<ViewFrame>{wrong}), BundleFormatError);
    }

    TEST_CASE("synthetic segmenter returns the analytic mask, consistent with depth") {
        const auto w = std::make_shared<const WorldSpec>(generate_world(9, 4));
        SyntheticSegmenter seg(w);
        const auto view = render_view(*w, w->input_pose, ViewId::input());
        for (const auto& h : visible_object_hints(*w, w->input_pose, w->intrinsics)) {
            const auto m = seg.segment(view, h);
            const auto ref = render_instance_mask(*w, w->input_pose, w->intrinsics, h.object_id);
            CHECK(m.bits == ref.bits);
            const auto* c = w->find(h.object_id);
            for (int y = 0; y < m.height; ++y)
                for (int x = 0; x < m.width; ++x)
                    if (m.test(x, y)) {
                        const auto d = cuboid_hit_depth(*c, {double(x), double(y)}, w->intrinsics, w->input_pose);
                        REQUIRE(d);
                        CHECK(std::abs(view.depth.at(x, y) - *d) < 1e-5 * *d);
                    }
        }
        CHECK_THROWS_AS(seg.segment(view, {"sky", {5, 2}, 99}), ObjectNotFoundError);
    }

    TEST_CASE("synthetic segmenter is safe under concurrent calls") {
        const auto w = std::make_shared<const WorldSpec>(generate_world(4, 3));
        SyntheticSegmenter seg(w);
        const auto view = render_view(*w, w->input_pose, ViewId::input());
        const auto hints = visible_object_hints(*w, w->input_pose, w->intrinsics);
        REQUIRE_FALSE(hints.empty());
        const auto expected = seg.segment(view, hints[0]).bits;
        std::vector<std::jthread> workers;
        std::atomic<int> mismatches{0};
        for (int i = 0; i < 4; ++i)
            workers.emplace_back([&] {
                for (int k = 0; k < 5; ++k)
                    if (seg.segment(view, hints[0]).bits != expected) ++mismatches;
            });
        workers.clear();
        CHECK(mismatches == 0);
    }
}
