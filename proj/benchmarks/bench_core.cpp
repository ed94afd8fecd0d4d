#include "sandbox3d/proxy_elevation.hpp"
#include "sandbox3d/synthetic_world.hpp"
#include "sandbox3d/voting.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace sandbox3d;

namespace {

std::vector<Vec3> blob_points(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) {
        const Vec3 ctr((i % 5) * 2.0, 0.0, (i % 3) * 2.0);
        pts.push_back(ctr + Vec3(u(rng), u(rng), u(rng)));
    }
    return pts;
}

InstanceMask disc_mask(int size) {
    InstanceMask m(size, size, 0, "disc");
    const double r = size * 0.4, c = size / 2.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if ((x - c) * (x - c) + (y - c) * (y - c) <= r * r) m.set(x, y);
    return m;
}

void BM_Dbscan(benchmark::State& state) {
    const auto pts = blob_points(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(dbscan(pts, 0.4, 5));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dbscan)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_FpsSample(benchmark::State& state) {
    const auto m = disc_mask(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(fps_sample(m, 30));
}
BENCHMARK(BM_FpsSample)->Arg(32)->Arg(128)->Arg(256);

void BM_RenderDepth(benchmark::State& state) {
    const auto w = generate_world(7, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(render_depth(w, w.input_pose, w.intrinsics));
}
BENCHMARK(BM_RenderDepth)->Arg(1)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_FitObb(benchmark::State& state) {
    const auto pts = blob_points(static_cast<int>(state.range(0)), 2);
    ObbOptions gravity;
    gravity.up_axis = Vec3(0, -1, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_obb(pts, "x", 0, 0.01));
        benchmark::DoNotOptimize(fit_obb(pts, "x", 0, 0.01, gravity));
    }
}
BENCHMARK(BM_FitObb)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
