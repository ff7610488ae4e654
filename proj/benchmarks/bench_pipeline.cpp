#include "qnet/fdm_oracle.hpp"
#include "qnet/intermediate_spectrum.hpp"
#include "qnet/pipeline.hpp"
#include "qnet/solvable_model.hpp"

#include <benchmark/benchmark.h>

#include <tuple>

using namespace qnet;

namespace {

// Rectangle 2.0 x 1.5 with unit wires on the left (bottom corner) and right (raised by 0.5).
NetworkSpec offset_two_wire() {
    NetworkSpec net;
    net.fermi_level = 20.0;
    WellSpec box;
    box.id = "box";
    box.geometry = RectGeometry{2.0, 1.5};
    net.wells.push_back(box);
    for (auto [id, edge, offset] : {std::tuple{"in", Edge::Left, 0.0}, std::tuple{"out", Edge::Right, 0.5}}) {
        WireSpec w;
        w.id = id;
        w.attachments.push_back(Attachment{"box", edge, offset});
        net.wires.push_back(w);
    }
    return net;
}

const Pipeline& shared_pipeline() {
    static const Pipeline p(offset_two_wire());
    return p;
}

void BM_BuildPipeline(benchmark::State& state) {
    const NetworkSpec net = offset_two_wire();
    for (auto _ : state) benchmark::DoNotOptimize(Pipeline(net));
}
BENCHMARK(BM_BuildPipeline)->Unit(benchmark::kMillisecond);

void BM_DnBlocks(benchmark::State& state) {
    const Pipeline& p = shared_pipeline();
    double lam = 21.3;
    for (auto _ : state) benchmark::DoNotOptimize(p.blocks(lam));
}
BENCHMARK(BM_DnBlocks)->Unit(benchmark::kMicrosecond);

void BM_Scatter(benchmark::State& state) {
    const Pipeline& p = shared_pipeline();
    double lam = 21.3;
    for (auto _ : state) benchmark::DoNotOptimize(p.scatter(lam));
}
BENCHMARK(BM_Scatter)->Unit(benchmark::kMicrosecond);

void BM_FindRoots(benchmark::State& state) {
    const Pipeline& p = shared_pipeline();
    const int n_scan = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(find_roots(p.data(), p.basis(), p.band(), n_scan));
}
BENCHMARK(BM_FindRoots)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ScatterSweep(benchmark::State& state) {
    const Pipeline& p = shared_pipeline();
    const Band band = p.band();
    for (auto _ : state) {
        double sum = 0.0;
        for (int i = 0; i < 200; ++i) {
            const double lam = band.lo + 0.1 * band.width() + 0.8 * band.width() * (i + 0.5) / 200.0;
            sum += std::norm(p.scatter(lam).s_flux(1, 0));
        }
        benchmark::DoNotOptimize(sum);
    }
}
BENCHMARK(BM_ScatterSweep)->Unit(benchmark::kMillisecond);

void BM_FdmSolve(benchmark::State& state) {
    const Pipeline& p = shared_pipeline();
    const double h = 1.0 / static_cast<double>(state.range(0));
    const GridScene scene(p.network(), p.basis(), h, p.band().hi);
    for (auto _ : state) benchmark::DoNotOptimize(scene.solve(21.3));
}
BENCHMARK(BM_FdmSolve)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ScalarModelZeros(benchmark::State& state) {
    ScalarModel m{0.05, (Vec(3) << 1.0, 2.6, 4.5).finished(), (Vec(3) << 0.5, 0.3, 0.2).finished()};
    for (auto _ : state) benchmark::DoNotOptimize(scalar_model_zeros(m));
}
BENCHMARK(BM_ScalarModelZeros)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
