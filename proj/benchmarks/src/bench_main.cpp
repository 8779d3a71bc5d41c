// Hot-path throughput: oracle stepping, surrogate math, grid streaming, and
// full-grid ranking. Run ./interlock_bench --benchmark_min_time=2 for stable
// numbers.
#include <benchmark/benchmark.h>

#include <vector>

#include "interlock/dataset.hpp"
#include "interlock/design_space.hpp"
#include "interlock/linalg.hpp"
#include "interlock/neuralnet.hpp"
#include "interlock/rng.hpp"
#include "interlock/search.hpp"
#include "interlock/thermo_oracle.hpp"

using namespace interlock;

namespace {

design::PanelDesign uniform_design(int n) {
    design::PanelDesign d;
    d.grid_size = n;
    d.angles_deg.assign(static_cast<std::size_t>(design::angle_class_count(n)), 10.0);
    d.length_ratio = 1.0;
    return d;
}

void BM_OracleStep(benchmark::State& state) {
    const auto d = uniform_design(3);
    thermo::OracleConfig cfg;
    cfg.tile_subgrid = static_cast<int>(state.range(0));
    auto st = thermo::initial_state(d, cfg);
    const double dt = 0.5 * thermo::max_stable_dt(d, cfg);
    for (auto _ : state) {
        thermo::step_thermal(st, dt, d, cfg);
        benchmark::DoNotOptimize(st.temperature_k.data());
    }
    state.SetItemsProcessed(state.iterations() * st.temperature_k.size());
}
BENCHMARK(BM_OracleStep)->Arg(2)->Arg(3)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_SimulateFull(benchmark::State& state) {
    const auto d = uniform_design(3);
    const thermo::OracleConfig cfg;
    for (auto _ : state) {
        auto series = thermo::simulate(d, cfg);
        benchmark::DoNotOptimize(series.channels[0].data());
    }
}
BENCHMARK(BM_SimulateFull)->Unit(benchmark::kMillisecond);

void BM_Gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    nn::Matrix a(256, n), b(n, n), c(256, n);
    for (double& v : a.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : b.data) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        nn::gemm(a, b, c);
        benchmark::DoNotOptimize(c.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * 256 * n * n);  // flops
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(256);

void BM_SurrogatePredict(benchmark::State& state) {
    nn::Surrogate s;
    s.model = nn::Model::mlp(7);
    s.model.init_weights(1);
    std::vector<double> corners;
    for (double v : {0.0, 1.0})
        for (int i = 0; i < 7; ++i) corners.push_back(v);
    s.feature_scaler = data::Scaler::fit(corners, 7, design::feature_names(3));
    std::vector<double> corners9;
    for (double v : {0.0, 1.0})
        for (int i = 0; i < 9; ++i) corners9.push_back(v);
    std::vector<std::string> names(thermo::kChannelNames.begin(), thermo::kChannelNames.end());
    s.target_scaler = data::Scaler::fit(corners9, 9, names);

    const std::size_t rows = 4096;
    Rng rng(2);
    std::vector<double> x(rows * 7), y(rows * 9);
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    for (auto _ : state) {
        s.predict(x.data(), rows, y.data());
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_SurrogatePredict)->Unit(benchmark::kMillisecond);

void BM_GridStream(benchmark::State& state) {
    design::DesignGrid grid;
    std::vector<double> row(grid.feature_width());
    for (auto _ : state) {
        design::GridStream stream(grid, 0, 100000);
        std::uint64_t n = 0;
        while (stream.next(row)) ++n;
        benchmark::DoNotOptimize(n);
    }
    state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_GridStream);

void BM_RankGrid(benchmark::State& state) {
    // Flat surrogate keeps this a measurement of streaming, reduction, and
    // heap upkeep rather than of gemm throughput.
    nn::Surrogate s;
    s.model = nn::Model({nn::LayerSpec::make_dense(7, 9)}, 7);
    std::vector<double> corners;
    for (double v : {0.0, 1.0})
        for (int i = 0; i < 7; ++i) corners.push_back(v);
    s.feature_scaler = data::Scaler::fit(corners, 7, design::feature_names(3));
    std::vector<double> corners9;
    for (double v : {0.0, 1.0})
        for (int i = 0; i < 9; ++i) corners9.push_back(v);
    std::vector<std::string> names(thermo::kChannelNames.begin(), thermo::kChannelNames.end());
    s.target_scaler = data::Scaler::fit(corners9, 9, names);

    design::DesignGrid grid;
    const search::Scenario sc{search::ScenarioKind::shield, 1.0, 0.0};
    search::RankOptions opt;
    opt.t_end_s = 4;
    opt.workers = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto r = search::rank_grid(s, grid, sc, opt);
        benchmark::DoNotOptimize(r.top.data());
    }
    state.SetItemsProcessed(state.iterations() * grid.design_count());
}
BENCHMARK(BM_RankGrid)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
