#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "interlock/common.hpp"
#include "interlock/dataset.hpp"
#include "interlock/design_space.hpp"
#include "interlock/neuralnet.hpp"
#include "interlock/search.hpp"
#include "interlock/thermo_oracle.hpp"
#include "test_util.hpp"

using namespace interlock;
using namespace interlock::search;

namespace {

// Linear surrogate with identity scalers: channel <- one chosen raw feature,
// so grid scores are known in closed form.
//   edge_temperature = angle_1   oop_deformation = lr
//   internal_energy  = -angle_1  elastic_energy  = angle_2
nn::Surrogate linear_probe() {
    nn::Surrogate s;
    s.model = nn::Model({nn::LayerSpec::make_dense(7, 9)}, 7);
    auto& p = s.model.parameters();
    std::fill(p.begin(), p.end(), 0.0);
    auto w = [&](int channel, int feature, double v) {
        p[static_cast<std::size_t>(channel) * 7 + static_cast<std::size_t>(feature)] = v;
    };
    w(thermo::kEdgeTemperature, 0, 1.0);
    w(thermo::kOopDeformation, 4, 1.0);
    w(thermo::kInternalEnergy, 0, -1.0);
    w(thermo::kElasticEnergy, 1, 1.0);

    // Unit-interval scalers leave values untouched.
    std::vector<double> unit = {0.0, 1.0};
    auto identity = [&](std::size_t width, const std::vector<std::string>& names) {
        std::vector<double> rows;
        for (double v : unit)
            for (std::size_t i = 0; i < width; ++i) rows.push_back(v);
        return data::Scaler::fit(rows, width, names);
    };
    s.feature_scaler = identity(7, design::feature_names(3));
    std::vector<std::string> tnames(thermo::kChannelNames.begin(), thermo::kChannelNames.end());
    s.target_scaler = identity(9, tnames);
    return s;
}

design::DesignGrid tiny_grid() {
    design::DesignGrid g;
    g.grid_size = 3;
    g.angle_values_deg = {5.0, 10.0};
    g.lr_values = {1.0, 2.0};
    g.t_begin_s = 0;
    g.t_end_s = 3;
    return g;
}

design::PanelDesign uniform_design(double angle_deg, double lr) {
    design::PanelDesign d;
    d.grid_size = 3;
    d.angles_deg.assign(4, angle_deg);
    d.length_ratio = lr;
    return d;
}

bool same_top(const std::vector<RankedCandidate>& a, const std::vector<RankedCandidate>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].design_index != b[i].design_index || a[i].score != b[i].score ||
            a[i].rank != b[i].rank)
            return false;
    return true;
}

}  // namespace

TEST_CASE("scenario names, objectives and weight validation") {
    CHECK(scenario_from_name("shield") == ScenarioKind::shield);
    CHECK(scenario_from_name("sink") == ScenarioKind::sink);
    CHECK(scenario_name(ScenarioKind::shield) == "shield");
    CHECK(scenario_name(ScenarioKind::sink) == "sink");
    CHECK_THROWS_AS(scenario_from_name("other"), ConfigError);

    Scenario sh{ScenarioKind::shield, 0.5, 0.5};
    CHECK(sh.objective1() == thermo::kEdgeTemperature);
    CHECK(sh.objective2() == thermo::kOopDeformation);
    CHECK_FALSE(sh.maximize1());
    CHECK_FALSE(sh.maximize2());

    Scenario si{ScenarioKind::sink, 0.25, 0.75};
    CHECK(si.objective1() == thermo::kInternalEnergy);
    CHECK(si.objective2() == thermo::kElasticEnergy);
    CHECK(si.maximize1());
    CHECK_FALSE(si.maximize2());

    CHECK_NOTHROW(sh.validate_or_throw());
    Scenario bad{ScenarioKind::shield, 0.6, 0.6};
    CHECK_THROWS_AS(bad.validate_or_throw(), ValidationError);
    Scenario neg{ScenarioKind::shield, -0.1, 1.1};
    CHECK_THROWS_AS(neg.validate_or_throw(), ValidationError);
}

TEST_CASE("per-channel maxima over a gap-free time sweep") {
    nn::Matrix pred(3, thermo::kChannelCount);
    for (int c = 0; c < thermo::kChannelCount; ++c) {
        pred.at(0, static_cast<std::size_t>(c)) = c;
        pred.at(1, static_cast<std::size_t>(c)) = 10.0 - c;
        pred.at(2, static_cast<std::size_t>(c)) = 5.0;
    }
    const std::vector<double> times = {0.0, 1.0, 2.0};
    const auto mx = max_over_time(pred, times, 0, 3);
    CHECK(mx[0] == 10.0);
    CHECK(mx[8] == 8.0);
    CHECK(mx[5] == 5.0);

    const std::vector<double> gappy = {0.0, 2.0, 3.0};
    CHECK_THROWS_AS(max_over_time(pred, gappy, 0, 3), ValidationError);
    CHECK_THROWS_AS(max_over_time(pred, times, 0, 4), ValidationError);
    nn::Matrix narrow(3, 4);
    CHECK_THROWS_AS(max_over_time(narrow, times, 0, 3), ValidationError);
}

TEST_CASE("normalization orients both objectives toward zero-is-best") {
    const Scenario sh{ScenarioKind::shield, 0.75, 0.25};
    ObjectivePool pool{100.0, 300.0, 0.0, 4.0};
    auto [n1, n2] = orient_and_normalize(150.0, 1.0, sh, pool);
    CHECK(n1 == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(n2 == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(weighted_score({n1, n2}, sh) == doctest::Approx(0.25).epsilon(1e-15));

    // Maximization flips the first objective.
    const Scenario si{ScenarioKind::sink, 0.5, 0.5};
    auto [m1, m2] = orient_and_normalize(300.0, 4.0, si, pool);
    CHECK(m1 == 0.0);  // best possible when maximizing
    CHECK(m2 == 1.0);

    // A pool with no spread contributes nothing instead of dividing by zero.
    ObjectivePool flat{5.0, 5.0, 1.0, 1.0};
    auto [f1, f2] = orient_and_normalize(5.0, 1.0, sh, flat);
    CHECK(f1 == 0.0);
    CHECK(f2 == 0.0);
}

TEST_CASE("grid ranking reduces to a single-objective sort at the weight corners") {
    const auto s = linear_probe();
    const auto g = tiny_grid();
    RankOptions opt;
    opt.top_k = 10;
    opt.t_begin_s = 0;
    opt.t_end_s = 3;

    // (1,0): only edge_temperature = angle_1 matters; ties resolve in
    // enumeration order, so the low-angle block leads unbroken.
    const auto r1 = rank_grid(s, g, {ScenarioKind::shield, 1.0, 0.0}, opt);
    CHECK(r1.designs_scored == 32);
    REQUIRE(r1.top.size() == 10);
    for (std::size_t i = 0; i < r1.top.size(); ++i) {
        CHECK(r1.top[i].design_index == i);
        CHECK(r1.top[i].rank == static_cast<int>(i) + 1);
        CHECK(r1.top[i].score == 0.0);
        CHECK(r1.top[i].objective1_max == 5.0);
        CHECK(r1.top[i].design.angles_deg[0] == 5.0);
    }
    CHECK(r1.pool.min1 == 5.0);
    CHECK(r1.pool.max1 == 10.0);

    // (0,1): only oop = lr matters; lr is the fastest design axis, so the
    // lr = 1 designs are the even indices.
    const auto r2 = rank_grid(s, g, {ScenarioKind::shield, 0.0, 1.0}, opt);
    for (std::size_t i = 0; i < r2.top.size(); ++i) {
        CHECK(r2.top[i].design_index == 2 * i);
        CHECK(r2.top[i].score == 0.0);
        CHECK(r2.top[i].design.length_ratio == 1.0);
    }

    // sink (1,0): internal_energy = -angle_1, maximized, so low angles win again.
    const auto r3 = rank_grid(s, g, {ScenarioKind::sink, 1.0, 0.0}, opt);
    for (std::size_t i = 0; i < r3.top.size(); ++i) {
        CHECK(r3.top[i].design_index == i);
        CHECK(r3.top[i].objective1_max == -5.0);
    }
}

TEST_CASE("grid ranking matches a brute-force mirror at mixed weights") {
    const auto s = linear_probe();
    const auto g = tiny_grid();
    const Scenario sc{ScenarioKind::shield, 0.5, 0.5};
    RankOptions opt;
    opt.top_k = 32;
    opt.t_end_s = 3;
    const auto r = rank_grid(s, g, sc, opt);
    REQUIRE(r.top.size() == 32);

    // Mirror: score every design directly through the surrogate.
    std::vector<double> o1(32), o2(32);
    std::vector<double> feat(7), out(9);
    for (std::uint64_t d = 0; d < 32; ++d) {
        const auto pd = g.design_at(d);
        double m1 = -1e300, m2 = -1e300;
        for (int t = 0; t < 3; ++t) {
            const auto f = design::encode_features(pd, t);
            std::copy(f.begin(), f.end(), feat.begin());
            s.predict(feat.data(), 1, out.data());
            m1 = std::max(m1, out[thermo::kEdgeTemperature]);
            m2 = std::max(m2, out[thermo::kOopDeformation]);
        }
        o1[d] = m1;
        o2[d] = m2;
    }
    const double min1 = *std::min_element(o1.begin(), o1.end());
    const double max1 = *std::max_element(o1.begin(), o1.end());
    const double min2 = *std::min_element(o2.begin(), o2.end());
    const double max2 = *std::max_element(o2.begin(), o2.end());
    CHECK(r.pool.min1 == min1);
    CHECK(r.pool.max1 == max1);
    CHECK(r.pool.min2 == min2);
    CHECK(r.pool.max2 == max2);

    std::vector<std::pair<double, std::uint64_t>> want;
    for (std::uint64_t d = 0; d < 32; ++d) {
        const double n1 = (o1[d] - min1) / (max1 - min1);
        const double n2 = (o2[d] - min2) / (max2 - min2);
        want.push_back({0.5 * n1 + 0.5 * n2, d});
    }
    std::sort(want.begin(), want.end());
    for (std::size_t i = 0; i < 32; ++i) {
        CHECK(r.top[i].design_index == want[i].second);
        CHECK(r.top[i].score == doctest::Approx(want[i].first).epsilon(1e-12));
    }
}

TEST_CASE("grid ranking is invariant to worker count and shard size") {
    const auto s = linear_probe();
    const auto g = tiny_grid();
    const Scenario sc{ScenarioKind::shield, 0.25, 0.75};
    RankOptions a;
    a.top_k = 12;
    a.t_end_s = 3;
    a.workers = 1;
    a.shard_size = 4096;
    RankOptions b = a;
    b.workers = 3;
    b.shard_size = 5;
    RankOptions c = a;
    c.workers = 2;
    c.shard_size = 1;

    const auto ra = rank_grid(s, g, sc, a);
    const auto rb = rank_grid(s, g, sc, b);
    const auto rc = rank_grid(s, g, sc, c);
    CHECK(same_top(ra.top, rb.top));
    CHECK(same_top(ra.top, rc.top));
    CHECK(ra.pool.min1 == rb.pool.min1);
    CHECK(ra.pool.max2 == rc.pool.max2);
    CHECK(ra.designs_scored == rb.designs_scored);
}

TEST_CASE("ranking csv and manifest round trip") {
    testutil::TempDir tmp("ranking");
    const auto s = linear_probe();
    const auto g = tiny_grid();
    const Scenario sc{ScenarioKind::sink, 0.75, 0.25};
    RankOptions opt;
    opt.top_k = 8;
    opt.t_end_s = 3;
    const auto r = rank_grid(s, g, sc, opt);

    write_ranking_csv(r, g.grid_size, tmp.file("top.csv"));
    write_ranking_manifest(r, sc, g, opt, tmp.file("top.manifest.json"));
    const auto back = load_ranking(tmp.file("top.csv"), tmp.file("top.manifest.json"));

    CHECK(back.scenario.kind == sc.kind);
    CHECK(back.scenario.w1 == sc.w1);
    CHECK(back.scenario.w2 == sc.w2);
    CHECK(back.grid_size == 3);
    CHECK(back.t_begin_s == 0);
    CHECK(back.t_end_s == 3);
    CHECK(back.pool.min1 == r.pool.min1);
    CHECK(back.pool.max1 == r.pool.max1);
    REQUIRE(back.top.size() == r.top.size());
    for (std::size_t i = 0; i < r.top.size(); ++i) {
        CHECK(back.top[i].rank == r.top[i].rank);
        CHECK(back.top[i].score == r.top[i].score);
        CHECK(back.top[i].objective1_max == r.top[i].objective1_max);
        CHECK(back.top[i].objective2_max == r.top[i].objective2_max);
        CHECK(back.top[i].design.angles_deg == r.top[i].design.angles_deg);
        CHECK(back.top[i].design.length_ratio == r.top[i].design.length_ratio);
    }

    CHECK_THROWS_AS(load_ranking(tmp.file("missing.csv"), tmp.file("top.manifest.json")),
                    ConfigError);
}

TEST_CASE("oracle validation scores the candidate against the training pool") {
    // Short runs keep the oracle cheap here. The subgrid must stay odd so a
    // cell centre sits under the heat spot for every length ratio.
    thermo::OracleConfig cfg;
    cfg.tile_subgrid = 3;
    cfg.profile.t_end_s = 60.0;

    const auto d_a = uniform_design(10.0, 1.0);
    const auto d_b = uniform_design(15.0, 1.5);
    std::vector<data::SimRun> runs;
    runs.push_back({0, d_a, thermo::simulate(d_a, cfg)});
    runs.push_back({1, d_b, thermo::simulate(d_b, cfg)});
    const auto table = data::flatten_runs(runs);

    const int t0 = 0, t1 = 61;
    auto window_max = [&](const thermo::ResponseSeries& sr, thermo::Channel ch) {
        double m = -1e300;
        for (std::size_t k = 0; k < sr.samples(); ++k)
            if (sr.time_s[k] >= t0 && sr.time_s[k] < t1)
                m = std::max(m, sr.channels[static_cast<std::size_t>(ch)][k]);
        return m;
    };
    const auto series_a = runs[0].series;
    const auto series_b = runs[1].series;

    const Scenario sc{ScenarioKind::shield, 1.0, 0.0};
    const ObjectivePool pool{0.0, 1000.0, 0.0, 10.0};

    RankedCandidate cand;
    cand.design = d_a;
    cand.design_index = 0;
    cand.objective1_max = 123.0;  // surrogate's guess, deliberately off
    cand.objective2_max = 1.0;
    cand.score = 0.123;
    cand.rank = 1;

    const auto rec = validate_with_oracle(cand, sc, pool, table, cfg, t0, t1);

    const double truth1 = window_max(series_a, thermo::kEdgeTemperature);
    const double truth2 = window_max(series_a, thermo::kOopDeformation);
    CHECK(rec.oracle_objective1 == doctest::Approx(truth1).epsilon(1e-12));
    CHECK(rec.oracle_objective2 == doctest::Approx(truth2).epsilon(1e-12));
    CHECK(rec.predicted_score == 0.123);
    const double oracle_score = 1.0 * (truth1 - 0.0) / 1000.0;
    CHECK(rec.oracle_score == doctest::Approx(oracle_score).epsilon(1e-12));
    CHECK(rec.score_gap == doctest::Approx(std::abs(rec.predicted_score - rec.oracle_score))
                               .epsilon(1e-12));

    // The training baseline is the better of the two pool designs.
    const double best = std::min(window_max(series_a, thermo::kEdgeTemperature),
                                 window_max(series_b, thermo::kEdgeTemperature));
    CHECK(rec.training_best_objective1 == doctest::Approx(best).epsilon(1e-12));

    // Candidate a sits in the pool, so it can't beat the pool's best by more
    // than round-off; improvement has the (best - candidate) sign convention.
    const double expect_improvement = (best - truth1) / std::abs(best) * 100.0;
    CHECK(rec.improvement_pct == doctest::Approx(expect_improvement).epsilon(1e-9));
    CHECK(rec.improvement_pct <= 1e-9);

    // Parseable record for reports.
    CHECK(rec.to_json().find("improvement_pct") != std::string::npos);
}
