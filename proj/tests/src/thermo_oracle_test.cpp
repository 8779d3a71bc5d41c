#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "interlock/common.hpp"
#include "interlock/design_space.hpp"
#include "interlock/io.hpp"
#include "interlock/thermo_oracle.hpp"
#include "test_util.hpp"

using namespace interlock;
using namespace interlock::thermo;

namespace {

design::PanelDesign uniform_design(int n, double angle_deg = 10.0, double lr = 1.0) {
    design::PanelDesign d;
    d.grid_size = n;
    d.angles_deg.assign(static_cast<std::size_t>(design::angle_class_count(n)), angle_deg);
    d.length_ratio = lr;
    return d;
}

// Zero surface exchange and a drive that is over before the first step, so
// the only heat path left is tile-to-tile contact.
OracleConfig isolated_config(int subgrid) {
    OracleConfig cfg;
    cfg.material.convection_w_m2k = 0.0;
    cfg.material.emissivity = 0.0;
    cfg.profile.t_start_s = 0.0;
    cfg.profile.t_peak_s = 0.0;
    cfg.profile.t_hold_end_s = 0.0;
    cfg.profile.peak_c = cfg.profile.ambient_c;
    cfg.tile_subgrid = subgrid;
    return cfg;
}

constexpr double kAmbientK = 298.15;

}  // namespace

TEST_CASE("load temperature follows the drive profile") {
    const LoadProfile p;
    CHECK(load_temperature(0.0, p) == 25.0);
    CHECK(load_temperature(5.0, p) == 25.0);
    CHECK(*load_temperature(10.0, p) == doctest::Approx(512.5).epsilon(1e-15));
    CHECK(*load_temperature(15.0, p) == 1000.0);
    CHECK(*load_temperature(20.0, p) == 1000.0);
    CHECK(*load_temperature(35.0, p) == 1000.0);
    CHECK_FALSE(load_temperature(35.0 + 1e-9, p).has_value());
    CHECK_FALSE(load_temperature(600.0, p).has_value());
}

TEST_CASE("load profile validation") {
    LoadProfile p;
    p.t_peak_s = 3.0;  // before t_start
    CHECK_THROWS_AS(p.validate_or_throw(), ValidationError);
    p = LoadProfile{};
    p.peak_c = 20.0;  // below ambient
    CHECK_THROWS_AS(p.validate_or_throw(), ValidationError);
    p = LoadProfile{};
    p.spot_radius_mm = 0.0;
    CHECK_THROWS_AS(p.validate_or_throw(), ValidationError);
}

TEST_CASE("material and contact validation") {
    MaterialSpec m;
    m.conductivity_w_mk = 0.0;
    CHECK_THROWS_AS(m.validate_or_throw(), ValidationError);
    m = MaterialSpec{};
    m.emissivity = 1.5;
    CHECK_THROWS_AS(m.validate_or_throw(), ValidationError);
    m = MaterialSpec{};
    m.poisson_ratio = 0.5;
    CHECK_THROWS_AS(m.validate_or_throw(), ValidationError);

    ContactSpec c;
    c.asperity_slope = -1.0;
    CHECK_THROWS_AS(c.validate_or_throw(), ValidationError);

    OracleConfig cfg;
    cfg.tile_subgrid = 0;
    CHECK_THROWS_AS(cfg.validate_or_throw(), ValidationError);
    cfg.tile_subgrid = 17;
    CHECK_THROWS_AS(cfg.validate_or_throw(), ValidationError);
}

TEST_CASE("contact conductance matches hand values and grows with pressure") {
    const ContactSpec c;
    const MaterialSpec m;
    CHECK(contact_conductance(0.0, c, m) == 2000.0);
    CHECK(contact_conductance(10e6, c, m) ==
          doctest::Approx(2083.1018688168921714).epsilon(1e-13));

    double prev = 0.0;
    for (double p = 0.0; p <= 400e6; p += 5e6) {
        const double h = contact_conductance(p, c, m);
        CHECK(h >= prev);
        prev = h;
    }
    CHECK_THROWS_AS(contact_conductance(-1.0, c, m), ValidationError);
}

TEST_CASE("constrained stress matches the hand value and is linear") {
    const MaterialSpec m;
    CHECK(constrained_stress(100.0, m) ==
          doctest::Approx(317574683.54430379747).epsilon(1e-13));
    CHECK(constrained_stress(200.0, m) ==
          doctest::Approx(2.0 * constrained_stress(100.0, m)).epsilon(1e-15));
    CHECK(constrained_stress(0.0, m) == 0.0);
}

TEST_CASE("initial state is uniform ambient") {
    const auto d = uniform_design(3);
    const OracleConfig cfg;
    const auto st = initial_state(d, cfg);
    CHECK(st.nodes_per_side == 9);
    CHECK(st.time_s == 0.0);
    for (double t : st.temperature_k) CHECK(t == kAmbientK);
}

TEST_CASE("uniform unloaded panel is a bitwise fixed point") {
    const auto d = uniform_design(3, 15.0, 1.25);
    auto cfg = isolated_config(3);
    // Surface exchange on: at ambient every loss term is exactly zero too.
    cfg.material.convection_w_m2k = 10.0;
    cfg.material.emissivity = 0.4;

    auto st = initial_state(d, cfg);
    const double dt = 0.5 * max_stable_dt(d, cfg);
    for (int i = 0; i < 10; ++i) step_thermal(st, dt, d, cfg);
    for (double t : st.temperature_k) CHECK(t == kAmbientK);
}

TEST_CASE("thermal step rejects steps beyond the stability bound") {
    const auto d = uniform_design(3);
    const OracleConfig cfg;
    const double bound = max_stable_dt(d, cfg);
    REQUIRE(bound > 0.0);
    auto st = initial_state(d, cfg);
    CHECK_THROWS_AS(step_thermal(st, 1.01 * bound, d, cfg), NumericError);
    CHECK_NOTHROW(step_thermal(st, 0.99 * bound, d, cfg));
}

TEST_CASE("stability bound tightens as cells shrink") {
    const auto d = uniform_design(3);
    OracleConfig coarse;
    coarse.tile_subgrid = 2;
    OracleConfig fine;
    fine.tile_subgrid = 6;
    CHECK(max_stable_dt(d, fine) < max_stable_dt(d, coarse));
}

TEST_CASE("single hot tile exchange matches hand values") {
    const auto d = uniform_design(3, 10.0, 1.0);
    const auto cfg = isolated_config(1);

    auto st = initial_state(d, cfg);
    st.at(1, 1) = kAmbientK + 50.0;
    step_thermal(st, 0.1, d, cfg);

    const double recv = 0.18954703425348142076;
    const double loss = 0.75818813701392568306;
    CHECK(st.at(0, 1) == doctest::Approx(kAmbientK + recv).epsilon(1e-12));
    CHECK(st.at(1, 0) == doctest::Approx(kAmbientK + recv).epsilon(1e-12));
    CHECK(st.at(1, 2) == doctest::Approx(kAmbientK + recv).epsilon(1e-12));
    CHECK(st.at(2, 1) == doctest::Approx(kAmbientK + recv).epsilon(1e-12));
    CHECK(st.at(1, 1) == doctest::Approx(kAmbientK + 50.0 - loss).epsilon(1e-12));
    // Diagonal tiles share no interface; with surface exchange off they are untouched.
    CHECK(st.at(0, 0) == kAmbientK);
    CHECK(st.at(0, 2) == kAmbientK);
    CHECK(st.at(2, 0) == kAmbientK);
    CHECK(st.at(2, 2) == kAmbientK);
}

TEST_CASE("single hot tile mechanics match hand values") {
    const auto d = uniform_design(3, 10.0, 1.0);
    const auto cfg = isolated_config(1);

    const auto rest = initial_state(d, cfg);
    auto st = rest;
    st.at(1, 1) = kAmbientK + 50.0;

    const auto mech = mechanics_outputs(st, d, cfg, &rest);
    CHECK(mech.friction_force_n == doctest::Approx(560.2860531175037481).epsilon(1e-12));
    CHECK(mech.oop_deformation_mm == doctest::Approx(0.039131844555362195764).epsilon(1e-12));
    CHECK(mech.elastic_energy_j == doctest::Approx(0.04638178253164556962).epsilon(1e-12));
    CHECK(mech.safety_factor == doctest::Approx(13.023708167918241099).epsilon(1e-12));
    CHECK(mech.contact_energy_increment_j ==
          doctest::Approx(0.0055658139037974683544).epsilon(1e-12));
}

TEST_CASE("mechanics at rest are exactly zero") {
    const auto d = uniform_design(5, 20.0, 1.75);
    const OracleConfig cfg;
    const auto st = initial_state(d, cfg);
    const auto mech = mechanics_outputs(st, d, cfg, &st);
    CHECK(mech.oop_deformation_mm == 0.0);
    CHECK(mech.elastic_energy_j == 0.0);
    CHECK(mech.friction_force_n == 0.0);
    CHECK(mech.contact_energy_increment_j == 0.0);
    CHECK(mech.safety_factor == kSafetyFactorMax);
}

TEST_CASE("elastic energy scales quadratically with the temperature rise") {
    const auto d = uniform_design(3);
    const auto cfg = isolated_config(1);
    auto a = initial_state(d, cfg);
    auto b = initial_state(d, cfg);
    a.at(1, 1) = kAmbientK + 25.0;
    b.at(1, 1) = kAmbientK + 50.0;
    const auto ma = mechanics_outputs(a, d, cfg);
    const auto mb = mechanics_outputs(b, d, cfg);
    CHECK(mb.elastic_energy_j == doctest::Approx(4.0 * ma.elastic_energy_j).epsilon(1e-12));
}

TEST_CASE("a spot covering no cell is rejected") {
    const auto d = uniform_design(3);
    OracleConfig cfg;
    cfg.tile_subgrid = 2;  // even node count: no cell centre sits on the panel centre
    cfg.profile.spot_radius_mm = 0.01;
    CHECK_THROWS_AS(simulate(d, cfg), ValidationError);
}

TEST_CASE("simulated transient: axis, rest row and plausibility") {
    const auto d = uniform_design(3);
    const auto series = simulate(d);
    REQUIRE(series.samples() == 601);
    for (std::size_t k = 0; k < series.samples(); ++k)
        CHECK(series.time_s[k] == static_cast<double>(k));

    CHECK(series.channels[kSafetyFactor][0] == kSafetyFactorMax);
    CHECK(series.channels[kFrictionForce][0] == 0.0);
    CHECK(series.channels[kInternalEnergy][0] == 0.0);
    CHECK(series.channels[kOopDeformation][0] == 0.0);
    CHECK(series.channels[kEdgeTemperature][0] == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(series.channels[kHeatRate][0] == 0.0);
    CHECK(series.channels[kContactEnergy][0] == 0.0);
    CHECK(series.channels[kElasticEnergy][0] == 0.0);
    CHECK(series.channels[kInputPower][0] == 0.0);

    double peak_edge = 0.0, peak_u = 0.0;
    for (std::size_t k = 0; k < series.samples(); ++k) {
        const double edge = series.channels[kEdgeTemperature][k];
        CHECK(edge > 24.9);
        CHECK(edge < 1000.1);
        peak_edge = std::max(peak_edge, edge);
        peak_u = std::max(peak_u, series.channels[kInternalEnergy][k]);
        CHECK(series.channels[kOopDeformation][k] >= 0.0);
        CHECK(series.channels[kSafetyFactor][k] > 0.0);
        CHECK(series.channels[kSafetyFactor][k] <= kSafetyFactorMax);
        if (series.time_s[k] > 36.0) CHECK(series.channels[kInputPower][k] == 0.0);
        if (k > 0)
            CHECK(series.channels[kContactEnergy][k] >= series.channels[kContactEnergy][k - 1]);
    }
    // The drive must actually heat the panel.
    CHECK(peak_edge > 100.0);
    CHECK(peak_u > 1000.0);
}

TEST_CASE("net heat rate integrates to the internal energy") {
    const auto d = uniform_design(3, 15.0, 0.75);
    const auto series = simulate(d);
    double integral = 0.0;
    const double scale = series.channels[kInternalEnergy][35];  // near the energy peak
    REQUIRE(scale > 0.0);
    for (std::size_t k = 0; k < series.samples(); ++k) {
        integral += series.channels[kHeatRate][k];  // 1 s sample interval
        CHECK(series.channels[kInternalEnergy][k] ==
              doctest::Approx(integral).epsilon(1e-9).scale(scale));
    }
}

TEST_CASE("without surface losses the input power balances the internal energy") {
    const auto d = uniform_design(3);
    OracleConfig cfg;
    cfg.material.convection_w_m2k = 0.0;
    cfg.material.emissivity = 0.0;
    const auto series = simulate(d, cfg);
    double in = 0.0;
    const double scale = series.channels[kInternalEnergy].back();
    REQUIRE(scale > 0.0);
    for (std::size_t k = 0; k < series.samples(); ++k) {
        in += series.channels[kInputPower][k];
        CHECK(series.channels[kInternalEnergy][k] ==
              doctest::Approx(in).epsilon(1e-9).scale(scale));
    }
}

TEST_CASE("with surface losses on, stored energy stays below the input") {
    const auto d = uniform_design(3);
    const auto series = simulate(d);
    const double in = std::accumulate(series.channels[kInputPower].begin(),
                                      series.channels[kInputPower].end(), 0.0);
    CHECK(series.channels[kInternalEnergy].back() < in);
}

TEST_CASE("simulation is deterministic") {
    const auto d = uniform_design(3, 25.0, 2.0);
    const auto a = simulate(d);
    const auto b = simulate(d);
    CHECK(a.time_s == b.time_s);
    for (int c = 0; c < kChannelCount; ++c)
        CHECK(a.channels[static_cast<std::size_t>(c)] == b.channels[static_cast<std::size_t>(c)]);
}

TEST_CASE("temperature field keeps the panel symmetry") {
    // 5x5 classes are quarter-turn invariant, so the field must be too.
    design::PanelDesign d5;
    d5.grid_size = 5;
    d5.angles_deg = {5.0, 10.0, 15.0, 20.0, 25.0, 10.0};
    d5.length_ratio = 1.5;
    OracleConfig cfg;
    auto st = initial_state(d5, cfg);
    const double dt = 0.5 * max_stable_dt(d5, cfg);
    while (st.time_s < 20.0) step_thermal(st, dt, d5, cfg);
    const int m = st.nodes_per_side;
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            CHECK(st.at(r, c) == doctest::Approx(st.at(c, m - 1 - r)).epsilon(1e-9));
            CHECK(st.at(r, c) == doctest::Approx(st.at(m - 1 - r, m - 1 - c)).epsilon(1e-9));
        }

    // 3x3 classes distinguish the two edge pairs; only the half turn survives.
    design::PanelDesign d3;
    d3.grid_size = 3;
    d3.angles_deg = {10.0, 15.0, 5.0, 25.0};
    d3.length_ratio = 0.75;
    auto st3 = initial_state(d3, cfg);
    const double dt3 = 0.5 * max_stable_dt(d3, cfg);
    while (st3.time_s < 20.0) step_thermal(st3, dt3, d3, cfg);
    const int m3 = st3.nodes_per_side;
    for (int r = 0; r < m3; ++r)
        for (int c = 0; c < m3; ++c)
            CHECK(st3.at(r, c) == doctest::Approx(st3.at(m3 - 1 - r, m3 - 1 - c)).epsilon(1e-9));
}

TEST_CASE("response csv round trip is exact") {
    testutil::TempDir tmp("response-csv");
    const auto d = uniform_design(3);
    OracleConfig cfg;
    cfg.profile.t_end_s = 60.0;  // short run is enough for the format
    const auto series = simulate(d, cfg);
    write_response_csv(series, tmp.file("r.csv"));
    const auto back = read_response_csv(tmp.file("r.csv"));
    CHECK(back.time_s == series.time_s);
    for (int c = 0; c < kChannelCount; ++c)
        CHECK(back.channels[static_cast<std::size_t>(c)] ==
              series.channels[static_cast<std::size_t>(c)]);

    io::write_file_atomic(tmp.file("bad.csv"), "t,nope\n0,1\n");
    CHECK_THROWS_AS(read_response_csv(tmp.file("bad.csv")), ConfigError);
    CHECK_THROWS_AS(read_response_csv(tmp.file("missing.csv")), ConfigError);
}

TEST_CASE("oracle config json round trip and partial files") {
    testutil::TempDir tmp("oracle-config");
    OracleConfig cfg;
    cfg.material.conductivity_w_mk = 30.0;
    cfg.contact.friction_coefficient = 0.5;
    cfg.profile.peak_c = 800.0;
    cfg.tile_subgrid = 4;
    save_oracle_config(cfg, tmp.file("cfg.json"));
    const auto back = load_oracle_config(tmp.file("cfg.json"));
    CHECK(back.material.conductivity_w_mk == 30.0);
    CHECK(back.contact.friction_coefficient == 0.5);
    CHECK(back.profile.peak_c == 800.0);
    CHECK(back.tile_subgrid == 4);
    CHECK(back.material.density_kg_m3 == cfg.material.density_kg_m3);

    // Fields absent from the file keep their defaults.
    io::write_file_atomic(tmp.file("partial.json"), "{\"material\": {\"emissivity\": 0.1}}\n");
    const auto part = load_oracle_config(tmp.file("partial.json"));
    CHECK(part.material.emissivity == 0.1);
    CHECK(part.material.conductivity_w_mk == 24.6);
    CHECK(part.tile_subgrid == 3);

    io::write_file_atomic(tmp.file("broken.json"), "{not json");
    CHECK_THROWS_AS(load_oracle_config(tmp.file("broken.json")), ConfigError);
}

TEST_CASE("channel names are stable") {
    CHECK(kChannelNames[kSafetyFactor] == "safety_factor");
    CHECK(kChannelNames[kFrictionForce] == "friction_force");
    CHECK(kChannelNames[kInternalEnergy] == "internal_energy");
    CHECK(kChannelNames[kOopDeformation] == "oop_deformation");
    CHECK(kChannelNames[kEdgeTemperature] == "edge_temperature");
    CHECK(kChannelNames[kHeatRate] == "heat_rate");
    CHECK(kChannelNames[kContactEnergy] == "contact_energy");
    CHECK(kChannelNames[kElasticEnergy] == "elastic_energy");
    CHECK(kChannelNames[kInputPower] == "input_power");
}
