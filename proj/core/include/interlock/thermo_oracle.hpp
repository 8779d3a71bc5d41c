#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "interlock/design_space.hpp"

namespace interlock::thermo {

struct MaterialSpec {
    double tensile_strength_mpa = 220.0;
    double compressive_strength_mpa = 2068.0;
    double density_kg_m3 = 3800.0;
    double conductivity_w_mk = 24.6;
    double heat_capacity_j_kgk = 880.0;
    double youngs_modulus_gpa = 303.0;
    double poisson_ratio = 0.21;
    double expansion_per_k = 8.28e-6;
    double emissivity = 0.4;
    double convection_w_m2k = 10.0;

    void validate_or_throw() const;
};

struct ContactSpec {
    double gap_conductance_w_m2k = 2000.0;
    double asperity_height_m = 10e-6;
    double asperity_slope = 0.0167;
    double vickers_c1_pa = 10.5e9;
    double vickers_c2 = -0.03;
    double friction_coefficient = 0.24;

    void validate_or_throw() const;
};

// Central heat spot drive: ambient until t_start, linear ramp to peak_c at
// t_peak, hold until t_hold_end, then the spot is released and the panel
// cools freely until t_end.
struct LoadProfile {
    double t_start_s = 5.0;
    double t_peak_s = 15.0;
    double t_hold_end_s = 35.0;
    double t_end_s = 600.0;
    double ambient_c = 25.0;
    double peak_c = 1000.0;
    double spot_radius_mm = 7.5;

    void validate_or_throw() const;
};

struct OracleConfig {
    MaterialSpec material;
    ContactSpec contact;
    LoadProfile profile;
    double panel_size_mm = design::kDefaultPanelSizeMm;
    int tile_subgrid = 3;  // lumped nodes per tile side

    void validate_or_throw() const;
};

OracleConfig load_oracle_config(const std::filesystem::path& path);
void save_oracle_config(const OracleConfig& config, const std::filesystem::path& path);

// Spot temperature in Celsius at time t; empty once the load is released.
std::optional<double> load_temperature(double t_s, const LoadProfile& profile);

// Total tile-to-tile interface conductance (W/m^2 K): fixed gap term plus the
// Cooper-Mikic-Yovanovich constriction term
//   h_c = 1.25 * K * (m/sigma) * (P/Hc)^0.95
// with the relative pressure P/Hc closed through the Song-Yovanovich Vickers
// correlation  P/Hc = [P / (c1 (1.62 sigma/(sigma0 m))^{c2})]^{1/(1+0.071 c2)},
// sigma0 = 1 um. Monotone nondecreasing in P.
double contact_conductance(double pressure_pa, const ContactSpec& contact,
                           const MaterialSpec& material);

// Equibiaxial stress of a tile whose free expansion is blocked in plane:
// sigma = E * alpha * dT / (1 - nu). Positive sign = compression magnitude.
double constrained_stress(double delta_t_k, const MaterialSpec& material);

struct ThermalState {
    double time_s = 0.0;
    int nodes_per_side = 0;             // grid_size * tile_subgrid
    std::vector<double> temperature_k;  // row-major nodes_per_side^2

    double& at(int row, int col) { return temperature_k[static_cast<std::size_t>(row) * nodes_per_side + col]; }
    double at(int row, int col) const { return temperature_k[static_cast<std::size_t>(row) * nodes_per_side + col]; }
};

ThermalState initial_state(const design::PanelDesign& design, const OracleConfig& config);

// Largest explicit time step admitted by the worst-case node balance
// (contact conductance at peak pressure, radiation slope at peak temperature).
double max_stable_dt(const design::PanelDesign& design, const OracleConfig& config);

// Advances one explicit step. Throws NumericError when dt exceeds the
// stability bound, naming the largest admissible step.
void step_thermal(ThermalState& state, double dt_s, const design::PanelDesign& design,
                  const OracleConfig& config);

struct MechanicsOutputs {
    double oop_deformation_mm = 0.0;    // max wedge ride-up over tiles
    double elastic_energy_j = 0.0;      // stored strain energy, all tiles
    double friction_force_n = 0.0;      // mu * normal force, summed over interfaces
    double safety_factor = 0.0;         // min Drucker-Prager margin over tiles
    double contact_energy_increment_j = 0.0;  // frictional work vs `previous`
};

// Closed-form mechanics read off one thermal state. `previous` (may be null)
// supplies the reference for the frictional-work increment.
MechanicsOutputs mechanics_outputs(const ThermalState& state, const design::PanelDesign& design,
                                   const OracleConfig& config,
                                   const ThermalState* previous = nullptr);

// Safety factor reported at zero stress; the Drucker-Prager margin is capped here.
inline constexpr double kSafetyFactorMax = 1000.0;

enum Channel : int {
    kSafetyFactor = 0,
    kFrictionForce,
    kInternalEnergy,
    kOopDeformation,
    kEdgeTemperature,
    kHeatRate,
    kContactEnergy,
    kElasticEnergy,
    kInputPower,
};

inline constexpr int kChannelCount = 9;
extern const std::array<std::string, kChannelCount> kChannelNames;

// Sampled transient response. Power-like channels (heat_rate, input_power)
// are averages over the trailing sample interval so that their rectangle sum
// reproduces the underlying energy bookkeeping exactly; at t=0 they are 0.
struct ResponseSeries {
    std::vector<double> time_s;
    std::array<std::vector<double>, kChannelCount> channels;

    std::size_t samples() const { return time_s.size(); }
};

// Full transient run over [0, profile.t_end_s], sampled every sample_step_s.
// The integration step is fixed at half the stability bound, subdivided to
// land exactly on sample instants. Deterministic: identical inputs give a
// bit-identical series.
ResponseSeries simulate(const design::PanelDesign& design, const OracleConfig& config = {},
                        double sample_step_s = 1.0);

void write_response_csv(const ResponseSeries& series, const std::filesystem::path& path);
ResponseSeries read_response_csv(const std::filesystem::path& path);

}  // namespace interlock::thermo
