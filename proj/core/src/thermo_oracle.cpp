#include "interlock/thermo_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "interlock/common.hpp"
#include "interlock/io.hpp"

namespace interlock::thermo {

const std::array<std::string, kChannelCount> kChannelNames = {
    "safety_factor", "friction_force",  "internal_energy",
    "oop_deformation", "edge_temperature", "heat_rate",
    "contact_energy", "elastic_energy",  "input_power",
};

namespace {

constexpr double kStefanBoltzmann = 5.670374419e-8;  // W/m^2 K^4
constexpr double kKelvinOffset = 273.15;
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMmToM = 1e-3;

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw ValidationError(std::string(what) + " must be positive");
}

// Drucker-Prager cone calibrated by the uniaxial strengths.
struct DruckerPrager {
    double alpha;
    double k;
    explicit DruckerPrager(const MaterialSpec& mat) {
        const double st = mat.tensile_strength_mpa * 1e6;
        const double sc = mat.compressive_strength_mpa * 1e6;
        alpha = (sc - st) / (std::sqrt(3.0) * (sc + st));
        k = 2.0 * sc * st / (std::sqrt(3.0) * (sc + st));
    }
};

// Geometry and per-step scratch for the lumped tile network. The panel is a
// tensor grid of m x m cells (m = grid_size * subgrid); every cell is one
// control volume spanning the full thickness.
struct PanelModel {
    int n = 0;      // tiles per side
    int s = 0;      // cells per tile side
    int m = 0;      // n * s
    double thickness_m = 0.0;
    double ambient_k = 0.0;
    double conduction_w_k_per_area_ratio = 0.0;  // material conductivity

    std::vector<double> width_m;       // cell width per global row/col index
    std::vector<double> tile_width_m;  // tile edge per tile row/col index
    std::vector<double> cell_capacity; // rho*cp*V per cell [J/K]
    std::vector<double> cell_free_area;  // convection/radiation area per cell [m^2]
    std::vector<char> heated;            // cell inside the heat spot

    std::vector<int> tile_class;          // per tile
    std::vector<double> tile_angle_rad;   // per tile

    struct Interface {
        int tile_a = 0, tile_b = 0;
        double theta_rad = 0.0;   // mean of the two face angles
        double sin_theta = 0.0;
        double area_m2 = 0.0;     // full shared face, for normal force
        bool horizontal = true;   // between tile columns (b = a's east neighbour)
    };
    std::vector<Interface> interfaces;   // horizontal block then vertical block
    std::vector<int> h_iface_id;         // (tile row, gap col) -> interface index
    std::vector<int> v_iface_id;         // (gap row, tile col) -> interface index

    int cell_index(int r, int c) const { return r * m + c; }
    int tile_of(int r, int c) const { return (r / s) * n + (c / s); }

    PanelModel(const design::PanelDesign& d, const OracleConfig& cfg) {
        d.validate_or_throw(cfg.panel_size_mm);
        cfg.validate_or_throw();
        n = d.grid_size;
        s = cfg.tile_subgrid;
        m = n * s;
        thickness_m = d.thickness_mm * kMmToM;
        ambient_k = cfg.profile.ambient_c + kKelvinOffset;
        conduction_w_k_per_area_ratio = cfg.material.conductivity_w_mk;

        const auto tile_mm = design::tile_edge_lengths_mm(n, d.length_ratio, cfg.panel_size_mm);
        tile_width_m.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) tile_width_m[static_cast<std::size_t>(i)] = tile_mm[static_cast<std::size_t>(i)] * kMmToM;

        width_m.resize(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) width_m[static_cast<std::size_t>(i)] = tile_width_m[static_cast<std::size_t>(i / s)] / s;

        const auto classes = design::symmetry_classes(n);
        tile_class = classes.class_of;
        tile_angle_rad.resize(static_cast<std::size_t>(n) * n);
        for (int t = 0; t < n * n; ++t)
            tile_angle_rad[static_cast<std::size_t>(t)] =
                d.angles_deg[static_cast<std::size_t>(tile_class[static_cast<std::size_t>(t)])] * kDegToRad;

        // Heat-spot membership is decided on the first-quadrant representative
        // cell so mirrored cells agree exactly.
        const double panel_m = cfg.panel_size_mm * kMmToM;
        std::vector<double> cum(static_cast<std::size_t>(m) + 1, 0.0);
        for (int i = 0; i < m; ++i) cum[static_cast<std::size_t>(i) + 1] = cum[static_cast<std::size_t>(i)] + width_m[static_cast<std::size_t>(i)];
        std::vector<double> abs_centre(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const int rep = std::min(i, m - 1 - i);
            abs_centre[static_cast<std::size_t>(i)] = std::abs(
                0.5 * (cum[static_cast<std::size_t>(rep)] + cum[static_cast<std::size_t>(rep) + 1]) - 0.5 * panel_m);
        }
        const double spot_r = cfg.profile.spot_radius_mm * kMmToM;
        heated.assign(static_cast<std::size_t>(m) * m, 0);
        int heated_count = 0;
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) {
                const double dr = abs_centre[static_cast<std::size_t>(r)];
                const double dc = abs_centre[static_cast<std::size_t>(c)];
                if (dr * dr + dc * dc <= spot_r * spot_r) {
                    heated[static_cast<std::size_t>(cell_index(r, c))] = 1;
                    ++heated_count;
                }
            }
        }
        if (heated_count == 0)
            throw ValidationError("heat spot covers no cell centre; increase tile_subgrid");

        cell_capacity.resize(static_cast<std::size_t>(m) * m);
        cell_free_area.resize(static_cast<std::size_t>(m) * m);
        const double rho_cp = cfg.material.density_kg_m3 * cfg.material.heat_capacity_j_kgk;
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) {
                const double wx = width_m[static_cast<std::size_t>(c)], wy = width_m[static_cast<std::size_t>(r)];
                cell_capacity[static_cast<std::size_t>(cell_index(r, c))] = rho_cp * wx * wy * thickness_m;
                double area = 2.0 * wx * wy;  // top and bottom faces
                if (r == 0 || r == m - 1) area += wx * thickness_m;
                if (c == 0 || c == m - 1) area += wy * thickness_m;
                cell_free_area[static_cast<std::size_t>(cell_index(r, c))] = area;
            }
        }

        h_iface_id.assign(static_cast<std::size_t>(n) * (n - 1), -1);
        v_iface_id.assign(static_cast<std::size_t>(n) * (n - 1), -1);
        for (int ti = 0; ti < n; ++ti) {
            for (int tj = 0; tj + 1 < n; ++tj) {
                Interface f;
                f.tile_a = ti * n + tj;
                f.tile_b = ti * n + tj + 1;
                f.theta_rad = 0.5 * (tile_angle_rad[static_cast<std::size_t>(f.tile_a)] +
                                     tile_angle_rad[static_cast<std::size_t>(f.tile_b)]);
                f.sin_theta = std::sin(f.theta_rad);
                f.area_m2 = tile_width_m[static_cast<std::size_t>(ti)] * thickness_m;
                f.horizontal = true;
                h_iface_id[static_cast<std::size_t>(ti) * (n - 1) + tj] = static_cast<int>(interfaces.size());
                interfaces.push_back(f);
            }
        }
        for (int ti = 0; ti + 1 < n; ++ti) {
            for (int tj = 0; tj < n; ++tj) {
                Interface f;
                f.tile_a = ti * n + tj;
                f.tile_b = (ti + 1) * n + tj;
                f.theta_rad = 0.5 * (tile_angle_rad[static_cast<std::size_t>(f.tile_a)] +
                                     tile_angle_rad[static_cast<std::size_t>(f.tile_b)]);
                f.sin_theta = std::sin(f.theta_rad);
                f.area_m2 = tile_width_m[static_cast<std::size_t>(tj)] * thickness_m;
                f.horizontal = false;
                v_iface_id[static_cast<std::size_t>(ti) * n + tj] = static_cast<int>(interfaces.size());
                interfaces.push_back(f);
            }
        }
    }
};

// Per-tile thermal summary used by both the step loop and the mechanics.
// Means are taken over deltas from ambient, so a panel at rest is exactly
// stress free (no round-off from averaging equal absolute temperatures).
struct TileStats {
    std::vector<double> mean_dt, min_k, max_k;

    void compute(const PanelModel& pm, const ThermalState& st) {
        const std::size_t tiles = static_cast<std::size_t>(pm.n) * pm.n;
        mean_dt.assign(tiles, 0.0);
        min_k.assign(tiles, 1e300);
        max_k.assign(tiles, -1e300);
        for (int r = 0; r < pm.m; ++r) {
            for (int c = 0; c < pm.m; ++c) {
                const double t = st.temperature_k[static_cast<std::size_t>(pm.cell_index(r, c))];
                const auto tile = static_cast<std::size_t>(pm.tile_of(r, c));
                mean_dt[tile] += t - pm.ambient_k;
                min_k[tile] = std::min(min_k[tile], t);
                max_k[tile] = std::max(max_k[tile], t);
            }
        }
        const double inv = 1.0 / (pm.s * pm.s);
        for (auto& v : mean_dt) v *= inv;
    }
};

double tile_sigma(double mean_dt, const MaterialSpec& mat) {
    return constrained_stress(mean_dt, mat);
}

// Blocked in-plane growth of one tile (m), >= 0.
double tile_interference(const PanelModel& pm, int tile, double mean_dt,
                         const MaterialSpec& mat) {
    const int ti = tile / pm.n, tj = tile % pm.n;
    const double w = 0.5 * (pm.tile_width_m[static_cast<std::size_t>(ti)] +
                            pm.tile_width_m[static_cast<std::size_t>(tj)]);
    return std::max(0.0, mat.expansion_per_k * mean_dt * w);
}

struct InterfaceLoads {
    std::vector<double> pressure_pa;  // clamped >= 0
    std::vector<double> h_total;      // contact conductance at that pressure

    void compute(const PanelModel& pm, const TileStats& stats, const MaterialSpec& mat,
                 const ContactSpec& contact, bool with_conductance) {
        pressure_pa.resize(pm.interfaces.size());
        if (with_conductance) h_total.resize(pm.interfaces.size());
        for (std::size_t i = 0; i < pm.interfaces.size(); ++i) {
            const auto& f = pm.interfaces[i];
            const double sig = 0.5 * (tile_sigma(stats.mean_dt[static_cast<std::size_t>(f.tile_a)], mat) +
                                      tile_sigma(stats.mean_dt[static_cast<std::size_t>(f.tile_b)], mat));
            pressure_pa[i] = std::max(0.0, sig) * f.sin_theta;
            if (with_conductance) h_total[i] = contact_conductance(pressure_pa[i], contact, mat);
        }
    }
};

// Explicit network integrator with exact flux-form energy bookkeeping.
class Simulator {
  public:
    Simulator(const design::PanelDesign& design, const OracleConfig& config)
        : design_(design), config_(config), pm_(design, config) {
        state_.time_s = 0.0;
        state_.nodes_per_side = pm_.m;
        state_.temperature_k.assign(static_cast<std::size_t>(pm_.m) * pm_.m, pm_.ambient_k);
        acc_.resize(state_.temperature_k.size());
    }

    const ThermalState& state() const { return state_; }
    ThermalState& state() { return state_; }
    const PanelModel& model() const { return pm_; }
    double energy_in() const { return energy_in_j_; }
    double energy_loss() const { return energy_loss_j_; }

    // One explicit step; per-step cost is linear in cell count.
    void step(double dt) {
        const auto& mat = config_.material;
        stats_.compute(pm_, state_);
        loads_.compute(pm_, stats_, mat, config_.contact, true);

        std::fill(acc_.begin(), acc_.end(), 0.0);
        const double t_new = state_.time_s + dt;
        const auto spot = load_temperature(t_new, config_.profile);
        const bool active = spot.has_value();

        const int m = pm_.m, s = pm_.s;
        const double cond = mat.conductivity_w_mk;
        double flux_into_free = 0.0;  // W from prescribed into free cells

        auto edge = [&](int a, int b, double coeff) {
            const double q = coeff * (state_.temperature_k[static_cast<std::size_t>(a)] -
                                      state_.temperature_k[static_cast<std::size_t>(b)]);
            acc_[static_cast<std::size_t>(a)] -= q;
            acc_[static_cast<std::size_t>(b)] += q;
            if (active && pm_.heated[static_cast<std::size_t>(a)] != pm_.heated[static_cast<std::size_t>(b)])
                flux_into_free += pm_.heated[static_cast<std::size_t>(a)] ? q : -q;
        };

        for (int r = 0; r < m; ++r) {
            for (int c = 0; c + 1 < m; ++c) {
                const int a = pm_.cell_index(r, c), b = pm_.cell_index(r, c + 1);
                double coeff;
                if ((c + 1) % s == 0) {  // crosses a tile interface
                    const int id = pm_.h_iface_id[static_cast<std::size_t>(r / s) * (pm_.n - 1) + (c + 1) / s - 1];
                    coeff = loads_.h_total[static_cast<std::size_t>(id)] *
                            pm_.width_m[static_cast<std::size_t>(r)] * pm_.thickness_m;
                } else {
                    const double d = 0.5 * (pm_.width_m[static_cast<std::size_t>(c)] +
                                            pm_.width_m[static_cast<std::size_t>(c + 1)]);
                    coeff = cond * pm_.width_m[static_cast<std::size_t>(r)] * pm_.thickness_m / d;
                }
                edge(a, b, coeff);
            }
        }
        for (int r = 0; r + 1 < m; ++r) {
            for (int c = 0; c < m; ++c) {
                const int a = pm_.cell_index(r, c), b = pm_.cell_index(r + 1, c);
                double coeff;
                if ((r + 1) % s == 0) {
                    const int id = pm_.v_iface_id[static_cast<std::size_t>((r + 1) / s - 1) * pm_.n + c / s];
                    coeff = loads_.h_total[static_cast<std::size_t>(id)] *
                            pm_.width_m[static_cast<std::size_t>(c)] * pm_.thickness_m;
                } else {
                    const double d = 0.5 * (pm_.width_m[static_cast<std::size_t>(r)] +
                                            pm_.width_m[static_cast<std::size_t>(r + 1)]);
                    coeff = cond * pm_.width_m[static_cast<std::size_t>(c)] * pm_.thickness_m / d;
                }
                edge(a, b, coeff);
            }
        }

        // Convection and radiation from free surfaces.
        const double h = mat.convection_w_m2k;
        const double eps_sb = mat.emissivity * kStefanBoltzmann;
        const double ta = pm_.ambient_k;
        const double ta4 = ta * ta * ta * ta;
        double loss_w = 0.0;
        for (std::size_t i = 0; i < acc_.size(); ++i) {
            if (active && pm_.heated[i]) continue;
            const double t = state_.temperature_k[i];
            const double t2 = t * t;
            const double q = (h * (t - ta) + eps_sb * (t2 * t2 - ta4)) * pm_.cell_free_area[i];
            acc_[i] -= q;
            loss_w += q;
        }

        for (std::size_t i = 0; i < acc_.size(); ++i) {
            if (active && pm_.heated[i]) continue;
            state_.temperature_k[i] += dt * acc_[i] / pm_.cell_capacity[i];
        }
        if (active) {
            const double spot_k = *spot + kKelvinOffset;
            for (std::size_t i = 0; i < acc_.size(); ++i) {
                if (!pm_.heated[i]) continue;
                energy_in_j_ += pm_.cell_capacity[i] * (spot_k - state_.temperature_k[i]);
                state_.temperature_k[i] = spot_k;
            }
        }
        energy_in_j_ += flux_into_free * dt;
        energy_loss_j_ += loss_w * dt;
        state_.time_s = t_new;
    }

    double internal_energy_j() const {
        double e = 0.0;
        for (std::size_t i = 0; i < state_.temperature_k.size(); ++i)
            e += pm_.cell_capacity[i] * (state_.temperature_k[i] - pm_.ambient_k);
        return e;
    }

    double edge_temperature_c() const {
        const int m = pm_.m;
        double best = -1e300;
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) {
                if (r != 0 && r != m - 1 && c != 0 && c != m - 1) continue;
                best = std::max(best, state_.temperature_k[static_cast<std::size_t>(pm_.cell_index(r, c))]);
            }
        }
        return best - kKelvinOffset;
    }

  private:
    design::PanelDesign design_;
    OracleConfig config_;
    PanelModel pm_;
    ThermalState state_;
    std::vector<double> acc_;
    TileStats stats_;
    InterfaceLoads loads_;
    double energy_in_j_ = 0.0;
    double energy_loss_j_ = 0.0;
};

double stable_dt_bound(const PanelModel& pm, const OracleConfig& cfg) {
    const auto& mat = cfg.material;
    // Worst-case interface conductance: every interface at the pressure of a
    // fully heated pair of tiles.
    const double sigma_max =
        std::max(0.0, constrained_stress(cfg.profile.peak_c - cfg.profile.ambient_c, mat));
    std::vector<double> h_max(pm.interfaces.size());
    for (std::size_t i = 0; i < pm.interfaces.size(); ++i)
        h_max[i] = contact_conductance(sigma_max * pm.interfaces[i].sin_theta, cfg.contact, mat);

    const double t_peak_k = std::max(cfg.profile.peak_c, cfg.profile.ambient_c) + kKelvinOffset;
    const double h_rad = 4.0 * mat.emissivity * kStefanBoltzmann * t_peak_k * t_peak_k * t_peak_k;
    const double h_surf = mat.convection_w_m2k + h_rad;

    const int m = pm.m, s = pm.s;
    double bound = 1e300;
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            double sum = h_surf * pm.cell_free_area[static_cast<std::size_t>(pm.cell_index(r, c))];
            auto side = [&](int rr, int cc, bool horizontal) {
                // coefficient of the edge from (r,c) toward (rr,cc)
                const double across = horizontal ? pm.width_m[static_cast<std::size_t>(r)]
                                                 : pm.width_m[static_cast<std::size_t>(c)];
                const bool cross_tile = horizontal ? (cc / s != c / s) : (rr / s != r / s);
                if (cross_tile) {
                    const int id = horizontal
                                       ? pm.h_iface_id[static_cast<std::size_t>(r / s) * (pm.n - 1) +
                                                       std::min(c, cc) / s]
                                       : pm.v_iface_id[static_cast<std::size_t>(std::min(r, rr) / s) * pm.n + c / s];
                    sum += h_max[static_cast<std::size_t>(id)] * across * pm.thickness_m;
                } else {
                    const double d = horizontal
                                         ? 0.5 * (pm.width_m[static_cast<std::size_t>(c)] + pm.width_m[static_cast<std::size_t>(cc)])
                                         : 0.5 * (pm.width_m[static_cast<std::size_t>(r)] + pm.width_m[static_cast<std::size_t>(rr)]);
                    sum += mat.conductivity_w_mk * across * pm.thickness_m / d;
                }
            };
            if (c > 0) side(r, c - 1, true);
            if (c + 1 < m) side(r, c + 1, true);
            if (r > 0) side(r - 1, c, false);
            if (r + 1 < m) side(r + 1, c, false);
            bound = std::min(bound, pm.cell_capacity[static_cast<std::size_t>(pm.cell_index(r, c))] / sum);
        }
    }
    return bound;
}

void check_state(const ThermalState& state, const PanelModel& pm) {
    if (state.nodes_per_side != pm.m ||
        state.temperature_k.size() != static_cast<std::size_t>(pm.m) * pm.m)
        throw ValidationError("thermal state shape does not match the panel configuration");
}

}  // namespace

void MaterialSpec::validate_or_throw() const {
    require_positive(tensile_strength_mpa, "tensile strength");
    require_positive(compressive_strength_mpa, "compressive strength");
    require_positive(density_kg_m3, "density");
    require_positive(conductivity_w_mk, "conductivity");
    require_positive(heat_capacity_j_kgk, "heat capacity");
    require_positive(youngs_modulus_gpa, "Young's modulus");
    if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5))
        throw ValidationError("Poisson ratio out of range");
    if (!(emissivity >= 0.0 && emissivity <= 1.0)) throw ValidationError("emissivity out of [0,1]");
    if (!(convection_w_m2k >= 0.0)) throw ValidationError("convection coefficient negative");
}

void ContactSpec::validate_or_throw() const {
    if (!(gap_conductance_w_m2k >= 0.0)) throw ValidationError("gap conductance negative");
    require_positive(asperity_height_m, "asperity height");
    require_positive(asperity_slope, "asperity slope");
    require_positive(vickers_c1_pa, "Vickers c1");
    if (!(friction_coefficient >= 0.0)) throw ValidationError("friction coefficient negative");
}

void LoadProfile::validate_or_throw() const {
    if (!(0.0 <= t_start_s && t_start_s <= t_peak_s && t_peak_s <= t_hold_end_s &&
          t_hold_end_s <= t_end_s))
        throw ValidationError("load profile times must satisfy 0 <= start <= peak <= hold <= end");
    if (peak_c < ambient_c) throw ValidationError("peak temperature below ambient");
    require_positive(spot_radius_mm, "spot radius");
}

void OracleConfig::validate_or_throw() const {
    material.validate_or_throw();
    contact.validate_or_throw();
    profile.validate_or_throw();
    require_positive(panel_size_mm, "panel size");
    if (tile_subgrid < 1 || tile_subgrid > 16)
        throw ValidationError("tile subgrid must lie in [1, 16]");
}

std::optional<double> load_temperature(double t_s, const LoadProfile& profile) {
    if (t_s > profile.t_hold_end_s) return std::nullopt;
    if (t_s <= profile.t_start_s) return profile.ambient_c;
    if (t_s >= profile.t_peak_s) return profile.peak_c;
    const double rate = (profile.peak_c - profile.ambient_c) / (profile.t_peak_s - profile.t_start_s);
    return profile.ambient_c + rate * (t_s - profile.t_start_s);
}

double contact_conductance(double pressure_pa, const ContactSpec& contact,
                           const MaterialSpec& material) {
    if (pressure_pa < 0.0) throw ValidationError("contact pressure must be nonnegative");
    double h = contact.gap_conductance_w_m2k;
    if (pressure_pa > 0.0) {
        constexpr double sigma0 = 1e-6;  // Vickers reference roughness, 1 um
        const double hardness_base =
            contact.vickers_c1_pa *
            std::pow(1.62 * contact.asperity_height_m / (sigma0 * contact.asperity_slope),
                     contact.vickers_c2);
        const double rel = std::pow(pressure_pa / hardness_base,
                                    1.0 / (1.0 + 0.071 * contact.vickers_c2));
        h += 1.25 * material.conductivity_w_mk *
             (contact.asperity_slope / contact.asperity_height_m) * std::pow(rel, 0.95);
    }
    return h;
}

double constrained_stress(double delta_t_k, const MaterialSpec& material) {
    return material.youngs_modulus_gpa * 1e9 * material.expansion_per_k * delta_t_k /
           (1.0 - material.poisson_ratio);
}

ThermalState initial_state(const design::PanelDesign& design, const OracleConfig& config) {
    PanelModel pm(design, config);
    ThermalState st;
    st.time_s = 0.0;
    st.nodes_per_side = pm.m;
    st.temperature_k.assign(static_cast<std::size_t>(pm.m) * pm.m, pm.ambient_k);
    return st;
}

double max_stable_dt(const design::PanelDesign& design, const OracleConfig& config) {
    PanelModel pm(design, config);
    return stable_dt_bound(pm, config);
}

void step_thermal(ThermalState& state, double dt_s, const design::PanelDesign& design,
                  const OracleConfig& config) {
    require_positive(dt_s, "dt");
    Simulator sim(design, config);
    check_state(state, sim.model());
    const double bound = stable_dt_bound(sim.model(), config);
    if (dt_s > bound)
        throw NumericError("explicit step " + format_double(dt_s) +
                           " s violates the stability bound; largest admissible dt is " +
                           format_double(bound) + " s");
    sim.state() = state;
    sim.step(dt_s);
    state = sim.state();
}

MechanicsOutputs mechanics_outputs(const ThermalState& state, const design::PanelDesign& design,
                                   const OracleConfig& config, const ThermalState* previous) {
    PanelModel pm(design, config);
    check_state(state, pm);
    if (previous) check_state(*previous, pm);

    const auto& mat = config.material;
    const DruckerPrager dp(mat);
    const double e_pa = mat.youngs_modulus_gpa * 1e9;

    TileStats stats;
    stats.compute(pm, state);
    InterfaceLoads loads;
    loads.compute(pm, stats, mat, config.contact, false);

    MechanicsOutputs out;
    out.safety_factor = kSafetyFactorMax;

    const int tiles = pm.n * pm.n;
    std::vector<double> interference(static_cast<std::size_t>(tiles));
    for (int t = 0; t < tiles; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        const double mean_dt = stats.mean_dt[ti];
        const double sigma = tile_sigma(mean_dt, mat);
        interference[ti] = tile_interference(pm, t, mean_dt, mat);

        const int row = t / pm.n, col = t % pm.n;
        const double vol = pm.tile_width_m[static_cast<std::size_t>(row)] *
                           pm.tile_width_m[static_cast<std::size_t>(col)] * pm.thickness_m;
        out.elastic_energy_j += sigma * sigma * (1.0 - mat.poisson_ratio) / e_pa * vol;

        // Mean face angle: interface mean toward each neighbour, own angle at
        // the clamped panel boundary.
        double angle_sum = 0.0;
        auto face = [&](int nbr_row, int nbr_col) {
            if (nbr_row < 0 || nbr_row >= pm.n || nbr_col < 0 || nbr_col >= pm.n) {
                angle_sum += pm.tile_angle_rad[ti];
            } else {
                angle_sum += 0.5 * (pm.tile_angle_rad[ti] +
                                    pm.tile_angle_rad[static_cast<std::size_t>(nbr_row) * pm.n + nbr_col]);
            }
        };
        face(row - 1, col);
        face(row + 1, col);
        face(row, col - 1);
        face(row, col + 1);
        const double theta_bar = angle_sum / 4.0;
        const double ride_up_m = interference[ti] / std::tan(theta_bar);
        out.oop_deformation_mm = std::max(out.oop_deformation_mm, ride_up_m / kMmToM);

        // Drucker-Prager margin on the proxy stress state: equibiaxial
        // membrane compression from the blocked mean expansion plus a tensile
        // principal component from the in-tile temperature spread.
        const double sigma_comp = std::max(0.0, sigma);
        const double sigma_grad = 0.5 * std::max(0.0, constrained_stress(stats.max_k[ti] - stats.min_k[ti], mat));
        const double s_a = -sigma_comp, s_b = sigma_grad;
        const double i1 = s_a + s_b;
        const double j2 = ((s_a - s_b) * (s_a - s_b) + s_b * s_b + s_a * s_a) / 6.0;
        const double denom = dp.alpha * i1 + std::sqrt(j2);
        double sf = kSafetyFactorMax;
        if (denom > dp.k / kSafetyFactorMax) sf = std::min(dp.k / denom, kSafetyFactorMax);
        out.safety_factor = std::min(out.safety_factor, sf);
    }

    std::vector<double> prev_interference;
    std::vector<double> prev_pressure;
    if (previous) {
        TileStats prev_stats;
        prev_stats.compute(pm, *previous);
        InterfaceLoads prev_loads;
        prev_loads.compute(pm, prev_stats, mat, config.contact, false);
        prev_pressure = std::move(prev_loads.pressure_pa);
        prev_interference.resize(static_cast<std::size_t>(tiles));
        for (int t = 0; t < tiles; ++t)
            prev_interference[static_cast<std::size_t>(t)] =
                tile_interference(pm, t, prev_stats.mean_dt[static_cast<std::size_t>(t)], mat);
    }

    for (std::size_t i = 0; i < pm.interfaces.size(); ++i) {
        const auto& f = pm.interfaces[i];
        const double normal_n = loads.pressure_pa[i] * f.area_m2;
        out.friction_force_n += config.contact.friction_coefficient * normal_n;

        if (previous) {
            // Slip along the wedge face implied by the interference change.
            auto slide = [&](const std::vector<double>& itf) {
                return 0.5 * (itf[static_cast<std::size_t>(f.tile_a)] + itf[static_cast<std::size_t>(f.tile_b)]) /
                       f.sin_theta;
            };
            const double d_slip = std::abs(slide(interference) - slide(prev_interference));
            const double normal_mid = 0.5 * (normal_n + prev_pressure[i] * f.area_m2);
            out.contact_energy_increment_j +=
                config.contact.friction_coefficient * normal_mid * d_slip;
        }
    }
    return out;
}

ResponseSeries simulate(const design::PanelDesign& design, const OracleConfig& config,
                        double sample_step_s) {
    require_positive(sample_step_s, "sample step");
    Simulator sim(design, config);
    const double bound = stable_dt_bound(sim.model(), config);
    const int substeps = std::max(1, static_cast<int>(std::ceil(sample_step_s / (0.5 * bound))));
    const double dt = sample_step_s / substeps;

    const auto samples = static_cast<std::size_t>(
        std::floor(config.profile.t_end_s / sample_step_s + 1e-9)) + 1;

    ResponseSeries series;
    series.time_s.resize(samples);
    for (auto& ch : series.channels) ch.resize(samples);

    ThermalState prev_state = sim.state();
    double prev_energy_in = 0.0, prev_energy_loss = 0.0, contact_energy = 0.0;

    for (std::size_t k = 0; k < samples; ++k) {
        const double t_sample = static_cast<double>(k) * sample_step_s;
        if (k > 0) {
            // Re-anchor time to the exact sample instant to avoid drift.
            sim.state().time_s = static_cast<double>(k - 1) * sample_step_s;
            for (int j = 0; j < substeps; ++j) sim.step(dt);
            sim.state().time_s = t_sample;
        }

        const MechanicsOutputs mech =
            mechanics_outputs(sim.state(), design, config, k > 0 ? &prev_state : nullptr);
        contact_energy += mech.contact_energy_increment_j;

        const double e_in = sim.energy_in();
        const double e_loss = sim.energy_loss();
        const double input_power =
            k == 0 ? 0.0 : (e_in - prev_energy_in) / sample_step_s;
        const double heat_rate =
            k == 0 ? 0.0 : input_power - (e_loss - prev_energy_loss) / sample_step_s;

        series.time_s[k] = t_sample;
        series.channels[kSafetyFactor][k] = mech.safety_factor;
        series.channels[kFrictionForce][k] = mech.friction_force_n;
        series.channels[kInternalEnergy][k] = sim.internal_energy_j();
        series.channels[kOopDeformation][k] = mech.oop_deformation_mm;
        series.channels[kEdgeTemperature][k] = sim.edge_temperature_c();
        series.channels[kHeatRate][k] = heat_rate;
        series.channels[kContactEnergy][k] = contact_energy;
        series.channels[kElasticEnergy][k] = mech.elastic_energy_j;
        series.channels[kInputPower][k] = input_power;

        prev_state = sim.state();
        prev_energy_in = e_in;
        prev_energy_loss = e_loss;
    }

    for (const auto& ch : series.channels)
        for (double v : ch)
            if (!std::isfinite(v)) throw NumericError("non-finite response channel value");
    return series;
}

void write_response_csv(const ResponseSeries& series, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "t";
    for (const auto& name : kChannelNames) out << ',' << name;
    out << '\n';
    for (std::size_t k = 0; k < series.samples(); ++k) {
        out << format_double(series.time_s[k]);
        for (const auto& ch : series.channels) out << ',' << format_double(ch[k]);
        out << '\n';
    }
    io::write_file_atomic(path, out.str());
}

ResponseSeries read_response_csv(const std::filesystem::path& path) {
    std::istringstream in(io::read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty response file: " + path.string());
    const auto header = io::split_csv_line(line);
    if (header.size() != static_cast<std::size_t>(kChannelCount) + 1 || header[0] != "t")
        throw ConfigError("unexpected response header in " + path.string());
    for (int i = 0; i < kChannelCount; ++i)
        if (header[static_cast<std::size_t>(i) + 1] != kChannelNames[static_cast<std::size_t>(i)])
            throw ConfigError("unexpected response channel order in " + path.string());

    ResponseSeries series;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = io::split_csv_line(line);
        if (fields.size() != static_cast<std::size_t>(kChannelCount) + 1)
            throw ConfigError("malformed response row in " + path.string());
        series.time_s.push_back(std::stod(fields[0]));
        for (int i = 0; i < kChannelCount; ++i)
            series.channels[static_cast<std::size_t>(i)].push_back(
                std::stod(fields[static_cast<std::size_t>(i) + 1]));
    }
    return series;
}

namespace {

nlohmann::json material_to_json(const MaterialSpec& m) {
    return {
        {"tensile_strength_mpa", m.tensile_strength_mpa},
        {"compressive_strength_mpa", m.compressive_strength_mpa},
        {"density_kg_m3", m.density_kg_m3},
        {"conductivity_w_mk", m.conductivity_w_mk},
        {"heat_capacity_j_kgk", m.heat_capacity_j_kgk},
        {"youngs_modulus_gpa", m.youngs_modulus_gpa},
        {"poisson_ratio", m.poisson_ratio},
        {"expansion_per_k", m.expansion_per_k},
        {"emissivity", m.emissivity},
        {"convection_w_m2k", m.convection_w_m2k},
    };
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

OracleConfig load_oracle_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad oracle config " + path.string() + ": " + e.what());
    }
    OracleConfig cfg;
    try {
        if (j.contains("material")) {
            const auto& m = j["material"];
            maybe(m, "tensile_strength_mpa", cfg.material.tensile_strength_mpa);
            maybe(m, "compressive_strength_mpa", cfg.material.compressive_strength_mpa);
            maybe(m, "density_kg_m3", cfg.material.density_kg_m3);
            maybe(m, "conductivity_w_mk", cfg.material.conductivity_w_mk);
            maybe(m, "heat_capacity_j_kgk", cfg.material.heat_capacity_j_kgk);
            maybe(m, "youngs_modulus_gpa", cfg.material.youngs_modulus_gpa);
            maybe(m, "poisson_ratio", cfg.material.poisson_ratio);
            maybe(m, "expansion_per_k", cfg.material.expansion_per_k);
            maybe(m, "emissivity", cfg.material.emissivity);
            maybe(m, "convection_w_m2k", cfg.material.convection_w_m2k);
        }
        if (j.contains("contact")) {
            const auto& c = j["contact"];
            maybe(c, "gap_conductance_w_m2k", cfg.contact.gap_conductance_w_m2k);
            maybe(c, "asperity_height_m", cfg.contact.asperity_height_m);
            maybe(c, "asperity_slope", cfg.contact.asperity_slope);
            maybe(c, "vickers_c1_pa", cfg.contact.vickers_c1_pa);
            maybe(c, "vickers_c2", cfg.contact.vickers_c2);
            maybe(c, "friction_coefficient", cfg.contact.friction_coefficient);
        }
        if (j.contains("profile")) {
            const auto& p = j["profile"];
            maybe(p, "t_start_s", cfg.profile.t_start_s);
            maybe(p, "t_peak_s", cfg.profile.t_peak_s);
            maybe(p, "t_hold_end_s", cfg.profile.t_hold_end_s);
            maybe(p, "t_end_s", cfg.profile.t_end_s);
            maybe(p, "ambient_c", cfg.profile.ambient_c);
            maybe(p, "peak_c", cfg.profile.peak_c);
            maybe(p, "spot_radius_mm", cfg.profile.spot_radius_mm);
        }
        maybe(j, "panel_size_mm", cfg.panel_size_mm);
        maybe(j, "tile_subgrid", cfg.tile_subgrid);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad oracle config " + path.string() + ": " + e.what());
    }
    cfg.validate_or_throw();
    return cfg;
}

void save_oracle_config(const OracleConfig& config, const std::filesystem::path& path) {
    config.validate_or_throw();
    nlohmann::json j;
    j["material"] = material_to_json(config.material);
    j["contact"] = {
        {"gap_conductance_w_m2k", config.contact.gap_conductance_w_m2k},
        {"asperity_height_m", config.contact.asperity_height_m},
        {"asperity_slope", config.contact.asperity_slope},
        {"vickers_c1_pa", config.contact.vickers_c1_pa},
        {"vickers_c2", config.contact.vickers_c2},
        {"friction_coefficient", config.contact.friction_coefficient},
    };
    j["profile"] = {
        {"t_start_s", config.profile.t_start_s},
        {"t_peak_s", config.profile.t_peak_s},
        {"t_hold_end_s", config.profile.t_hold_end_s},
        {"t_end_s", config.profile.t_end_s},
        {"ambient_c", config.profile.ambient_c},
        {"peak_c", config.profile.peak_c},
        {"spot_radius_mm", config.profile.spot_radius_mm},
    };
    j["panel_size_mm"] = config.panel_size_mm;
    j["tile_subgrid"] = config.tile_subgrid;
    io::write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace interlock::thermo
