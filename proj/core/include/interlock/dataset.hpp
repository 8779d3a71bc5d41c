#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "interlock/design_space.hpp"
#include "interlock/thermo_oracle.hpp"

namespace interlock::data {

// Row-major numeric table: one feature row and one target row per sample,
// plus provenance linking every row back to its producing run.
struct SampleTable {
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
    std::vector<double> features;  // rows x feature_width
    std::vector<double> targets;   // rows x target_width

    struct Provenance {
        std::int64_t design_id = 0;
        double time_s = 0.0;
    };
    std::vector<Provenance> provenance;

    std::size_t rows() const { return provenance.size(); }
    std::size_t feature_width() const { return feature_names.size(); }
    std::size_t target_width() const { return target_names.size(); }

    const double* feature_row(std::size_t r) const { return features.data() + r * feature_width(); }
    const double* target_row(std::size_t r) const { return targets.data() + r * target_width(); }

    void append(const SampleTable& other);
};

struct SimRun {
    std::int64_t design_id = 0;
    design::PanelDesign design;
    thermo::ResponseSeries series;
};

// One row per sample time of every run. Repeated runs of the same design are
// kept as distinct rows on purpose: duplicated feature vectors with differing
// targets teach the model the run-to-run band. All runs must share one grid
// size (one model per grid size).
SampleTable flatten_runs(const std::vector<SimRun>& runs);

// Seeded shuffle then split: first round(fraction * rows) shuffled rows are
// the training set. Deterministic for a given (table, fraction, seed).
std::pair<SampleTable, SampleTable> split(const SampleTable& table, double train_fraction,
                                          std::uint64_t seed);

// Per-column min-max map onto [0, 1]. Constant columns map to 0. The
// fingerprint identifies the fit set so a scaler is never silently reused
// against foreign data.
class Scaler {
  public:
    static Scaler fit(const std::vector<double>& row_major, std::size_t width,
                      const std::vector<std::string>& columns);

    void transform(std::vector<double>& row_major, std::size_t width) const;
    void inverse(std::vector<double>& row_major, std::size_t width) const;
    // Single-row helpers used on hot paths.
    void transform_row(const double* in, double* out) const;
    void inverse_row(const double* in, double* out) const;

    std::size_t width() const { return mins_.size(); }
    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<double>& mins() const { return mins_; }
    const std::vector<double>& maxs() const { return maxs_; }
    std::uint64_t fingerprint() const { return fingerprint_; }

    std::string to_json() const;
    static Scaler from_json(const std::string& text);

  private:
    std::vector<std::string> columns_;
    std::vector<double> mins_;
    std::vector<double> maxs_;
    std::uint64_t fingerprint_ = 0;

    void check_width(std::size_t width) const;
};

// Dataset CSV layout:
//   design_id,n,angle_1..angle_8,lr,tiles,t,<nine response channels>
// Angle columns beyond the grid's class count stay blank. Doubles are written
// with 17 significant digits, so write/read round-trips exactly.
void write_dataset_csv(const SampleTable& table, int grid_size,
                       const std::filesystem::path& path);
SampleTable read_dataset_csv(const std::filesystem::path& path, int* grid_size_out = nullptr);

}  // namespace interlock::data
