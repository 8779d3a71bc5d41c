#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "interlock/dataset.hpp"
#include "interlock/design_space.hpp"
#include "interlock/neuralnet.hpp"
#include "interlock/thermo_oracle.hpp"

namespace interlock::search {

enum class ScenarioKind { shield, sink };

ScenarioKind scenario_from_name(const std::string& name);
std::string scenario_name(ScenarioKind kind);

// Two-objective weighting. shield: minimize peak edge temperature and peak
// out-of-plane deformation. sink: maximize peak internal energy, minimize
// peak elastic energy. Weights must be a convex pair.
struct Scenario {
    ScenarioKind kind = ScenarioKind::shield;
    double w1 = 1.0;
    double w2 = 0.0;

    thermo::Channel objective1() const;
    thermo::Channel objective2() const;
    bool maximize1() const;  // true when objective 1 is a maximization
    bool maximize2() const;

    void validate_or_throw() const;
};

// Canonical weight sweep used for reporting.
inline const std::vector<std::pair<double, double>> kWeightSweep = {
    {1.0, 0.0}, {0.75, 0.25}, {0.5, 0.5}, {0.25, 0.75}, {0.0, 1.0}};

// Per-channel maxima over a complete 1 Hz time sweep. `times` guards against
// gaps: it must be t_begin, t_begin+1, ..., t_end-1.
std::array<double, thermo::kChannelCount> max_over_time(const nn::Matrix& predictions,
                                                        const std::vector<double>& times,
                                                        int t_begin_s, int t_end_s);

// Candidate-pool normalization bounds for the two scenario objectives.
struct ObjectivePool {
    double min1 = 0.0, max1 = 0.0;
    double min2 = 0.0, max2 = 0.0;
};

// Maps raw objective maxima onto [0,1] with 0 = best. Maximization
// objectives are flipped (1 - normalized); a degenerate pool span contributes 0.
std::pair<double, double> orient_and_normalize(double v1, double v2, const Scenario& scenario,
                                               const ObjectivePool& pool);

double weighted_score(std::pair<double, double> oriented, const Scenario& scenario);

struct RankedCandidate {
    std::uint64_t design_index = 0;  // index into the grid's design enumeration
    design::PanelDesign design;
    double objective1_max = 0.0;
    double objective2_max = 0.0;
    double score = 0.0;
    int rank = 0;
};

struct RankOptions {
    int top_k = 100;
    int t_begin_s = 0;
    int t_end_s = 201;  // half-open; default covers t = 0..200
    int workers = 1;
    std::uint64_t shard_size = 4096;  // designs per work unit
};

struct RankingResult {
    std::vector<RankedCandidate> top;  // ascending score
    ObjectivePool pool;
    std::uint64_t designs_scored = 0;
    std::uint64_t model_fingerprint = 0;
    std::uint64_t grid_fingerprint = 0;
};

// Scores every design of the grid with the surrogate: per design, predict the
// response over the time window, reduce to objective maxima, normalize
// against the whole candidate pool, and keep the top_k by weighted score.
// Designs stream through bounded shards; ties break on the feature vector, so
// the outcome is independent of shard boundaries and worker count.
RankingResult rank_grid(const nn::Surrogate& surrogate, const design::DesignGrid& grid,
                        const Scenario& scenario, const RankOptions& options);

// ranking CSV: rank,score,n,angle_1..angle_A,lr,obj1_max,obj2_max
void write_ranking_csv(const RankingResult& result, int grid_size,
                       const std::filesystem::path& path);
// Manifest carries scenario, weights, pool bounds, fingerprints, row counts.
void write_ranking_manifest(const RankingResult& result, const Scenario& scenario,
                            const design::DesignGrid& grid, const RankOptions& options,
                            const std::filesystem::path& path);

struct LoadedRanking {
    std::vector<RankedCandidate> top;
    Scenario scenario;
    ObjectivePool pool;
    int grid_size = 3;
    int t_begin_s = 0;
    int t_end_s = 201;
};

LoadedRanking load_ranking(const std::filesystem::path& csv_path,
                           const std::filesystem::path& manifest_path);

struct ValidationRecord {
    design::PanelDesign design;
    double predicted_score = 0.0;
    double oracle_score = 0.0;
    double score_gap = 0.0;       // |predicted - oracle|
    double oracle_objective1 = 0.0;
    double oracle_objective2 = 0.0;
    double training_best_objective1 = 0.0;  // best oracle objective among training designs
    double training_best_score = 0.0;
    double improvement_pct = 0.0;  // oracle objective 1 vs training best, weights (1,0) sense

    std::string to_json() const;
};

// Re-simulates a ranked candidate with the oracle and scores the truth inside
// the same pool normalization. The training table supplies the baseline: its
// designs are re-simulated and the scenario-best one is the reference.
ValidationRecord validate_with_oracle(const RankedCandidate& candidate, const Scenario& scenario,
                                      const ObjectivePool& pool,
                                      const data::SampleTable& training_table,
                                      const thermo::OracleConfig& config, int t_begin_s,
                                      int t_end_s);

}  // namespace interlock::search
