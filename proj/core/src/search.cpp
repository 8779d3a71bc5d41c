#include "interlock/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <map>
#include <queue>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "interlock/common.hpp"
#include "interlock/io.hpp"
#include "interlock/metrics.hpp"

namespace interlock::search {

ScenarioKind scenario_from_name(const std::string& name) {
    if (name == "shield") return ScenarioKind::shield;
    if (name == "sink") return ScenarioKind::sink;
    throw ConfigError("unknown scenario '" + name + "' (expected 'shield' or 'sink')");
}

std::string scenario_name(ScenarioKind kind) {
    return kind == ScenarioKind::shield ? "shield" : "sink";
}

thermo::Channel Scenario::objective1() const {
    return kind == ScenarioKind::shield ? thermo::kEdgeTemperature : thermo::kInternalEnergy;
}

thermo::Channel Scenario::objective2() const {
    return kind == ScenarioKind::shield ? thermo::kOopDeformation : thermo::kElasticEnergy;
}

bool Scenario::maximize1() const { return kind == ScenarioKind::sink; }

bool Scenario::maximize2() const { return false; }

void Scenario::validate_or_throw() const {
    if (!(w1 >= 0.0 && w2 >= 0.0))
        throw ValidationError("scenario weights must be nonnegative");
    if (std::abs(w1 + w2 - 1.0) > 1e-9)
        throw ValidationError("scenario weights must sum to 1");
}

std::array<double, thermo::kChannelCount> max_over_time(const nn::Matrix& predictions,
                                                        const std::vector<double>& times,
                                                        int t_begin_s, int t_end_s) {
    if (t_begin_s >= t_end_s) throw ValidationError("empty time window");
    const auto expect = static_cast<std::size_t>(t_end_s - t_begin_s);
    if (times.size() != expect || predictions.rows != expect ||
        predictions.cols != static_cast<std::size_t>(thermo::kChannelCount))
        throw ValidationError("prediction block does not cover the time window");
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] != static_cast<double>(t_begin_s) + static_cast<double>(i))
            throw ValidationError("time window has gaps");

    std::array<double, thermo::kChannelCount> out;
    out.fill(-1e300);
    for (std::size_t r = 0; r < predictions.rows; ++r) {
        const double* row = predictions.row(r);
        for (int c = 0; c < thermo::kChannelCount; ++c)
            out[static_cast<std::size_t>(c)] =
                std::max(out[static_cast<std::size_t>(c)], row[c]);
    }
    return out;
}

std::pair<double, double> orient_and_normalize(double v1, double v2, const Scenario& scenario,
                                               const ObjectivePool& pool) {
    auto one = [](double v, double lo, double hi, bool maximize) {
        const double span = hi - lo;
        if (!(span > 0.0)) return 0.0;
        const double n = (v - lo) / span;
        return maximize ? 1.0 - n : n;
    };
    return {one(v1, pool.min1, pool.max1, scenario.maximize1()),
            one(v2, pool.min2, pool.max2, scenario.maximize2())};
}

double weighted_score(std::pair<double, double> oriented, const Scenario& scenario) {
    return scenario.w1 * oriented.first + scenario.w2 * oriented.second;
}

namespace {

std::uint64_t model_fingerprint(const nn::Surrogate& surrogate) {
    std::uint64_t fp = surrogate.feature_scaler.fingerprint();
    const std::uint64_t t = surrogate.target_scaler.fingerprint();
    fp = fnv1a64(&t, sizeof(t), fp);
    const auto& params = surrogate.model.parameters();
    return fnv1a64(params.data(), params.size() * sizeof(double), fp);
}

std::uint64_t grid_fingerprint(const design::DesignGrid& grid) {
    std::ostringstream s;
    s << "n=" << grid.grid_size << ";angles=";
    for (double a : grid.angle_values_deg) s << format_double(a) << ',';
    s << ";lr=";
    for (double r : grid.lr_values) s << format_double(r) << ',';
    s << ";t=" << grid.t_begin_s << ':' << grid.t_end_s;
    return fnv1a64(s.str());
}

// Objective window maxima of one oracle series.
std::pair<double, double> series_window_max(const thermo::ResponseSeries& series,
                                            const Scenario& scenario, int t_begin_s,
                                            int t_end_s) {
    if (t_begin_s >= t_end_s) throw ValidationError("empty time window");
    const auto c1 = static_cast<std::size_t>(scenario.objective1());
    const auto c2 = static_cast<std::size_t>(scenario.objective2());
    double m1 = -1e300, m2 = -1e300;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < series.samples(); ++i) {
        const double t = series.time_s[i];
        if (t < static_cast<double>(t_begin_s) || t >= static_cast<double>(t_end_s)) continue;
        m1 = std::max(m1, series.channels[c1][i]);
        m2 = std::max(m2, series.channels[c2][i]);
        ++hits;
    }
    if (hits != static_cast<std::size_t>(t_end_s - t_begin_s))
        throw ValidationError("response series does not cover the scoring window");
    return {m1, m2};
}

}  // namespace

RankingResult rank_grid(const nn::Surrogate& surrogate, const design::DesignGrid& grid,
                        const Scenario& scenario, const RankOptions& options) {
    scenario.validate_or_throw();
    grid.validate_or_throw();
    if (options.top_k < 1) throw ValidationError("top_k must be at least 1");
    if (options.t_begin_s >= options.t_end_s) throw ValidationError("empty scoring window");
    if (options.workers < 1) throw ValidationError("workers must be at least 1");
    if (options.shard_size == 0) throw ValidationError("shard size must be positive");

    const std::uint64_t designs = grid.design_count();
    const auto window = static_cast<std::size_t>(options.t_end_s - options.t_begin_s);
    const std::size_t fw = grid.feature_width();

    // Pass 1: every design's objective maxima over the window. Two doubles per
    // design; grid rows themselves are never materialized.
    std::vector<double> obj1(designs), obj2(designs);
    const auto o1 = static_cast<std::size_t>(scenario.objective1());
    const auto o2 = static_cast<std::size_t>(scenario.objective2());

    std::atomic<std::uint64_t> next_shard{0};
    auto worker = [&]() {
        std::vector<double> block(window * fw);
        std::vector<double> pred(window * static_cast<std::size_t>(thermo::kChannelCount));
        for (;;) {
            const std::uint64_t shard = next_shard.fetch_add(1);
            const std::uint64_t begin = shard * options.shard_size;
            if (begin >= designs) return;
            const std::uint64_t end = std::min(designs, begin + options.shard_size);
            for (std::uint64_t d = begin; d < end; ++d) {
                const auto des = grid.design_at(d);
                const auto base = design::encode_features(des, 0.0);
                for (std::size_t r = 0; r < window; ++r) {
                    std::memcpy(block.data() + r * fw, base.data(), fw * sizeof(double));
                    block[r * fw + fw - 1] =
                        static_cast<double>(options.t_begin_s) + static_cast<double>(r);
                }
                surrogate.predict(block.data(), window, pred.data());
                double m1 = -1e300, m2 = -1e300;
                for (std::size_t r = 0; r < window; ++r) {
                    m1 = std::max(m1, pred[r * thermo::kChannelCount + o1]);
                    m2 = std::max(m2, pred[r * thermo::kChannelCount + o2]);
                }
                obj1[d] = m1;
                obj2[d] = m2;
            }
        }
    };
    if (options.workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool_threads;
        for (int i = 0; i < options.workers; ++i) pool_threads.emplace_back(worker);
        for (auto& t : pool_threads) t.join();
    }

    RankingResult result;
    result.designs_scored = designs;
    result.model_fingerprint = model_fingerprint(surrogate);
    result.grid_fingerprint = grid_fingerprint(grid);
    result.pool.min1 = *std::min_element(obj1.begin(), obj1.end());
    result.pool.max1 = *std::max_element(obj1.begin(), obj1.end());
    result.pool.min2 = *std::min_element(obj2.begin(), obj2.end());
    result.pool.max2 = *std::max_element(obj2.begin(), obj2.end());

    // Pass 2: weighted scores, bounded top-k heap. The design enumeration
    // index is the lexicographic feature order, so (score, index) ties break
    // on the feature vector and the outcome is shard- and worker-independent.
    using Entry = std::pair<double, std::uint64_t>;
    std::priority_queue<Entry> heap;  // worst of the kept set on top
    const auto keep = static_cast<std::size_t>(options.top_k);
    for (std::uint64_t d = 0; d < designs; ++d) {
        const auto oriented = orient_and_normalize(obj1[d], obj2[d], scenario, result.pool);
        const Entry e{weighted_score(oriented, scenario), d};
        if (heap.size() < keep) {
            heap.push(e);
        } else if (e < heap.top()) {
            heap.pop();
            heap.push(e);
        }
    }

    std::vector<Entry> kept;
    kept.reserve(heap.size());
    while (!heap.empty()) {
        kept.push_back(heap.top());
        heap.pop();
    }
    std::sort(kept.begin(), kept.end());

    result.top.reserve(kept.size());
    int rank = 1;
    for (const auto& [score, d] : kept) {
        RankedCandidate cand;
        cand.design_index = d;
        cand.design = grid.design_at(d);
        cand.objective1_max = obj1[d];
        cand.objective2_max = obj2[d];
        cand.score = score;
        cand.rank = rank++;
        result.top.push_back(std::move(cand));
    }
    return result;
}

void write_ranking_csv(const RankingResult& result, int grid_size,
                       const std::filesystem::path& path) {
    const int classes = design::angle_class_count(grid_size);
    std::ostringstream out;
    out << "rank,score,n";
    for (int a = 1; a <= classes; ++a) out << ",angle_" << a;
    out << ",lr,obj1_max,obj2_max\n";
    for (const auto& c : result.top) {
        if (c.design.grid_size != grid_size)
            throw ValidationError("ranking rows disagree with the stated grid size");
        out << c.rank << ',' << format_double(c.score) << ',' << grid_size;
        for (double a : c.design.angles_deg) out << ',' << format_double(a);
        out << ',' << format_double(c.design.length_ratio);
        out << ',' << format_double(c.objective1_max) << ',' << format_double(c.objective2_max)
            << '\n';
    }
    io::write_file_atomic(path, out.str());
}

void write_ranking_manifest(const RankingResult& result, const Scenario& scenario,
                            const design::DesignGrid& grid, const RankOptions& options,
                            const std::filesystem::path& path) {
    nlohmann::json j;
    j["scenario"] = scenario_name(scenario.kind);
    j["w1"] = scenario.w1;
    j["w2"] = scenario.w2;
    j["grid_size"] = grid.grid_size;
    j["angle_values_deg"] = grid.angle_values_deg;
    j["lr_values"] = grid.lr_values;
    j["t_begin_s"] = options.t_begin_s;
    j["t_end_s"] = options.t_end_s;
    j["top_k"] = options.top_k;
    j["rows_written"] = result.top.size();
    j["designs_scored"] = result.designs_scored;
    j["pool"] = {{"min1", result.pool.min1},
                 {"max1", result.pool.max1},
                 {"min2", result.pool.min2},
                 {"max2", result.pool.max2}};
    j["model_fingerprint"] = hex_string(result.model_fingerprint);
    j["grid_fingerprint"] = hex_string(result.grid_fingerprint);
    io::write_file_atomic(path, j.dump(2) + "\n");
}

LoadedRanking load_ranking(const std::filesystem::path& csv_path,
                           const std::filesystem::path& manifest_path) {
    LoadedRanking loaded;
    try {
        const auto j = nlohmann::json::parse(io::read_file(manifest_path));
        loaded.scenario.kind = scenario_from_name(j.at("scenario").get<std::string>());
        loaded.scenario.w1 = j.at("w1").get<double>();
        loaded.scenario.w2 = j.at("w2").get<double>();
        loaded.grid_size = j.at("grid_size").get<int>();
        loaded.t_begin_s = j.at("t_begin_s").get<int>();
        loaded.t_end_s = j.at("t_end_s").get<int>();
        const auto& p = j.at("pool");
        loaded.pool.min1 = p.at("min1").get<double>();
        loaded.pool.max1 = p.at("max1").get<double>();
        loaded.pool.min2 = p.at("min2").get<double>();
        loaded.pool.max2 = p.at("max2").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad ranking manifest " + manifest_path.string() + ": " + e.what());
    }
    loaded.scenario.validate_or_throw();

    const int classes = design::angle_class_count(loaded.grid_size);
    std::istringstream in(io::read_file(csv_path));
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty ranking file: " + csv_path.string());
    const auto header = io::split_csv_line(line);
    if (header.size() != static_cast<std::size_t>(classes) + 6 || header[0] != "rank")
        throw ConfigError("unexpected ranking header in " + csv_path.string());

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = io::split_csv_line(line);
        if (f.size() != header.size())
            throw ConfigError("malformed ranking row in " + csv_path.string());
        RankedCandidate c;
        c.rank = std::stoi(f[0]);
        c.score = std::stod(f[1]);
        c.design.grid_size = std::stoi(f[2]);
        if (c.design.grid_size != loaded.grid_size)
            throw ConfigError("ranking rows disagree with the manifest grid size");
        for (int a = 0; a < classes; ++a)
            c.design.angles_deg.push_back(std::stod(f[static_cast<std::size_t>(3 + a)]));
        c.design.length_ratio = std::stod(f[static_cast<std::size_t>(3 + classes)]);
        c.objective1_max = std::stod(f[static_cast<std::size_t>(4 + classes)]);
        c.objective2_max = std::stod(f[static_cast<std::size_t>(5 + classes)]);
        c.design.validate_or_throw();
        loaded.top.push_back(std::move(c));
    }
    if (loaded.top.empty()) throw ConfigError("ranking has no rows: " + csv_path.string());
    return loaded;
}

std::string ValidationRecord::to_json() const {
    nlohmann::json j;
    j["design"] = {{"grid_size", design.grid_size},
                   {"angles_deg", design.angles_deg},
                   {"length_ratio", design.length_ratio},
                   {"thickness_mm", design.thickness_mm}};
    j["predicted_score"] = predicted_score;
    j["oracle_score"] = oracle_score;
    j["score_gap"] = score_gap;
    j["oracle_objective1"] = oracle_objective1;
    j["oracle_objective2"] = oracle_objective2;
    j["training_best_objective1"] = training_best_objective1;
    j["training_best_score"] = training_best_score;
    j["improvement_pct"] = improvement_pct;
    return j.dump(2);
}

ValidationRecord validate_with_oracle(const RankedCandidate& candidate, const Scenario& scenario,
                                      const ObjectivePool& pool,
                                      const data::SampleTable& training_table,
                                      const thermo::OracleConfig& config, int t_begin_s,
                                      int t_end_s) {
    scenario.validate_or_throw();
    ValidationRecord rec;
    rec.design = candidate.design;
    rec.predicted_score = candidate.score;

    const auto series = thermo::simulate(candidate.design, config);
    const auto [m1, m2] = series_window_max(series, scenario, t_begin_s, t_end_s);
    rec.oracle_objective1 = m1;
    rec.oracle_objective2 = m2;
    rec.oracle_score = weighted_score(orient_and_normalize(m1, m2, scenario, pool), scenario);
    rec.score_gap = std::abs(rec.predicted_score - rec.oracle_score);

    // One representative feature row per distinct design id in the pool.
    std::map<std::int64_t, std::size_t> first_row;
    for (std::size_t r = 0; r < training_table.rows(); ++r)
        first_row.emplace(training_table.provenance[r].design_id, r);
    if (first_row.empty()) throw ValidationError("training table is empty");

    const bool maximize = scenario.maximize1();
    double best_obj1 = maximize ? -1e300 : 1e300;
    double best_score = 1e300;
    for (const auto& [id, row] : first_row) {
        double t_unused = 0.0;
        const auto des = design::decode_features(
            std::span<const double>(training_table.feature_row(row), training_table.feature_width()),
            t_unused);
        const auto s = thermo::simulate(des, config);
        const auto [b1, b2] = series_window_max(s, scenario, t_begin_s, t_end_s);
        best_obj1 = maximize ? std::max(best_obj1, b1) : std::min(best_obj1, b1);
        best_score = std::min(
            best_score, weighted_score(orient_and_normalize(b1, b2, scenario, pool), scenario));
    }
    rec.training_best_objective1 = best_obj1;
    rec.training_best_score = best_score;

    if (best_obj1 != 0.0) {
        rec.improvement_pct = maximize ? (m1 - best_obj1) / std::abs(best_obj1) * 100.0
                                       : (best_obj1 - m1) / std::abs(best_obj1) * 100.0;
    }
    return rec;
}

}  // namespace interlock::search
