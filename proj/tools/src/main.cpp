#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "interlock/common.hpp"
#include "interlock/dataset.hpp"
#include "interlock/design_space.hpp"
#include "interlock/io.hpp"
#include "interlock/metrics.hpp"
#include "interlock/neuralnet.hpp"
#include "interlock/rng.hpp"
#include "interlock/search.hpp"
#include "interlock/thermo_oracle.hpp"
#include "svg.hpp"

namespace {

using namespace interlock;

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw ConfigError(std::string("bad value in ") + what + ": '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError(std::string(what) + " is empty");
    return out;
}

thermo::OracleConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return {};
    return thermo::load_oracle_config(path);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string design_path;
    std::string config_path;
    std::string out = "response.csv";
    int n = 0;
    std::string angles;
    double lr = 1.0;
    int subgrid = 0;
};

int run_simulate(const SimulateArgs& a) {
    design::PanelDesign d;
    if (!a.design_path.empty()) {
        d = design::load_design_json(a.design_path);
    } else {
        if (a.n == 0 || a.angles.empty())
            throw ConfigError("either --design or all of --n/--angles/--lr are required");
        d.grid_size = a.n;
        d.angles_deg = parse_double_list(a.angles, "--angles");
        d.length_ratio = a.lr;
    }
    thermo::OracleConfig cfg = load_config_or_default(a.config_path);
    if (a.subgrid > 0) cfg.tile_subgrid = a.subgrid;
    d.validate_or_throw(cfg.panel_size_mm);

    const auto series = thermo::simulate(d, cfg);
    thermo::write_response_csv(series, a.out);

    double peak_edge = -1e300;
    for (double v : series.channels[thermo::kEdgeTemperature]) peak_edge = std::max(peak_edge, v);
    std::cout << "wrote " << a.out << " (" << series.samples() << " samples, peak edge "
              << peak_edge << " C)\n";
    return 0;
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    int n = 3;
    int designs = 100;
    std::uint64_t seed = 1;
    std::string config_path;
    std::string out = "dataset.csv";
    std::string subgrids = "3";
    int time_stride = 1;
};

int run_gen_data(const GenDataArgs& a) {
    if (a.designs < 1) throw ConfigError("--designs must be at least 1");
    if (a.time_stride < 1) throw ConfigError("--time-stride must be at least 1");
    const auto base_cfg = load_config_or_default(a.config_path);

    std::vector<int> subgrids;
    for (double v : parse_double_list(a.subgrids, "--subgrids")) {
        subgrids.push_back(static_cast<int>(v));
        if (subgrids.back() < 1) throw ConfigError("--subgrids entries must be positive");
    }

    auto designs = design::sample_grid_designs(a.n, a.designs, a.seed);
    for (const auto& d : designs) d.validate_or_throw(base_cfg.panel_size_mm);

    std::vector<data::SimRun> runs;
    for (std::size_t i = 0; i < designs.size(); ++i) {
        for (int sg : subgrids) {
            thermo::OracleConfig cfg = base_cfg;
            cfg.tile_subgrid = sg;
            auto series = thermo::simulate(designs[i], cfg);
            if (a.time_stride > 1) {
                thermo::ResponseSeries thin;
                for (std::size_t k = 0; k < series.samples(); k += static_cast<std::size_t>(a.time_stride)) {
                    thin.time_s.push_back(series.time_s[k]);
                    for (int c = 0; c < thermo::kChannelCount; ++c)
                        thin.channels[static_cast<std::size_t>(c)].push_back(
                            series.channels[static_cast<std::size_t>(c)][k]);
                }
                series = std::move(thin);
            }
            runs.push_back({static_cast<std::int64_t>(i), designs[i], std::move(series)});
        }
        if ((i + 1) % 25 == 0 || i + 1 == designs.size())
            std::cerr << "simulated " << (i + 1) << "/" << designs.size() << " designs\n";
    }

    const auto table = data::flatten_runs(runs);
    data::write_dataset_csv(table, a.n, a.out);

    nlohmann::json manifest;
    manifest["created"] = timestamp_utc();
    manifest["grid_size"] = a.n;
    manifest["designs"] = a.designs;
    manifest["seed"] = a.seed;
    manifest["subgrids"] = subgrids;
    manifest["time_stride"] = a.time_stride;
    manifest["rows"] = table.rows();
    manifest["dataset_fingerprint"] = hex_string(fnv1a64(io::read_file(a.out)));
    io::write_file_atomic(a.out + ".manifest.json", manifest.dump(2) + "\n");

    std::cout << "wrote " << a.out << " (" << table.rows() << " rows)\n";
    return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string data;
    std::string kind = "mlp";
    std::string out = "model.json";
    std::string history;
    std::size_t epochs = 2000;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    double train_fraction = 0.8;
    std::uint64_t seed = 1;
};

int run_train(const TrainArgs& a) {
    if (a.kind != "mlp" && a.kind != "cnn")
        throw ConfigError("--model must be 'mlp' or 'cnn'");
    if (!(a.train_fraction > 0.0 && a.train_fraction <= 1.0))
        throw ConfigError("--train-fraction must lie in (0, 1]");

    int grid_size = 0;
    const auto table = data::read_dataset_csv(a.data, &grid_size);
    auto [train_t, val_t] = data::split(table, a.train_fraction, a.seed);
    if (train_t.rows() == 0) throw ConfigError("training split is empty");

    const auto fscaler =
        data::Scaler::fit(train_t.features, train_t.feature_width(), train_t.feature_names);
    const auto tscaler =
        data::Scaler::fit(train_t.targets, train_t.target_width(), train_t.target_names);

    auto scale = [&](data::SampleTable& t) {
        fscaler.transform(t.features, t.feature_width());
        tscaler.transform(t.targets, t.target_width());
    };
    scale(train_t);
    scale(val_t);

    auto to_matrix = [](const std::vector<double>& v, std::size_t width) {
        nn::Matrix m(width == 0 ? 0 : v.size() / width, width);
        m.data = v;
        return m;
    };
    const nn::Matrix x_train = to_matrix(train_t.features, train_t.feature_width());
    const nn::Matrix y_train = to_matrix(train_t.targets, train_t.target_width());
    const nn::Matrix x_val = to_matrix(val_t.features, val_t.feature_width());
    const nn::Matrix y_val = to_matrix(val_t.targets, val_t.target_width());

    nn::Model model = a.kind == "mlp" ? nn::Model::mlp(x_train.cols, y_train.cols)
                                      : nn::Model::cnn(x_train.cols, y_train.cols);
    model.init_weights(a.seed);

    nn::TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch_size;
    cfg.seed = a.seed;
    cfg.adam.learning_rate = a.learning_rate;

    const auto result = nn::train(model, cfg, x_train, y_train, x_val, y_val);

    nn::Surrogate s;
    s.model = std::move(model);
    s.feature_scaler = fscaler;
    s.target_scaler = tscaler;
    s.metadata.kind = a.kind;
    s.metadata.seed = a.seed;
    s.metadata.epochs = a.epochs;
    s.metadata.batch_size = a.batch_size;
    s.metadata.learning_rate = a.learning_rate;
    s.metadata.final_train_mse = result.train_mse.empty() ? 0.0 : result.train_mse.back();
    s.metadata.final_val_mse = result.val_mse.empty() ? 0.0 : result.val_mse.back();
    s.save(a.out);

    if (!a.history.empty()) {
        std::ostringstream h;
        h << "epoch,train_mse,val_mse\n";
        for (std::size_t e = 0; e < result.train_mse.size(); ++e)
            h << e << ',' << format_double(result.train_mse[e]) << ','
              << format_double(result.val_mse[e]) << '\n';
        io::write_file_atomic(a.history, h.str());
    }

    nlohmann::json manifest;
    manifest["created"] = timestamp_utc();
    manifest["data"] = a.data;
    manifest["grid_size"] = grid_size;
    manifest["kind"] = a.kind;
    manifest["epochs"] = a.epochs;
    manifest["batch_size"] = a.batch_size;
    manifest["learning_rate"] = a.learning_rate;
    manifest["train_fraction"] = a.train_fraction;
    manifest["seed"] = a.seed;
    manifest["train_rows"] = train_t.rows();
    manifest["val_rows"] = val_t.rows();
    manifest["final_train_mse"] = s.metadata.final_train_mse;
    manifest["final_val_mse"] = s.metadata.final_val_mse;
    io::write_file_atomic(a.out + ".manifest.json", manifest.dump(2) + "\n");

    std::cout << "wrote " << a.out << " (train mse " << s.metadata.final_train_mse << ", val mse "
              << s.metadata.final_val_mse << ", scaled)\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string data;
    std::string model;
    std::string out;
    std::string parity_dir;
};

int run_evaluate(const EvaluateArgs& a) {
    const auto surrogate = nn::Surrogate::load(a.model);
    const auto table = data::read_dataset_csv(a.data);
    std::optional<std::filesystem::path> parity;
    if (!a.parity_dir.empty()) parity = a.parity_dir;
    const auto report = metrics::evaluate(surrogate, table, parity);
    const std::string text = report.to_json() + "\n";
    if (a.out.empty())
        std::cout << text;
    else
        io::write_file_atomic(a.out, text);

    for (const auto& c : report.channels) {
        std::cout << c.name << ": mse " << c.mse;
        if (c.r2)
            std::cout << ", r2 " << *c.r2;
        else
            std::cout << ", r2 n/a (constant channel)";
        std::cout << '\n';
    }
    std::cout << "mean r2 " << report.mean_r2 << " over " << report.n_samples << " rows\n";
    return 0;
}

// ---------------------------------------------------------------- grid

struct GridArgs {
    int n = 3;
    std::string out;
    bool count_stream = false;
    int spot_checks = 0;
    std::uint64_t seed = 1;
};

int run_grid(const GridArgs& a) {
    design::DesignGrid grid;
    grid.grid_size = a.n;
    grid.validate_or_throw();

    std::cout << "grid n=" << grid.grid_size << ": " << grid.design_count() << " designs, "
              << grid.row_count() << " rows, " << grid.feature_width() << " features\n";

    if (a.count_stream) {
        design::GridStream stream(grid);
        std::vector<double> row(grid.feature_width());
        std::uint64_t count = 0;
        while (stream.next(row)) ++count;
        std::cout << "streamed " << count << " rows\n";
        if (count != grid.row_count()) throw NumericError("stream count disagrees with row_count");
    }

    if (a.spot_checks > 0) {
        Rng rng(a.seed);
        std::vector<double> row(grid.feature_width()), via_stream(grid.feature_width());
        for (int i = 0; i < a.spot_checks; ++i) {
            const std::uint64_t idx = rng.below(grid.row_count());
            grid.row_at(idx, row);
            design::GridStream stream(grid, idx, idx + 1);
            if (!stream.next(via_stream) || row != via_stream)
                throw NumericError("row_at and stream disagree at index " + std::to_string(idx));
        }
        std::cout << a.spot_checks << " spot checks passed\n";
    }

    if (!a.out.empty()) {
        design::save_grid_manifest(grid, a.out);
        std::cout << "wrote " << a.out << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- rank

struct RankArgs {
    std::string model;
    int n = 3;
    std::string scenario = "shield";
    double w1 = 1.0;
    double w2 = 0.0;
    std::string out = "ranking.csv";
    std::string manifest;
    int top_k = 100;
    int t_begin = 0;
    int t_end = 201;
    int workers = 1;
    std::uint64_t shard_size = 4096;
};

int run_rank(const RankArgs& a) {
    const auto surrogate = nn::Surrogate::load(a.model);
    design::DesignGrid grid;
    grid.grid_size = a.n;

    search::Scenario scenario;
    scenario.kind = search::scenario_from_name(a.scenario);
    scenario.w1 = a.w1;
    scenario.w2 = a.w2;

    search::RankOptions options;
    options.top_k = a.top_k;
    options.t_begin_s = a.t_begin;
    options.t_end_s = a.t_end;
    options.workers = a.workers;
    options.shard_size = a.shard_size;

    const auto result = search::rank_grid(surrogate, grid, scenario, options);
    search::write_ranking_csv(result, a.n, a.out);
    const std::string manifest_path = a.manifest.empty() ? a.out + ".manifest.json" : a.manifest;
    search::write_ranking_manifest(result, scenario, grid, options, manifest_path);

    std::cout << "scored " << result.designs_scored << " designs; wrote " << result.top.size()
              << " rows to " << a.out << '\n';
    if (!result.top.empty()) {
        const auto& best = result.top.front();
        std::cout << "best: score " << best.score << ", obj1 " << best.objective1_max << ", obj2 "
                  << best.objective2_max << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
    std::string ranking;
    std::string manifest;
    std::string data;
    std::string config_path;
    std::string out = "validation.json";
    int pick = 1;
};

int run_validate(const ValidateArgs& a) {
    const std::string manifest_path =
        a.manifest.empty() ? a.ranking + ".manifest.json" : a.manifest;
    const auto loaded = search::load_ranking(a.ranking, manifest_path);
    const auto table = data::read_dataset_csv(a.data);
    auto cfg = load_config_or_default(a.config_path);

    const search::RankedCandidate* picked = nullptr;
    for (const auto& c : loaded.top)
        if (c.rank == a.pick) picked = &c;
    if (!picked) throw ConfigError("rank " + std::to_string(a.pick) + " not present in ranking");

    const auto record = search::validate_with_oracle(*picked, loaded.scenario, loaded.pool, table,
                                                     cfg, loaded.t_begin_s, loaded.t_end_s);
    io::write_file_atomic(a.out, record.to_json() + "\n");

    std::cout << "oracle objective1 " << record.oracle_objective1 << ", training best "
              << record.training_best_objective1 << ", improvement " << record.improvement_pct
              << "%\n";
    std::cout << "predicted score " << record.predicted_score << ", oracle score "
              << record.oracle_score << ", gap " << record.score_gap << '\n';
    std::cout << "wrote " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::string response;
    std::string history;
    std::string eval;
    std::string out = "report.svg";
};

int run_report(const ReportArgs& a) {
    std::vector<std::string> charts;
    if (!a.response.empty()) {
        const auto series = thermo::read_response_csv(a.response);
        for (int c = 0; c < thermo::kChannelCount; ++c) {
            svg::Series s;
            s.x = series.time_s;
            s.y = series.channels[static_cast<std::size_t>(c)];
            charts.push_back(svg::render_chart(thermo::kChannelNames[static_cast<std::size_t>(c)],
                                               {s}, "t [s]", "value", 380, 240));
        }
    }
    if (!a.history.empty()) {
        std::istringstream in(io::read_file(a.history));
        std::string line;
        if (!std::getline(in, line) || io::split_csv_line(line).size() != 3)
            throw ConfigError("unexpected history header in " + a.history);
        svg::Series train_s, val_s;
        train_s.label = "train";
        val_s.label = "val";
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = io::split_csv_line(line);
            if (f.size() != 3) throw ConfigError("malformed history row in " + a.history);
            const double e = std::stod(f[0]);
            train_s.x.push_back(e);
            val_s.x.push_back(e);
            train_s.y.push_back(std::log10(std::max(1e-300, std::stod(f[1]))));
            val_s.y.push_back(std::log10(std::max(1e-300, std::stod(f[2]))));
        }
        charts.push_back(
            svg::render_chart("training loss", {train_s, val_s}, "epoch", "log10 mse", 380, 240));
    }
    if (!a.eval.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(io::read_file(a.eval));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad evaluation report " + a.eval + ": " + e.what());
        }
        svg::Series bars;
        double idx = 0.0;
        for (const auto& c : j.at("channels")) {
            if (c.at("r2").is_null()) continue;
            bars.x.push_back(idx);
            bars.y.push_back(c.at("r2").get<double>());
            idx += 1.0;
        }
        if (!bars.x.empty())
            charts.push_back(
                svg::render_chart("per-channel r2", {bars}, "channel index", "r2", 380, 240));
    }
    if (charts.empty())
        throw ConfigError("report needs at least one of --response/--history/--eval");

    io::write_file_atomic(a.out, svg::render_panel(charts, 3, 380, 240));
    std::cout << "wrote " << a.out << " (" << charts.size() << " charts)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interlocking ceramic panel design pipeline"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "run the transient oracle for one design");
    c_sim->add_option("--design", sim.design_path, "design json file");
    c_sim->add_option("--n", sim.n, "grid size (with --angles/--lr)");
    c_sim->add_option("--angles", sim.angles, "comma separated class angles in degrees");
    c_sim->add_option("--lr", sim.lr, "centre tile length ratio");
    c_sim->add_option("--config", sim.config_path, "oracle config json");
    c_sim->add_option("--subgrid", sim.subgrid, "override lumped nodes per tile side");
    c_sim->add_option("--out", sim.out, "output response csv");

    GenDataArgs gen;
    auto* c_gen = app.add_subcommand("gen-data", "simulate random designs into a dataset");
    c_gen->add_option("--n", gen.n, "grid size");
    c_gen->add_option("--designs", gen.designs, "number of distinct designs");
    c_gen->add_option("--seed", gen.seed, "sampling seed");
    c_gen->add_option("--config", gen.config_path, "oracle config json");
    c_gen->add_option("--subgrids", gen.subgrids, "comma separated subgrid list, one run each");
    c_gen->add_option("--time-stride", gen.time_stride, "keep every k-th sample");
    c_gen->add_option("--out", gen.out, "output dataset csv");

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("train", "fit a surrogate on a dataset");
    c_tr->add_option("--data", tr.data, "dataset csv")->required();
    c_tr->add_option("--model", tr.kind, "mlp or cnn");
    c_tr->add_option("--epochs", tr.epochs, "training epochs");
    c_tr->add_option("--batch-size", tr.batch_size, "minibatch rows, 0 = full batch");
    c_tr->add_option("--learning-rate", tr.learning_rate, "adam learning rate");
    c_tr->add_option("--train-fraction", tr.train_fraction, "row fraction for training");
    c_tr->add_option("--seed", tr.seed, "split/init/shuffle seed");
    c_tr->add_option("--out", tr.out, "output model json");
    c_tr->add_option("--history", tr.history, "optional per-epoch loss csv");

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "score a surrogate against a dataset");
    c_ev->add_option("--data", ev.data, "dataset csv")->required();
    c_ev->add_option("--model", ev.model, "model json")->required();
    c_ev->add_option("--out", ev.out, "report json (stdout when omitted)");
    c_ev->add_option("--parity-dir", ev.parity_dir, "write per-channel parity csvs here");

    GridArgs gr;
    auto* c_gr = app.add_subcommand("grid", "inspect the exhaustive design grid");
    c_gr->add_option("--n", gr.n, "grid size");
    c_gr->add_option("--out", gr.out, "write grid manifest json");
    c_gr->add_flag("--count-stream", gr.count_stream, "stream every row and count");
    c_gr->add_option("--spot-checks", gr.spot_checks, "random row_at/stream cross checks");
    c_gr->add_option("--seed", gr.seed, "spot check seed");

    RankArgs rk;
    auto* c_rk = app.add_subcommand("rank", "score the whole grid and keep the best designs");
    c_rk->add_option("--model", rk.model, "model json")->required();
    c_rk->add_option("--n", rk.n, "grid size");
    c_rk->add_option("--scenario", rk.scenario, "shield or sink");
    c_rk->add_option("--w1", rk.w1, "objective 1 weight");
    c_rk->add_option("--w2", rk.w2, "objective 2 weight");
    c_rk->add_option("--top-k", rk.top_k, "rows to keep");
    c_rk->add_option("--t-begin", rk.t_begin, "scoring window start, seconds");
    c_rk->add_option("--t-end", rk.t_end, "scoring window end, exclusive");
    c_rk->add_option("--workers", rk.workers, "scoring threads");
    c_rk->add_option("--shard-size", rk.shard_size, "designs per work unit");
    c_rk->add_option("--out", rk.out, "output ranking csv");
    c_rk->add_option("--manifest", rk.manifest, "manifest path (default <out>.manifest.json)");

    ValidateArgs va;
    auto* c_va = app.add_subcommand("validate", "re-simulate a ranked design with the oracle");
    c_va->add_option("--ranking", va.ranking, "ranking csv")->required();
    c_va->add_option("--manifest", va.manifest, "ranking manifest (default <ranking>.manifest.json)");
    c_va->add_option("--data", va.data, "training dataset csv for the baseline")->required();
    c_va->add_option("--config", va.config_path, "oracle config json");
    c_va->add_option("--pick", va.pick, "rank to validate");
    c_va->add_option("--out", va.out, "output record json");

    ReportArgs rp;
    auto* c_rp = app.add_subcommand("report", "render svg charts from pipeline artifacts");
    c_rp->add_option("--response", rp.response, "response csv to plot");
    c_rp->add_option("--history", rp.history, "training history csv to plot");
    c_rp->add_option("--eval", rp.eval, "evaluation report json to plot");
    c_rp->add_option("--out", rp.out, "output svg");

    try {
        app.parse(argc, argv);
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_gen->parsed()) return run_gen_data(gen);
        if (c_tr->parsed()) return run_train(tr);
        if (c_ev->parsed()) return run_evaluate(ev);
        if (c_gr->parsed()) return run_grid(gr);
        if (c_rk->parsed()) return run_rank(rk);
        if (c_va->parsed()) return run_validate(va);
        if (c_rp->parsed()) return run_report(rp);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 3;
    }
}
