#include "interlock/metrics.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "interlock/common.hpp"
#include "interlock/io.hpp"

namespace interlock::metrics {

double r_squared(std::span<const double> truth, std::span<const double> prediction) {
    if (truth.size() != prediction.size())
        throw ValidationError("r_squared needs equally long series");
    if (truth.size() < 2) throw ValidationError("r_squared needs at least two points");
    double mean = 0.0;
    for (double v : truth) mean += v;
    mean /= static_cast<double>(truth.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
        ss_res += (truth[i] - prediction[i]) * (truth[i] - prediction[i]);
    }
    if (ss_tot == 0.0) throw ValidationError("r_squared undefined for a constant series");
    return 1.0 - ss_res / ss_tot;
}

double mean_squared_error(std::span<const double> truth, std::span<const double> prediction) {
    if (truth.size() != prediction.size())
        throw ValidationError("mean_squared_error needs equally long series");
    if (truth.empty()) throw ValidationError("mean_squared_error of an empty series");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        s += (truth[i] - prediction[i]) * (truth[i] - prediction[i]);
    return s / static_cast<double>(truth.size());
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["n_samples"] = n_samples;
    j["mean_r2"] = mean_r2;
    j["mean_mse"] = mean_mse;
    nlohmann::json ch = nlohmann::json::array();
    for (const auto& c : channels) {
        nlohmann::json e;
        e["name"] = c.name;
        if (c.r2)
            e["r2"] = *c.r2;
        else
            e["r2"] = nullptr;
        e["mse"] = c.mse;
        ch.push_back(e);
    }
    j["channels"] = ch;
    return j.dump(2);
}

EvalReport evaluate(const nn::Surrogate& surrogate, const data::SampleTable& table,
                    const std::optional<std::filesystem::path>& parity_dir) {
    const std::size_t rows = table.rows();
    if (rows == 0) throw ValidationError("cannot evaluate on an empty table");
    const std::size_t tw = table.target_width();
    if (tw != surrogate.model.output_len())
        throw ValidationError("table target width does not match the model");

    std::vector<double> pred(rows * tw);
    surrogate.predict(table.features.data(), rows, pred.data());

    EvalReport report;
    report.n_samples = rows;
    double r2_sum = 0.0;
    std::size_t r2_count = 0;

    std::vector<double> truth_col(rows), pred_col(rows);
    for (std::size_t c = 0; c < tw; ++c) {
        for (std::size_t r = 0; r < rows; ++r) {
            truth_col[r] = table.target_row(r)[c];
            pred_col[r] = pred[r * tw + c];
        }
        ChannelScore score;
        score.name = table.target_names[c];
        score.mse = mean_squared_error(truth_col, pred_col);
        const double first = truth_col.front();
        bool constant = true;
        for (double v : truth_col)
            if (v != first) {
                constant = false;
                break;
            }
        if (!constant && rows >= 2) {
            score.r2 = r_squared(truth_col, pred_col);
            r2_sum += *score.r2;
            ++r2_count;
        }
        report.mean_mse += score.mse;

        if (parity_dir) {
            std::ostringstream out;
            out << "truth,prediction\n";
            for (std::size_t r = 0; r < rows; ++r)
                out << format_double(truth_col[r]) << ',' << format_double(pred_col[r]) << '\n';
            io::write_file_atomic(*parity_dir / ("parity_" + score.name + ".csv"), out.str());
        }
        report.channels.push_back(std::move(score));
    }
    report.mean_mse /= static_cast<double>(tw);
    report.mean_r2 = r2_count > 0 ? r2_sum / static_cast<double>(r2_count) : 0.0;
    return report;
}

}  // namespace interlock::metrics
