#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "interlock/dataset.hpp"
#include "interlock/neuralnet.hpp"

namespace interlock::metrics {

// R^2 = 1 - SS_res / SS_tot. Throws ValidationError on length mismatch,
// fewer than two points, or zero total variance.
double r_squared(std::span<const double> truth, std::span<const double> prediction);

double mean_squared_error(std::span<const double> truth, std::span<const double> prediction);

struct ChannelScore {
    std::string name;
    std::optional<double> r2;  // empty when the channel is constant in truth
    double mse = 0.0;
};

struct EvalReport {
    std::vector<ChannelScore> channels;
    double mean_r2 = 0.0;  // over channels with defined R^2
    double mean_mse = 0.0;
    std::size_t n_samples = 0;

    std::string to_json() const;
};

// Runs the surrogate over the table and scores every channel in physical
// units. When parity_dir is set, writes one truth,prediction CSV per channel.
EvalReport evaluate(const nn::Surrogate& surrogate, const data::SampleTable& table,
                    const std::optional<std::filesystem::path>& parity_dir = std::nullopt);

}  // namespace interlock::metrics
