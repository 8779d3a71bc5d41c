#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "interlock/dataset.hpp"
#include "interlock/linalg.hpp"

namespace interlock::nn {

enum class LayerKind { dense, relu, conv1d, maxpool1d, flatten };

// One layer of a sequential stack. Dense uses in/out; conv1d uses
// in_channels/out_channels/kernel (valid padding, stride 1); maxpool1d uses
// pool (non-overlapping, odd tail dropped).
struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    std::size_t in = 0, out = 0;
    std::size_t in_channels = 0, out_channels = 0, kernel = 0;
    std::size_t pool = 0;

    static LayerSpec make_dense(std::size_t in, std::size_t out);
    static LayerSpec make_relu();
    static LayerSpec make_conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel);
    static LayerSpec make_maxpool1d(std::size_t pool);
    static LayerSpec make_flatten();
};

// Activation shape between layers: a flat vector or a (length, channels) sequence.
struct Shape {
    std::size_t length = 0;
    std::size_t channels = 1;
    bool flat = true;

    std::size_t size() const { return length * channels; }
    std::string str() const;
    bool operator==(const Shape&) const = default;
};

// Sequential network with one flat parameter vector (weights then bias per
// parametric layer, row-major). Forward/backward are plain double math with a
// fixed evaluation order, so results are bit-reproducible.
class Model {
  public:
    Model() = default;
    Model(std::vector<LayerSpec> layers, std::size_t input_len);

    // Regression stack: dense 256/256/256/128/64/32/16/8 with ReLU between,
    // linear 9-wide head.
    static Model mlp(std::size_t input_len, std::size_t output_len = 9);
    // conv1d(256,k3) ReLU, conv1d(32,k3) ReLU, maxpool(2), flatten,
    // dense 80 ReLU, linear 9-wide head. Input is a 1-channel sequence.
    static Model cnn(std::size_t input_len, std::size_t output_len = 9);

    // He-uniform fan-in init, biases zero; consumed in layer order.
    void init_weights(std::uint64_t seed);

    std::size_t input_len() const { return input_len_; }
    std::size_t output_len() const;
    const std::vector<LayerSpec>& layers() const { return layers_; }

    // Shape after each layer, starting from the input shape. Used to pin the
    // architecture in tests.
    std::vector<Shape> output_shapes() const;

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    Matrix forward(const Matrix& x) const;

    // Mean-squared-error over all outputs of the batch, gradients into
    // `grad` (same layout as parameters).
    double loss_and_gradients(const Matrix& x, const Matrix& y, std::vector<double>& grad) const;

  private:
    friend struct ModelCodec;
    std::vector<LayerSpec> layers_;
    std::size_t input_len_ = 0;
    std::vector<double> params_;
    std::vector<std::size_t> param_offsets_;  // per layer: weight offset (bias follows)

    void build_offsets();
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m, v;
    std::int64_t step = 0;
};

void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& state,
               const AdamConfig& config);

struct TrainConfig {
    std::size_t epochs = 20000;
    AdamConfig adam;
    std::size_t batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 1;
};

struct TrainResult {
    std::vector<double> train_mse;  // per epoch, scaled targets
    std::vector<double> val_mse;
};

// Trains in place on scaled data. Rows are first brought into a canonical
// order (lexicographic over features then targets), so the result depends
// only on the row multiset and the seed, not on input row order. Throws
// NumericError if the loss stops being finite.
TrainResult train(Model& model, const TrainConfig& config, const Matrix& x_train,
                  const Matrix& y_train, const Matrix& x_val, const Matrix& y_val);

// A trained model bundled with the scalers that close the physical-unit loop.
struct Surrogate {
    Model model;
    data::Scaler feature_scaler;
    data::Scaler target_scaler;

    struct Metadata {
        std::string kind;  // "mlp" or "cnn"
        std::uint64_t seed = 0;
        std::size_t epochs = 0;
        std::size_t batch_size = 0;
        double learning_rate = 0.0;
        double final_train_mse = 0.0;
        double final_val_mse = 0.0;
    } metadata;

    // Physical units in, physical units out; any chunk size gives identical
    // results, so callers can stream arbitrarily large row sets.
    void predict(const double* features, std::size_t nrows, double* out) const;

    void save(const std::filesystem::path& path) const;
    static Surrogate load(const std::filesystem::path& path);
};

}  // namespace interlock::nn
