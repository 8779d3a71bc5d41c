#include "interlock/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "interlock/common.hpp"
#include "interlock/io.hpp"
#include "interlock/rng.hpp"

namespace interlock::nn {

LayerSpec LayerSpec::make_dense(std::size_t in, std::size_t out) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.in = in;
    s.out = out;
    return s;
}

LayerSpec LayerSpec::make_relu() {
    LayerSpec s;
    s.kind = LayerKind::relu;
    return s;
}

LayerSpec LayerSpec::make_conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel) {
    LayerSpec s;
    s.kind = LayerKind::conv1d;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.kernel = kernel;
    return s;
}

LayerSpec LayerSpec::make_maxpool1d(std::size_t pool) {
    LayerSpec s;
    s.kind = LayerKind::maxpool1d;
    s.pool = pool;
    return s;
}

LayerSpec LayerSpec::make_flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
}

std::string Shape::str() const {
    std::ostringstream out;
    if (flat)
        out << size();
    else
        out << '(' << length << ',' << channels << ')';
    return out.str();
}

namespace {

// Sequence activations are stored position-major: sample row = concatenation
// of per-position channel blocks, index = position * channels + channel.
Shape input_shape_for(const std::vector<LayerSpec>& layers, std::size_t input_len) {
    Shape s;
    s.length = input_len;
    s.channels = 1;
    s.flat = !(!layers.empty() && (layers.front().kind == LayerKind::conv1d ||
                                   layers.front().kind == LayerKind::maxpool1d));
    return s;
}

Shape shape_after(const LayerSpec& layer, const Shape& in) {
    switch (layer.kind) {
        case LayerKind::dense:
            if (!in.flat || in.size() != layer.in)
                throw ValidationError("dense layer expects a flat input of width " +
                                      std::to_string(layer.in) + ", got " + in.str());
            return {layer.out, 1, true};
        case LayerKind::relu:
            return in;
        case LayerKind::conv1d: {
            if (in.flat || in.channels != layer.in_channels || in.length < layer.kernel)
                throw ValidationError("conv1d layer does not fit input shape " + in.str());
            return {in.length - layer.kernel + 1, layer.out_channels, false};
        }
        case LayerKind::maxpool1d: {
            if (in.flat || layer.pool == 0 || in.length < layer.pool)
                throw ValidationError("maxpool1d layer does not fit input shape " + in.str());
            return {in.length / layer.pool, in.channels, false};
        }
        case LayerKind::flatten:
            if (in.flat) throw ValidationError("flatten applied to an already flat shape");
            return {in.size(), 1, true};
    }
    throw ValidationError("unknown layer kind");
}

std::size_t weight_count(const LayerSpec& layer) {
    switch (layer.kind) {
        case LayerKind::dense:
            return layer.in * layer.out;
        case LayerKind::conv1d:
            return layer.in_channels * layer.kernel * layer.out_channels;
        default:
            return 0;
    }
}

std::size_t bias_count(const LayerSpec& layer) {
    switch (layer.kind) {
        case LayerKind::dense:
            return layer.out;
        case LayerKind::conv1d:
            return layer.out_channels;
        default:
            return 0;
    }
}

void add_bias(Matrix& m, const double* bias) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += bias[c];
    }
}

// Weight matrix view copied out of the flat parameter vector.
Matrix weights_as_matrix(const std::vector<double>& params, std::size_t offset, std::size_t rows,
                         std::size_t cols) {
    Matrix w(rows, cols);
    std::memcpy(w.data.data(), params.data() + offset, rows * cols * sizeof(double));
    return w;
}

// Transposed copy: forward passes multiply activations by W^T, and feeding
// gemm the pre-transposed matrix keeps its inner loop contiguous (a plain
// accumulation, not a dot-product reduction), which vectorises without
// reassociation flags.
Matrix weights_transposed(const std::vector<double>& params, std::size_t offset, std::size_t rows,
                          std::size_t cols) {
    Matrix w(cols, rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) w.at(c, r) = params[offset + r * cols + c];
    return w;
}

struct ForwardScratch {
    std::vector<Matrix> acts;               // per layer boundary
    std::vector<Matrix> cols;               // im2col buffers, conv layers only
    std::vector<std::vector<std::size_t>> argmax;  // pool layers only
};

}  // namespace

Model::Model(std::vector<LayerSpec> layers, std::size_t input_len)
    : layers_(std::move(layers)), input_len_(input_len) {
    if (input_len_ == 0) throw ValidationError("model input width must be positive");
    output_shapes();  // validates the chain
    build_offsets();
}

Model Model::mlp(std::size_t input_len, std::size_t output_len) {
    const std::size_t widths[] = {256, 256, 256, 128, 64, 32, 16, 8};
    std::vector<LayerSpec> layers;
    std::size_t prev = input_len;
    for (std::size_t w : widths) {
        layers.push_back(LayerSpec::make_dense(prev, w));
        layers.push_back(LayerSpec::make_relu());
        prev = w;
    }
    layers.push_back(LayerSpec::make_dense(prev, output_len));
    return Model(std::move(layers), input_len);
}

Model Model::cnn(std::size_t input_len, std::size_t output_len) {
    std::vector<LayerSpec> layers;
    layers.push_back(LayerSpec::make_conv1d(1, 256, 3));
    layers.push_back(LayerSpec::make_relu());
    layers.push_back(LayerSpec::make_conv1d(256, 32, 3));
    layers.push_back(LayerSpec::make_relu());
    layers.push_back(LayerSpec::make_maxpool1d(2));
    layers.push_back(LayerSpec::make_flatten());
    Shape s = input_shape_for(layers, input_len);
    for (const auto& l : layers) s = shape_after(l, s);
    layers.push_back(LayerSpec::make_dense(s.size(), 80));
    layers.push_back(LayerSpec::make_relu());
    layers.push_back(LayerSpec::make_dense(80, output_len));
    return Model(std::move(layers), input_len);
}

std::vector<Shape> Model::output_shapes() const {
    std::vector<Shape> shapes;
    Shape s = input_shape_for(layers_, input_len_);
    shapes.push_back(s);
    for (const auto& l : layers_) {
        s = shape_after(l, s);
        shapes.push_back(s);
    }
    return shapes;
}

std::size_t Model::output_len() const { return output_shapes().back().size(); }

void Model::build_offsets() {
    param_offsets_.clear();
    std::size_t total = 0;
    for (const auto& l : layers_) {
        param_offsets_.push_back(total);
        total += weight_count(l) + bias_count(l);
    }
    params_.assign(total, 0.0);
}

void Model::init_weights(std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        const std::size_t wc = weight_count(l);
        if (wc == 0) continue;
        const std::size_t fan_in = l.kind == LayerKind::dense ? l.in : l.in_channels * l.kernel;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        double* w = params_.data() + param_offsets_[i];
        for (std::size_t j = 0; j < wc; ++j) w[j] = (2.0 * rng.uniform() - 1.0) * limit;
        std::memset(w + wc, 0, bias_count(l) * sizeof(double));
    }
}

namespace {

// Runs the stack forward, keeping whatever backward needs when `training`.
Matrix run_forward(const std::vector<LayerSpec>& layers,
                   const std::vector<std::size_t>& offsets, const std::vector<double>& params,
                   const std::vector<Shape>& shapes, const Matrix& x, bool training,
                   ForwardScratch* scratch) {
    Matrix cur = x;
    if (training) {
        scratch->acts.clear();
        scratch->cols.assign(layers.size(), Matrix());
        scratch->argmax.assign(layers.size(), {});
        scratch->acts.push_back(cur);
    }
    const std::size_t batch = x.rows;

    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& l = layers[li];
        const Shape& sin = shapes[li];
        const Shape& sout = shapes[li + 1];
        Matrix next;
        switch (l.kind) {
            case LayerKind::dense: {
                Matrix wt = weights_transposed(params, offsets[li], l.out, l.in);
                next = Matrix(batch, l.out);
                gemm(cur, wt, next);
                add_bias(next, params.data() + offsets[li] + l.in * l.out);
                break;
            }
            case LayerKind::relu: {
                next = cur;
                for (double& v : next.data) v = v > 0.0 ? v : 0.0;
                break;
            }
            case LayerKind::conv1d: {
                const std::size_t in_ch = l.in_channels, out_ch = l.out_channels, k = l.kernel;
                const std::size_t out_len = sout.length;
                const std::size_t patch = k * in_ch;
                Matrix col(batch * out_len, patch);
                for (std::size_t b = 0; b < batch; ++b) {
                    const double* row = cur.row(b);
                    for (std::size_t p = 0; p < out_len; ++p)
                        std::memcpy(col.row(b * out_len + p), row + p * in_ch,
                                    patch * sizeof(double));
                }
                Matrix wt = weights_transposed(params, offsets[li], out_ch, patch);
                Matrix out(batch * out_len, out_ch);
                gemm(col, wt, out);
                const double* bias = params.data() + offsets[li] + out_ch * patch;
                add_bias(out, bias);
                next = Matrix(batch, out_len * out_ch);
                next.data = std::move(out.data);
                if (training) scratch->cols[li] = std::move(col);
                break;
            }
            case LayerKind::maxpool1d: {
                const std::size_t ch = sin.channels, pool = l.pool, out_len = sout.length;
                next = Matrix(batch, out_len * ch);
                std::vector<std::size_t> arg;
                if (training) arg.resize(batch * out_len * ch);
                for (std::size_t b = 0; b < batch; ++b) {
                    const double* in_row = cur.row(b);
                    double* out_row = next.row(b);
                    for (std::size_t p = 0; p < out_len; ++p) {
                        for (std::size_t c = 0; c < ch; ++c) {
                            std::size_t best = (p * pool) * ch + c;
                            double best_v = in_row[best];
                            for (std::size_t q = 1; q < pool; ++q) {
                                const std::size_t idx = (p * pool + q) * ch + c;
                                if (in_row[idx] > best_v) {
                                    best_v = in_row[idx];
                                    best = idx;
                                }
                            }
                            out_row[p * ch + c] = best_v;
                            if (training) arg[(b * out_len + p) * ch + c] = best;
                        }
                    }
                }
                if (training) scratch->argmax[li] = std::move(arg);
                break;
            }
            case LayerKind::flatten: {
                next = cur;  // same storage layout
                next.cols = sout.size();
                next.rows = batch;
                break;
            }
        }
        cur = std::move(next);
        if (training) scratch->acts.push_back(cur);
    }
    return cur;
}

}  // namespace

Matrix Model::forward(const Matrix& x) const {
    if (x.cols != input_len_) throw ValidationError("forward input width mismatch");
    return run_forward(layers_, param_offsets_, params_, output_shapes(), x, false, nullptr);
}

double Model::loss_and_gradients(const Matrix& x, const Matrix& y,
                                 std::vector<double>& grad) const {
    if (x.cols != input_len_) throw ValidationError("input width mismatch");
    if (y.rows != x.rows || y.cols != output_len())
        throw ValidationError("target shape mismatch");
    if (x.rows == 0) throw ValidationError("empty batch");

    const auto shapes = output_shapes();
    ForwardScratch scratch;
    Matrix pred = run_forward(layers_, param_offsets_, params_, shapes, x, true, &scratch);

    const std::size_t batch = x.rows;
    const double denom = static_cast<double>(batch) * static_cast<double>(y.cols);
    double loss = 0.0;
    Matrix delta(pred.rows, pred.cols);
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - y.data[i];
        loss += d * d;
        delta.data[i] = 2.0 * d / denom;
    }
    loss /= denom;

    grad.assign(params_.size(), 0.0);
    for (std::size_t ii = layers_.size(); ii-- > 0;) {
        const auto& l = layers_[ii];
        const Shape& sin = shapes[ii];
        const Shape& sout = shapes[ii + 1];
        const Matrix& a_in = scratch.acts[ii];
        Matrix prev_delta;
        switch (l.kind) {
            case LayerKind::dense: {
                Matrix dw(l.out, l.in);
                gemm_atb(delta, a_in, dw);
                std::memcpy(grad.data() + param_offsets_[ii], dw.data.data(),
                            dw.size() * sizeof(double));
                double* db = grad.data() + param_offsets_[ii] + l.in * l.out;
                for (std::size_t r = 0; r < delta.rows; ++r) {
                    const double* row = delta.row(r);
                    for (std::size_t c = 0; c < l.out; ++c) db[c] += row[c];
                }
                Matrix w = weights_as_matrix(params_, param_offsets_[ii], l.out, l.in);
                prev_delta = Matrix(batch, l.in);
                gemm(delta, w, prev_delta);
                break;
            }
            case LayerKind::relu: {
                const Matrix& a_out = scratch.acts[ii + 1];
                prev_delta = delta;
                for (std::size_t i = 0; i < prev_delta.data.size(); ++i)
                    if (!(a_out.data[i] > 0.0)) prev_delta.data[i] = 0.0;
                break;
            }
            case LayerKind::conv1d: {
                const std::size_t in_ch = l.in_channels, out_ch = l.out_channels, k = l.kernel;
                const std::size_t out_len = sout.length, patch = k * in_ch;
                Matrix dout(batch * out_len, out_ch);
                dout.data = delta.data;  // same layout, reshaped
                const Matrix& col = scratch.cols[ii];

                Matrix dw(out_ch, patch);
                gemm_atb(dout, col, dw);
                std::memcpy(grad.data() + param_offsets_[ii], dw.data.data(),
                            dw.size() * sizeof(double));
                double* db = grad.data() + param_offsets_[ii] + out_ch * patch;
                for (std::size_t r = 0; r < dout.rows; ++r) {
                    const double* row = dout.row(r);
                    for (std::size_t c = 0; c < out_ch; ++c) db[c] += row[c];
                }

                Matrix w = weights_as_matrix(params_, param_offsets_[ii], out_ch, patch);
                Matrix dcol(batch * out_len, patch);
                gemm(dout, w, dcol);
                prev_delta = Matrix(batch, sin.size());
                for (std::size_t b = 0; b < batch; ++b) {
                    double* drow = prev_delta.row(b);
                    for (std::size_t p = 0; p < out_len; ++p) {
                        const double* crow = dcol.row(b * out_len + p);
                        for (std::size_t j = 0; j < patch; ++j) drow[p * in_ch + j] += crow[j];
                    }
                }
                break;
            }
            case LayerKind::maxpool1d: {
                const std::size_t ch = sin.channels, out_len = sout.length;
                prev_delta = Matrix(batch, sin.size());
                const auto& arg = scratch.argmax[ii];
                for (std::size_t b = 0; b < batch; ++b) {
                    double* drow = prev_delta.row(b);
                    const double* orow = delta.row(b);
                    for (std::size_t j = 0; j < out_len * ch; ++j)
                        drow[arg[b * out_len * ch + j]] += orow[j];
                }
                break;
            }
            case LayerKind::flatten: {
                prev_delta = delta;
                prev_delta.cols = sin.size();
                break;
            }
        }
        delta = std::move(prev_delta);
    }
    return loss;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& state,
               const AdamConfig& config) {
    if (grad.size() != params.size()) throw ValidationError("gradient size mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.step = 0;
    }
    if (state.m.size() != params.size()) throw ValidationError("optimizer state size mismatch");
    ++state.step;
    const double b1 = config.beta1, b2 = config.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
}

namespace {

// Lexicographic row order over (features, targets). Training first reorders
// rows canonically so the outcome is independent of input row order.
std::vector<std::size_t> canonical_order(const Matrix& x, const Matrix& y) {
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double* xa = x.row(a);
        const double* xb = x.row(b);
        for (std::size_t c = 0; c < x.cols; ++c) {
            if (xa[c] != xb[c]) return xa[c] < xb[c];
        }
        const double* ya = y.row(a);
        const double* yb = y.row(b);
        for (std::size_t c = 0; c < y.cols; ++c) {
            if (ya[c] != yb[c]) return ya[c] < yb[c];
        }
        return false;
    });
    return order;
}

Matrix reorder(const Matrix& m, const std::vector<std::size_t>& order) {
    Matrix out(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r)
        std::memcpy(out.row(r), m.row(order[r]), m.cols * sizeof(double));
    return out;
}

double eval_mse(const Model& model, const Matrix& x, const Matrix& y) {
    if (x.rows == 0) return 0.0;
    const Matrix pred = model.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - y.data[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.data.size());
}

}  // namespace

TrainResult train(Model& model, const TrainConfig& config, const Matrix& x_train,
                  const Matrix& y_train, const Matrix& x_val, const Matrix& y_val) {
    if (x_train.rows == 0) throw ValidationError("empty training set");
    if (x_train.rows != y_train.rows || x_val.rows != y_val.rows)
        throw ValidationError("feature/target row mismatch");

    const auto order = canonical_order(x_train, y_train);
    const Matrix x = reorder(x_train, order);
    const Matrix y = reorder(y_train, order);

    const std::size_t n = x.rows;
    const std::size_t batch = config.batch_size == 0 ? n : std::min(config.batch_size, n);

    Rng rng(config.seed);
    AdamState adam;
    std::vector<double> grad;
    std::vector<std::size_t> index(n);
    std::iota(index.begin(), index.end(), std::size_t{0});

    TrainResult result;
    result.train_mse.reserve(config.epochs);
    result.val_mse.reserve(config.epochs);

    Matrix bx(batch, x.cols), by(batch, y.cols);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(index);
        double sq_sum = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            if (bx.rows != count) {
                bx = Matrix(count, x.cols);
                by = Matrix(count, y.cols);
            }
            for (std::size_t r = 0; r < count; ++r) {
                std::memcpy(bx.row(r), x.row(index[start + r]), x.cols * sizeof(double));
                std::memcpy(by.row(r), y.row(index[start + r]), y.cols * sizeof(double));
            }
            const double mse = model.loss_and_gradients(bx, by, grad);
            if (!std::isfinite(mse))
                throw NumericError("training loss became non-finite at epoch " +
                                   std::to_string(epoch));
            adam_step(model.parameters(), grad, adam, config.adam);
            sq_sum += mse * static_cast<double>(count) * static_cast<double>(y.cols);
        }
        result.train_mse.push_back(sq_sum / (static_cast<double>(n) * static_cast<double>(y.cols)));
        result.val_mse.push_back(eval_mse(model, x_val, y_val));
    }
    return result;
}

// Serialization helper with access to Model internals.
struct ModelCodec {
    static nlohmann::json to_json(const Model& model) {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : model.layers_) {
            nlohmann::json j;
            switch (l.kind) {
                case LayerKind::dense:
                    j = {{"kind", "dense"}, {"in", l.in}, {"out", l.out}};
                    break;
                case LayerKind::relu:
                    j = {{"kind", "relu"}};
                    break;
                case LayerKind::conv1d:
                    j = {{"kind", "conv1d"},
                         {"in_channels", l.in_channels},
                         {"out_channels", l.out_channels},
                         {"kernel", l.kernel}};
                    break;
                case LayerKind::maxpool1d:
                    j = {{"kind", "maxpool1d"}, {"pool", l.pool}};
                    break;
                case LayerKind::flatten:
                    j = {{"kind", "flatten"}};
                    break;
            }
            layers.push_back(j);
        }
        return {{"input_len", model.input_len_}, {"layers", layers}, {"params", model.params_}};
    }

    static Model from_json(const nlohmann::json& j) {
        std::vector<LayerSpec> layers;
        for (const auto& lj : j.at("layers")) {
            const std::string kind = lj.at("kind").get<std::string>();
            if (kind == "dense") {
                layers.push_back(LayerSpec::make_dense(lj.at("in").get<std::size_t>(),
                                                       lj.at("out").get<std::size_t>()));
            } else if (kind == "relu") {
                layers.push_back(LayerSpec::make_relu());
            } else if (kind == "conv1d") {
                layers.push_back(LayerSpec::make_conv1d(lj.at("in_channels").get<std::size_t>(),
                                                        lj.at("out_channels").get<std::size_t>(),
                                                        lj.at("kernel").get<std::size_t>()));
            } else if (kind == "maxpool1d") {
                layers.push_back(LayerSpec::make_maxpool1d(lj.at("pool").get<std::size_t>()));
            } else if (kind == "flatten") {
                layers.push_back(LayerSpec::make_flatten());
            } else {
                throw ConfigError("unknown layer kind: " + kind);
            }
        }
        Model model(std::move(layers), j.at("input_len").get<std::size_t>());
        auto params = j.at("params").get<std::vector<double>>();
        if (params.size() != model.params_.size())
            throw ConfigError("parameter count does not match the architecture");
        model.params_ = std::move(params);
        return model;
    }
};

void Surrogate::predict(const double* features, std::size_t nrows, double* out) const {
    const std::size_t fw = model.input_len();
    const std::size_t tw = model.output_len();
    if (feature_scaler.width() != fw || target_scaler.width() != tw)
        throw ValidationError("surrogate scaler widths do not match the model");

    constexpr std::size_t kChunk = 4096;
    for (std::size_t start = 0; start < nrows; start += kChunk) {
        const std::size_t count = std::min(kChunk, nrows - start);
        Matrix x(count, fw);
        for (std::size_t r = 0; r < count; ++r)
            feature_scaler.transform_row(features + (start + r) * fw, x.row(r));
        const Matrix pred = model.forward(x);
        for (std::size_t r = 0; r < count; ++r)
            target_scaler.inverse_row(pred.row(r), out + (start + r) * tw);
    }
}

void Surrogate::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["metadata"] = {
        {"kind", metadata.kind},
        {"seed", metadata.seed},
        {"epochs", metadata.epochs},
        {"batch_size", metadata.batch_size},
        {"learning_rate", metadata.learning_rate},
        {"final_train_mse", metadata.final_train_mse},
        {"final_val_mse", metadata.final_val_mse},
    };
    j["model"] = ModelCodec::to_json(model);
    j["feature_scaler"] = nlohmann::json::parse(feature_scaler.to_json());
    j["target_scaler"] = nlohmann::json::parse(target_scaler.to_json());
    io::write_file_atomic(path, j.dump() + "\n");
}

Surrogate Surrogate::load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad surrogate file " + path.string() + ": " + e.what());
    }
    Surrogate s;
    try {
        s.model = ModelCodec::from_json(j.at("model"));
        s.feature_scaler = data::Scaler::from_json(j.at("feature_scaler").dump());
        s.target_scaler = data::Scaler::from_json(j.at("target_scaler").dump());
        const auto& m = j.at("metadata");
        s.metadata.kind = m.at("kind").get<std::string>();
        s.metadata.seed = m.at("seed").get<std::uint64_t>();
        s.metadata.epochs = m.at("epochs").get<std::size_t>();
        s.metadata.batch_size = m.at("batch_size").get<std::size_t>();
        s.metadata.learning_rate = m.at("learning_rate").get<double>();
        s.metadata.final_train_mse = m.at("final_train_mse").get<double>();
        s.metadata.final_val_mse = m.at("final_val_mse").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad surrogate file " + path.string() + ": " + e.what());
    }
    return s;
}

}  // namespace interlock::nn
