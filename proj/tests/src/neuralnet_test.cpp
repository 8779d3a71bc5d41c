#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "interlock/common.hpp"
#include "interlock/dataset.hpp"
#include "interlock/io.hpp"
#include "interlock/linalg.hpp"
#include "interlock/neuralnet.hpp"
#include "interlock/rng.hpp"
#include "test_util.hpp"

using namespace interlock;
using namespace interlock::nn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

Matrix naive_mm(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < a.cols; ++p) s += a.at(i, p) * b.at(p, j);
            c.at(i, j) = s;
        }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

double mse_of(const Model& model, const Matrix& x, const Matrix& y) {
    const Matrix pred = model.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data[i] - y.data[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

// Largest relative disagreement between analytic gradients and central
// differences, over every parameter of the model.
double max_gradient_error(Model& model, const Matrix& x, const Matrix& y) {
    std::vector<double> grad;
    model.loss_and_gradients(x, y, grad);
    auto& params = model.parameters();
    REQUIRE(grad.size() == params.size());

    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        const double eps = 1e-6 * std::max(1.0, std::abs(keep));
        params[i] = keep + eps;
        const double up = mse_of(model, x, y);
        params[i] = keep - eps;
        const double dn = mse_of(model, x, y);
        params[i] = keep;
        const double fd = (up - dn) / (2.0 * eps);
        const double err = std::abs(grad[i] - fd) / std::max(1e-8, std::abs(grad[i]) + std::abs(fd));
        worst = std::max(worst, err);
    }
    return worst;
}

std::vector<std::size_t> dense_widths(const Model& m) {
    std::vector<std::size_t> w;
    for (const auto& l : m.layers())
        if (l.kind == LayerKind::dense) w.push_back(l.out);
    return w;
}

}  // namespace

TEST_CASE("gemm matches the naive triple loop bit for bit") {
    Rng rng(11);
    const auto a = random_matrix(13, 9, rng);
    const auto b = random_matrix(9, 6, rng);
    Matrix c(13, 6);
    gemm(a, b, c);
    const auto want = naive_mm(a, b);
    CHECK(c.data == want.data);

    // Accumulate mode adds on top of the existing values.
    gemm(a, b, c, true);
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(c.data[i] == doctest::Approx(2.0 * want.data[i]).epsilon(1e-15));
}

TEST_CASE("transposed gemm variants match their definitions") {
    Rng rng(12);
    const auto a = random_matrix(7, 5, rng);
    const auto b = random_matrix(8, 5, rng);
    Matrix c(7, 8);
    gemm_abt(a, b, c);
    // fused-multiply-add contraction differs between translation units, so
    // the reference comparison allows the last ulp.
    const auto want = naive_mm(a, transpose(b));
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(c.data[i] == doctest::Approx(want.data[i]).epsilon(1e-14));

    const auto at = random_matrix(9, 4, rng);
    const auto bt = random_matrix(9, 6, rng);
    Matrix d(4, 6);
    gemm_atb(at, bt, d);
    const auto want2 = naive_mm(transpose(at), bt);
    for (std::size_t i = 0; i < d.size(); ++i)
        CHECK(d.data[i] == doctest::Approx(want2.data[i]).epsilon(1e-12));
}

TEST_CASE("mlp architecture chain") {
    const auto m = Model::mlp(7);
    CHECK(m.input_len() == 7);
    CHECK(m.output_len() == 9);
    CHECK(dense_widths(m) == std::vector<std::size_t>{256, 256, 256, 128, 64, 32, 16, 8, 9});
    // ReLU after every dense layer except the head.
    const auto& ls = m.layers();
    REQUIRE(ls.size() == 17);
    for (std::size_t i = 0; i + 1 < ls.size(); i += 2) {
        CHECK(ls[i].kind == LayerKind::dense);
        CHECK(ls[i + 1].kind == LayerKind::relu);
    }
    CHECK(ls.back().kind == LayerKind::dense);
}

TEST_CASE("cnn architecture chain") {
    const auto m = Model::cnn(7);
    const auto shapes = m.output_shapes();
    const auto& ls = m.layers();
    REQUIRE(ls.size() == 9);
    CHECK(ls[0].kind == LayerKind::conv1d);
    CHECK(ls[0].out_channels == 256);
    CHECK(ls[0].kernel == 3);
    CHECK(ls[2].kind == LayerKind::conv1d);
    CHECK(ls[2].out_channels == 32);

    // shapes[0] is the input; shapes[i + 1] follows layer i.
    REQUIRE(shapes.size() == ls.size() + 1);
    CHECK(shapes[0].length == 7);
    CHECK(shapes[0].channels == 1);
    CHECK(shapes[1].length == 5);    // 7 -> conv k3
    CHECK(shapes[1].channels == 256);
    CHECK(shapes[3].length == 3);    // -> conv k3
    CHECK(shapes[3].channels == 32);
    CHECK(shapes[5].length == 1);    // -> maxpool 2
    CHECK(shapes[5].channels == 32);
    CHECK(shapes[6].flat);
    CHECK(shapes[6].size() == 32);   // flatten
    CHECK(shapes[7].size() == 80);   // hidden dense
    CHECK(shapes.back().size() == 9);
}

TEST_CASE("invalid layer chains are rejected") {
    CHECK_THROWS_AS(Model({LayerSpec::make_dense(4, 2)}, 7), ValidationError);
    CHECK_THROWS_AS(Model({LayerSpec::make_conv1d(1, 4, 9)}, 7), ValidationError);
    CHECK_THROWS_AS(Model({LayerSpec::make_maxpool1d(0)}, 7), ValidationError);
    CHECK_THROWS_AS(Model({LayerSpec::make_conv1d(2, 4, 3)}, 7), ValidationError);
}

TEST_CASE("maxpool drops the odd tail") {
    const Model m({LayerSpec::make_maxpool1d(2)}, 5);
    const auto shapes = m.output_shapes();
    CHECK(shapes.back().length == 2);
    CHECK(shapes.back().channels == 1);
}

TEST_CASE("forward matches a hand-computed network") {
    Model m({LayerSpec::make_dense(2, 2), LayerSpec::make_relu(), LayerSpec::make_dense(2, 1)}, 2);
    auto& p = m.parameters();
    REQUIRE(p.size() == 9);
    // First dense: rows are output units.
    p[0] = 1.0; p[1] = 2.0;   // unit 0
    p[2] = 3.0; p[3] = 4.0;   // unit 1
    p[4] = 0.5; p[5] = -10.0; // bias
    // Head.
    p[6] = 1.0; p[7] = 1.0;
    p[8] = 0.25;

    Matrix x(2, 2);
    x.at(0, 0) = 1.0; x.at(0, 1) = 1.0;
    x.at(1, 0) = 0.0; x.at(1, 1) = 0.0;
    const auto y = m.forward(x);
    REQUIRE(y.rows == 2);
    REQUIRE(y.cols == 1);
    CHECK(y.at(0, 0) == 3.75);  // relu([3.5, -3]) . [1,1] + 0.25
    CHECK(y.at(1, 0) == 0.75);  // relu([0.5, -10]) . [1,1] + 0.25
}

TEST_CASE("init is seeded, finite and leaves biases zero") {
    auto a = Model::mlp(7);
    auto b = Model::mlp(7);
    a.init_weights(3);
    b.init_weights(3);
    CHECK(a.parameters() == b.parameters());
    b.init_weights(4);
    CHECK(a.parameters() != b.parameters());

    double mx = 0.0;
    for (double v : a.parameters()) {
        CHECK(std::isfinite(v));
        mx = std::max(mx, std::abs(v));
    }
    CHECK(mx > 0.0);
    CHECK(mx < 1.0);  // largest He-uniform limit here is sqrt(6/7)

    // Zero input rides the (zero) biases through every layer.
    Matrix zero(1, 7);
    const auto out = a.forward(zero);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("dense gradients match central differences") {
    Model m({LayerSpec::make_dense(7, 8), LayerSpec::make_relu(), LayerSpec::make_dense(8, 4),
             LayerSpec::make_relu(), LayerSpec::make_dense(4, 9)},
            7);
    m.init_weights(21);
    Rng rng(22);
    const auto x = random_matrix(5, 7, rng);
    const auto y = random_matrix(5, 9, rng);
    CHECK(max_gradient_error(m, x, y) < 1e-4);
}

TEST_CASE("conv gradients match central differences") {
    Model m({LayerSpec::make_conv1d(1, 4, 3), LayerSpec::make_relu(),
             LayerSpec::make_conv1d(4, 3, 3), LayerSpec::make_relu(), LayerSpec::make_maxpool1d(2),
             LayerSpec::make_flatten(), LayerSpec::make_dense(3, 5), LayerSpec::make_relu(),
             LayerSpec::make_dense(5, 9)},
            7);
    m.init_weights(31);
    Rng rng(32);
    const auto x = random_matrix(5, 7, rng);
    const auto y = random_matrix(5, 9, rng);
    CHECK(max_gradient_error(m, x, y) < 1e-4);
}

TEST_CASE("adam converges on a quadratic") {
    std::vector<double> theta = {0.0};
    AdamState state;
    const AdamConfig cfg;  // lr 1e-3
    std::vector<double> grad(1);
    for (int i = 0; i < 10000; ++i) {
        grad[0] = 2.0 * (theta[0] - 3.0);
        adam_step(theta, grad, state, cfg);
    }
    CHECK(std::abs(theta[0] - 3.0) < 1e-6);

    // The bias-corrected first step has unit scale times the learning rate.
    std::vector<double> t2 = {0.0};
    AdamState s2;
    grad[0] = 2.0 * (t2[0] - 3.0);
    adam_step(t2, grad, s2, cfg);
    CHECK(t2[0] == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("training result depends on rows, not on row order") {
    Rng rng(41);
    const std::size_t rows = 12;
    const auto x = random_matrix(rows, 3, rng);
    const auto y = random_matrix(rows, 2, rng);
    const auto xv = random_matrix(4, 3, rng);
    const auto yv = random_matrix(4, 2, rng);

    // Same data, rows rotated.
    Matrix xr(rows, 3), yr(rows, 2);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t src = (r + 5) % rows;
        std::copy(x.row(src), x.row(src) + 3, xr.row(r));
        std::copy(y.row(src), y.row(src) + 2, yr.row(r));
    }

    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.seed = 9;

    auto spec = [] {
        return Model({LayerSpec::make_dense(3, 6), LayerSpec::make_relu(),
                      LayerSpec::make_dense(6, 2)},
                     3);
    };
    auto m1 = spec();
    auto m2 = spec();
    m1.init_weights(1);
    m2.init_weights(1);
    const auto r1 = train(m1, cfg, x, y, xv, yv);
    const auto r2 = train(m2, cfg, xr, yr, xv, yv);
    CHECK(m1.parameters() == m2.parameters());
    CHECK(r1.train_mse == r2.train_mse);
    CHECK(r1.val_mse == r2.val_mse);
    REQUIRE(r1.train_mse.size() == cfg.epochs);
    REQUIRE(r1.val_mse.size() == cfg.epochs);
    for (double v : r1.train_mse) CHECK(v >= 0.0);

    // Learning should actually reduce the loss on this toy problem.
    TrainConfig longer = cfg;
    longer.epochs = 200;
    auto m3 = spec();
    m3.init_weights(1);
    const auto r3 = train(m3, longer, x, y, x, y);
    CHECK(r3.train_mse.back() < 0.5 * r3.train_mse.front());
}

TEST_CASE("training throws on non-finite data") {
    Rng rng(51);
    const auto x = random_matrix(8, 3, rng);
    auto y = random_matrix(8, 2, rng);
    y.at(3, 1) = std::numeric_limits<double>::infinity();
    Model m({LayerSpec::make_dense(3, 2)}, 3);
    m.init_weights(1);
    TrainConfig cfg;
    cfg.epochs = 2;
    CHECK_THROWS_AS(train(m, cfg, x, y, x, y), NumericError);
}

TEST_CASE("surrogate predictions are independent of chunking") {
    Rng rng(61);
    const std::size_t n = 5000;  // crosses the internal chunk boundary
    const std::size_t fw = 4, tw = 9;
    std::vector<double> feats(n * fw);
    for (double& v : feats) v = rng.uniform(0.0, 10.0);
    std::vector<double> tgts(n * tw);
    for (double& v : tgts) v = rng.uniform(-5.0, 5.0);

    Surrogate s;
    s.model = Model({LayerSpec::make_dense(4, 6), LayerSpec::make_relu(),
                     LayerSpec::make_dense(6, 9)},
                    4);
    s.model.init_weights(2);
    s.feature_scaler = data::Scaler::fit(feats, fw, {"a", "b", "c", "d"});
    std::vector<std::string> tnames;
    for (int c = 0; c < 9; ++c) tnames.push_back("t" + std::to_string(c));
    s.target_scaler = data::Scaler::fit(tgts, tw, tnames);

    std::vector<double> all(n * tw), head((n / 2) * tw), tail((n - n / 2) * tw);
    s.predict(feats.data(), n, all.data());
    s.predict(feats.data(), n / 2, head.data());
    s.predict(feats.data() + (n / 2) * fw, n - n / 2, tail.data());

    for (std::size_t i = 0; i < head.size(); ++i) CHECK(all[i] == head[i]);
    for (std::size_t i = 0; i < tail.size(); ++i) CHECK(all[head.size() + i] == tail[i]);
}

TEST_CASE("surrogate save and load round trip") {
    testutil::TempDir tmp("surrogate");
    Rng rng(71);
    const auto feats = random_matrix(20, 4, rng);
    const auto tgts = random_matrix(20, 9, rng);

    Surrogate s;
    s.model = Model::mlp(4);
    s.model.init_weights(5);
    s.feature_scaler = data::Scaler::fit(feats.data, 4, {"a", "b", "c", "d"});
    std::vector<std::string> tnames;
    for (int c = 0; c < 9; ++c) tnames.push_back("t" + std::to_string(c));
    s.target_scaler = data::Scaler::fit(tgts.data, 9, tnames);
    s.metadata.kind = "mlp";
    s.metadata.seed = 5;
    s.metadata.epochs = 123;
    s.metadata.batch_size = 32;
    s.metadata.learning_rate = 1e-3;
    s.metadata.final_train_mse = 0.5;
    s.metadata.final_val_mse = 0.6;

    s.save(tmp.file("m.json"));
    const auto back = Surrogate::load(tmp.file("m.json"));
    CHECK(back.model.parameters() == s.model.parameters());
    CHECK(back.metadata.kind == "mlp");
    CHECK(back.metadata.epochs == 123);
    CHECK(back.feature_scaler.fingerprint() == s.feature_scaler.fingerprint());
    CHECK(back.target_scaler.fingerprint() == s.target_scaler.fingerprint());

    std::vector<double> a(5 * 9), b(5 * 9);
    s.predict(feats.data.data(), 5, a.data());
    back.predict(feats.data.data(), 5, b.data());
    CHECK(a == b);

    CHECK_THROWS_AS(Surrogate::load(tmp.file("missing.json")), ConfigError);
    io::write_file_atomic(tmp.file("broken.json"), "{oops");
    CHECK_THROWS_AS(Surrogate::load(tmp.file("broken.json")), ConfigError);
}
