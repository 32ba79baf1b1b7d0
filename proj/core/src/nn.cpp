#include "llsh/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "llsh/binio.hpp"
#include "llsh/errors.hpp"
#include "llsh/rng.hpp"

namespace llsh {

Mlp Mlp::glorot(const std::vector<size_t>& dims, uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("mlp: need at least one layer");
    for (size_t d : dims) {
        if (d == 0) throw std::invalid_argument("mlp: zero-width layer");
    }
    Mlp net;
    auto rng = make_engine(seed);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.W.resize(layer.out * layer.in);
        layer.b.assign(layer.out, 0.0);
        double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& w : layer.W) w = dist(rng);
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

size_t Mlp::param_count() const {
    size_t total = 0;
    for (const auto& l : layers_) total += l.param_count();
    return total;
}

namespace {

void apply_layer(const DenseLayer& layer, const Matrix& X, Matrix& Y) {
    Y.rows = X.rows;
    Y.cols = layer.out;
    Y.v.assign(X.rows * layer.out, 0.0);
    for (size_t i = 0; i < X.rows; ++i) {
        const double* x = X.v.data() + i * X.cols;
        double* y = Y.v.data() + i * layer.out;
        for (size_t o = 0; o < layer.out; ++o) {
            const double* w = layer.W.data() + o * layer.in;
            double acc = layer.b[o];
            for (size_t j = 0; j < layer.in; ++j) acc += w[j] * x[j];
            y[o] = acc;
        }
    }
}

void relu_inplace(Matrix& m) {
    for (auto& x : m.v) x = x > 0.0 ? x : 0.0;
}

}  // namespace

ForwardTrace forward_trace(const Mlp& net, const Matrix& X) {
    if (X.cols != net.input_dim()) {
        throw std::invalid_argument("forward: input width mismatch");
    }
    ForwardTrace trace;
    trace.acts.reserve(net.layers().size() + 1);
    trace.acts.push_back(X);
    for (size_t l = 0; l < net.layers().size(); ++l) {
        Matrix y;
        apply_layer(net.layers()[l], trace.acts.back(), y);
        if (l + 1 < net.layers().size()) relu_inplace(y);
        trace.acts.push_back(std::move(y));
    }
    return trace;
}

Matrix forward(const Mlp& net, const Matrix& X) {
    if (X.cols != net.input_dim()) {
        throw std::invalid_argument("forward: input width " + std::to_string(X.cols) +
                                    " != first layer width " + std::to_string(net.input_dim()));
    }
    Matrix cur = X;
    for (size_t l = 0; l < net.layers().size(); ++l) {
        Matrix y;
        apply_layer(net.layers()[l], cur, y);
        if (l + 1 < net.layers().size()) relu_inplace(y);
        cur = std::move(y);
    }
    return cur;
}

double mse_loss(const Matrix& Y, const Matrix& target) {
    if (Y.rows != target.rows || Y.cols != target.cols) {
        throw std::invalid_argument("mse_loss: shape mismatch");
    }
    double acc = 0.0;
    for (size_t i = 0; i < Y.v.size(); ++i) {
        double diff = Y.v[i] - target.v[i];
        acc += diff * diff;
    }
    return Y.v.empty() ? 0.0 : acc / static_cast<double>(Y.v.size());
}

Gradients backward_from(const Mlp& net, const ForwardTrace& trace, const Matrix& dY, Matrix* dX) {
    const Matrix& Y = trace.output();
    if (dY.rows != Y.rows || dY.cols != Y.cols) {
        throw std::invalid_argument("backward: upstream gradient shape mismatch");
    }
    Matrix delta = dY;
    Gradients grads(net.layers().size());
    for (size_t l = net.layers().size(); l-- > 0;) {
        const DenseLayer& layer = net.layers()[l];
        const Matrix& input = trace.acts[l];
        auto& g = grads[l];
        g.W.assign(layer.W.size(), 0.0);
        g.b.assign(layer.b.size(), 0.0);

        for (size_t i = 0; i < delta.rows; ++i) {
            const double* d = delta.v.data() + i * layer.out;
            const double* x = input.v.data() + i * layer.in;
            for (size_t o = 0; o < layer.out; ++o) {
                double* gw = g.W.data() + o * layer.in;
                for (size_t j = 0; j < layer.in; ++j) gw[j] += d[o] * x[j];
                g.b[o] += d[o];
            }
        }

        if (l == 0 && dX == nullptr) break;
        // Propagate through the layer, then through the preceding ReLU
        // (skipped for l == 0, where the input is raw). The cached
        // activation is post-ReLU, so act > 0 identifies pre-activation > 0;
        // the subgradient at exactly 0 is 0.
        Matrix prev(delta.rows, layer.in);
        for (size_t i = 0; i < delta.rows; ++i) {
            const double* d = delta.v.data() + i * layer.out;
            const double* act = input.v.data() + i * layer.in;
            double* p = prev.v.data() + i * layer.in;
            for (size_t o = 0; o < layer.out; ++o) {
                const double* w = layer.W.data() + o * layer.in;
                double dv = d[o];
                for (size_t j = 0; j < layer.in; ++j) p[j] += dv * w[j];
            }
            if (l > 0) {
                for (size_t j = 0; j < layer.in; ++j) {
                    if (act[j] <= 0.0) p[j] = 0.0;
                }
            }
        }
        delta = std::move(prev);
        if (l == 0) break;
    }
    if (dX) *dX = std::move(delta);
    return grads;
}

Gradients backward(const Mlp& net, const Matrix& X, const Matrix& target) {
    if (target.rows != X.rows || target.cols != net.output_dim()) {
        throw std::invalid_argument("backward: target shape mismatch");
    }
    auto trace = forward_trace(net, X);
    const Matrix& Y = trace.output();

    // dL/dY for the mean-over-all-entries squared error.
    Matrix dY(Y.rows, Y.cols);
    double scale = 2.0 / static_cast<double>(Y.v.size());
    for (size_t i = 0; i < Y.v.size(); ++i) dY.v[i] = scale * (Y.v[i] - target.v[i]);
    return backward_from(net, trace, dY, nullptr);
}

Gradients finite_diff_grad(const Mlp& net, const Matrix& X, const Matrix& target, double eps) {
    Mlp probe = net;
    auto loss_at = [&]() { return mse_loss(forward(probe, X), target); };

    Gradients grads(net.layers().size());
    for (size_t l = 0; l < net.layers().size(); ++l) {
        auto& layer = probe.layers()[l];
        grads[l].W.resize(layer.W.size());
        grads[l].b.resize(layer.b.size());
        for (size_t i = 0; i < layer.W.size(); ++i) {
            double saved = layer.W[i];
            layer.W[i] = saved + eps;
            double up = loss_at();
            layer.W[i] = saved - eps;
            double down = loss_at();
            layer.W[i] = saved;
            grads[l].W[i] = (up - down) / (2.0 * eps);
        }
        for (size_t i = 0; i < layer.b.size(); ++i) {
            double saved = layer.b[i];
            layer.b[i] = saved + eps;
            double up = loss_at();
            layer.b[i] = saved - eps;
            double down = loss_at();
            layer.b[i] = saved;
            grads[l].b[i] = (up - down) / (2.0 * eps);
        }
    }
    return grads;
}

AdamState AdamState::init(const Mlp& net, double lr) {
    AdamState s;
    s.lr = lr;
    s.m.resize(net.layers().size());
    s.v.resize(net.layers().size());
    for (size_t l = 0; l < net.layers().size(); ++l) {
        s.m[l].W.assign(net.layers()[l].W.size(), 0.0);
        s.m[l].b.assign(net.layers()[l].b.size(), 0.0);
        s.v[l].W.assign(net.layers()[l].W.size(), 0.0);
        s.v[l].b.assign(net.layers()[l].b.size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamState& s, double bc1, double bc2) {
    for (size_t i = 0; i < params.size(); ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grads[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        params[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

}  // namespace

void adam_step(AdamState& state, Mlp& net, const Gradients& grads) {
    if (grads.size() != net.layers().size()) {
        throw std::invalid_argument("adam_step: gradient layout mismatch");
    }
    state.t += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (size_t l = 0; l < net.layers().size(); ++l) {
        auto& layer = net.layers()[l];
        adam_update(layer.W, grads[l].W, state.m[l].W, state.v[l].W, state, bc1, bc2);
        adam_update(layer.b, grads[l].b, state.m[l].b, state.v[l].b, state, bc1, bc2);
    }
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw std::invalid_argument("train config: holdout_fraction must lie in (0,1)");
    }
}

double train_mlp(Mlp& net, const Matrix& X, const Matrix& target, const TrainConfig& cfg,
                 const std::function<double(const Mlp&)>& epoch_metric) {
    cfg.validate();
    if (X.rows != target.rows) throw std::invalid_argument("train_mlp: row count mismatch");
    if (X.rows == 0) throw std::invalid_argument("train_mlp: empty training set");

    AdamState adam = AdamState::init(net, cfg.lr);
    auto rng = make_engine(derive_seed(cfg.seed, 0x7261696eULL));
    std::vector<size_t> order(X.rows);
    std::iota(order.begin(), order.end(), size_t{0});

    double best_metric = -std::numeric_limits<double>::infinity();
    Mlp best = net;
    size_t stale = 0;

    Matrix bx, bt;
    for (size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t start = 0; start < X.rows; start += cfg.batch_size) {
            size_t stop = std::min(X.rows, start + cfg.batch_size);
            bx.rows = stop - start;
            bx.cols = X.cols;
            bx.v.resize(bx.rows * bx.cols);
            bt.rows = stop - start;
            bt.cols = target.cols;
            bt.v.resize(bt.rows * bt.cols);
            for (size_t i = start; i < stop; ++i) {
                std::copy_n(X.v.data() + order[i] * X.cols, X.cols,
                            bx.v.data() + (i - start) * X.cols);
                std::copy_n(target.v.data() + order[i] * target.cols, target.cols,
                            bt.v.data() + (i - start) * target.cols);
            }
            adam_step(adam, net, backward(net, bx, bt));
        }

        double metric = epoch_metric ? epoch_metric(net) : -mse_loss(forward(net, X), target);
        if (metric > best_metric) {
            best_metric = metric;
            best = net;
            stale = 0;
        } else {
            // ties keep the most-trained parameters (discrete metrics like
            // the fitting rate plateau while the loss still falls) but still
            // count toward the patience budget
            if (metric == best_metric) best = net;
            if (++stale >= cfg.patience) break;
        }
    }
    net = best;
    return best_metric;
}

void Mlp::quantize_to_f32() {
    for (auto& l : layers_) {
        for (auto& w : l.W) w = static_cast<double>(static_cast<float>(w));
        for (auto& b : l.b) b = static_cast<double>(static_cast<float>(b));
    }
}

namespace {
constexpr char kMlpMagic[4] = {'M', 'L', 'P', '1'};
}

void Mlp::save(std::ostream& os) const {
    binio::write_magic(os, kMlpMagic);
    binio::write_raw<uint32_t>(os, static_cast<uint32_t>(layers_.size()));
    for (const auto& l : layers_) {
        binio::write_raw<uint32_t>(os, static_cast<uint32_t>(l.in));
        binio::write_raw<uint32_t>(os, static_cast<uint32_t>(l.out));
    }
    for (const auto& l : layers_) {
        for (double w : l.W) binio::write_raw<float>(os, static_cast<float>(w));
        for (double b : l.b) binio::write_raw<float>(os, static_cast<float>(b));
    }
}

Mlp Mlp::load(std::istream& is) {
    binio::expect_magic(is, kMlpMagic, "MLP1");
    auto count = binio::read_raw<uint32_t>(is, "layer count");
    if (count == 0) throw DataError("MLP1: zero layers");
    Mlp net;
    net.layers_.resize(count);
    for (auto& l : net.layers_) {
        l.in = binio::read_raw<uint32_t>(is, "layer in");
        l.out = binio::read_raw<uint32_t>(is, "layer out");
        if (l.in == 0 || l.out == 0) throw DataError("MLP1: zero-width layer");
    }
    for (size_t l = 1; l < net.layers_.size(); ++l) {
        if (net.layers_[l].in != net.layers_[l - 1].out) {
            throw DataError("MLP1: layer shapes do not chain");
        }
    }
    for (auto& l : net.layers_) {
        l.W.resize(l.out * l.in);
        l.b.resize(l.out);
        for (auto& w : l.W) w = binio::read_raw<float>(is, "weight");
        for (auto& b : l.b) b = binio::read_raw<float>(is, "bias");
    }
    return net;
}

}  // namespace llsh
