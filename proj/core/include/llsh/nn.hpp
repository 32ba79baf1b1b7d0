#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace llsh {

/// Dense row-major f64 matrix. All training arithmetic runs in 64-bit
/// floats; only serialized models downcast to f32.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return v[r * cols + c]; }
    double at(size_t r, size_t c) const { return v[r * cols + c]; }
    std::span<double> row(size_t r) { return {v.data() + r * cols, cols}; }
    std::span<const double> row(size_t r) const { return {v.data() + r * cols, cols}; }
};

/// Fully connected layer y = W x + b with W of shape out x in.
struct DenseLayer {
    size_t in = 0;
    size_t out = 0;
    std::vector<double> W;  // row-major out x in
    std::vector<double> b;  // out

    size_t param_count() const { return W.size() + b.size(); }
};

/// Gradients (or Adam moments) with the same shapes as a network's layers.
struct LayerGrads {
    std::vector<double> W;
    std::vector<double> b;
};
using Gradients = std::vector<LayerGrads>;

/// Plain multilayer perceptron: ReLU between layers, identity on the last.
class Mlp {
public:
    Mlp() = default;

    /// Layer sizes, e.g. {100, 32, 16} builds two dense layers. Weights are
    /// Glorot-uniform (+-sqrt(6/(fan_in+fan_out))), biases zero.
    static Mlp glorot(const std::vector<size_t>& dims, uint64_t seed);

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    size_t input_dim() const { return layers_.front().in; }
    size_t output_dim() const { return layers_.back().out; }
    size_t param_count() const;

    /// Rounds every parameter through f32. Trained models are quantized to
    /// the serialized precision so a save/load roundtrip is an identity.
    void quantize_to_f32();

    void save(std::ostream& os) const;  // "MLP1", dims, f32 weights
    static Mlp load(std::istream& is);

private:
    std::vector<DenseLayer> layers_;
};

/// y = W_n relu(... relu(W_1 x + b_1) ...) + b_n for every row of X.
Matrix forward(const Mlp& net, const Matrix& X);

/// Mean over all rows*cols entries of the squared difference.
double mse_loss(const Matrix& Y, const Matrix& target);

/// Exact gradients of mse_loss(forward(net, X), target) with respect to all
/// parameters, by reverse accumulation. ReLU subgradient at 0 is 0.
Gradients backward(const Mlp& net, const Matrix& X, const Matrix& target);

/// Per-layer activations kept for chained backprop: acts[0] is the input,
/// acts[i] the output of layer i-1 (ReLU applied on all but the last).
struct ForwardTrace {
    std::vector<Matrix> acts;

    const Matrix& output() const { return acts.back(); }
};

ForwardTrace forward_trace(const Mlp& net, const Matrix& X);

/// Reverse accumulation from an upstream gradient dL/dY. When dX is non-null
/// it receives dL/dX so stacked networks can chain.
Gradients backward_from(const Mlp& net, const ForwardTrace& trace, const Matrix& dY, Matrix* dX);

/// Central finite differences of the same loss, parameter by parameter.
/// Test oracle for backward(); intended for small nets only.
Gradients finite_diff_grad(const Mlp& net, const Matrix& X, const Matrix& target, double eps);

/// Adam accumulators mirroring a network's parameters.
struct AdamState {
    Gradients m;  // first moment
    Gradients v;  // second moment
    uint64_t t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(const Mlp& net, double lr);
};

/// One Adam update with bias correction; increments state.t.
void adam_step(AdamState& state, Mlp& net, const Gradients& grads);

struct TrainConfig {
    double lr = 1e-3;
    size_t batch_size = 64;
    size_t max_epochs = 120;
    size_t patience = 12;          // epochs without improvement before stopping
    double holdout_fraction = 0.1; // held out for early-stopping metrics
    uint64_t seed = 1;

    void validate() const;  // throws std::invalid_argument
};

/// Minibatch Adam training of `net` against (X, target) until max_epochs or
/// until `epoch_metric` (greater is better; called after each epoch) fails
/// to improve for cfg.patience epochs. Restores the best-metric parameters.
/// When epoch_metric is empty the negated training MSE is used.
/// Returns the best metric value.
double train_mlp(Mlp& net, const Matrix& X, const Matrix& target, const TrainConfig& cfg,
                 const std::function<double(const Mlp&)>& epoch_metric = {});

}  // namespace llsh
