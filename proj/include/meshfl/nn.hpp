#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "meshfl/core.hpp"

namespace meshfl::nn {

/// Stacked-LSTM binary classifier shape. input_size is the number of routes
/// feeding each time step; seq_len is the window size.
struct LstmConfig {
    std::size_t input_size = 2;
    std::size_t hidden_size = 16;
    std::size_t num_layers = 2;
    std::size_t seq_len = 4;
    std::size_t output_size = 1;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    /// Input dimension of layer `layer` (0-based).
    std::size_t layer_input(std::size_t layer) const {
        return layer == 0 ? input_size : hidden_size;
    }

    /// Total trainable parameter count:
    /// sum over layers of 4*H*(in + H + 1), plus H + 1 for the output layer.
    std::size_t param_count() const;
};

// Parameter layout within a ParameterVector, in storage order:
//   for each layer l = 0..L-1:
//     for each gate in [i, f, g, o]:
//       W_x  (H x in_l, row-major)   input weights
//       W_h  (H x H,   row-major)    recurrent weights
//       b    (H)                     bias
//   output layer: W_out (H), b_out (1)
// Gate order and the block order inside each gate are fixed; every consumer
// of a ParameterVector relies on this.
struct LstmLayout {
    explicit LstmLayout(const LstmConfig& config);

    std::size_t gate_wx(std::size_t layer, std::size_t gate) const;
    std::size_t gate_wh(std::size_t layer, std::size_t gate) const;
    std::size_t gate_b(std::size_t layer, std::size_t gate) const;
    std::size_t out_w() const { return out_w_; }
    std::size_t out_b() const { return out_b_; }
    std::size_t total() const { return total_; }

private:
    std::vector<std::size_t> layer_base_;
    std::size_t out_w_ = 0, out_b_ = 0, total_ = 0;
    std::size_t hidden_ = 0;
    std::vector<std::size_t> layer_in_;
};

constexpr std::size_t kGateI = 0;
constexpr std::size_t kGateF = 1;
constexpr std::size_t kGateG = 2;
constexpr std::size_t kGateO = 3;

/// Per-step activations retained by lstm_forward for backpropagation.
/// params_hash / window_hash guard against reusing a cache with different
/// inputs (backward throws "stale forward cache").
struct ForwardCache {
    std::size_t layers = 0, steps = 0, hidden = 0;
    // Indexed [layer][t][unit], flattened.
    std::vector<double> gate_i, gate_f, gate_g, gate_o;
    std::vector<double> cell, tanh_cell, hidden_state;
    double logit = 0.0;
    double probability = 0.0;
    std::uint64_t params_hash = 0;
    std::uint64_t window_hash = 0;

    std::size_t idx(std::size_t layer, std::size_t t, std::size_t unit) const {
        return (layer * steps + t) * hidden + unit;
    }
};

/// Binary decision derived from the sigmoid output. chosen_route is 1 iff
/// probability >= 0.5 (a tie at exactly 0.5 selects route 1).
struct Prediction {
    double probability = 0.0;
    RouteId chosen_route = 0;
};

Prediction predict(double probability);

/// Adam state with the canonical defaults; lr follows the training setup.
struct AdamState {
    ParameterVector m, v;
    std::uint64_t step_count = 0;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros(std::size_t dim, double lr = 0.01);
};

/// One (window, label) training pair: window is seq_len x R, row-major
/// (time-major, route-minor); label is the route to select at the step
/// immediately after the window.
struct WindowedSample {
    std::vector<double> window;
    int label = 0;
};

/// Every weight drawn uniform in [-1/sqrt(hidden), +1/sqrt(hidden)], in
/// storage order, so a given seed always produces the same vector.
ParameterVector init_params(const LstmConfig& config, SeededRng& rng);

/// Runs the stacked LSTM over `window` (seq_len x input_size, row-major) from
/// zero initial state; the final top-layer hidden state feeds the linear
/// output, and probability = sigmoid(logit). Throws on dimension mismatch.
ForwardCache lstm_forward(const ParameterVector& params, std::span<const double> window,
                          const LstmConfig& config);

/// Binary cross entropy -(y*ln p + (1-y)*ln(1-p)); p is clamped to
/// [1e-12, 1-1e-12] before the logs. Throws if p is outside [0,1] or the
/// label is not 0/1.
double bce_loss(double probability, int label);

/// Exact gradient of bce_loss(lstm_forward(...)) w.r.t. every parameter,
/// same layout as the parameter vector. The cache must come from a matching
/// lstm_forward call (throws std::invalid_argument("stale forward cache")).
ParameterVector backward(const ParameterVector& params, std::span<const double> window,
                         int label, const ForwardCache& cache, const LstmConfig& config);

/// Standard Adam with bias correction; mutates params and state in place.
void adam_step(ParameterVector& params, const ParameterVector& gradient, AdamState& state);

/// Max over coordinates of |analytic - central difference| /
/// max(1, |analytic|, |numeric|) at step size h.
double grad_check(const ParameterVector& params, std::span<const double> window, int label,
                  const LstmConfig& config, double h);

/// One pass over `samples`: seeded shuffle into batches of `batch_size`
/// (last batch may be short), one adam_step per batch on the batch-mean
/// gradient. Within a batch, gradients are accumulated in ascending sample
/// index so the summation order is reproducible. Returns the epoch mean
/// per-sample loss.
double train_epoch(ParameterVector& params, const std::vector<WindowedSample>& samples,
                   std::size_t batch_size, AdamState& adam, const LstmConfig& config,
                   SeededRng& rng);

} // namespace meshfl::nn
