#include "meshfl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace meshfl::nn {

namespace {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline std::uint64_t hash_doubles(std::span<const double> values) {
    return fnv1a64(values.data(), values.size() * sizeof(double));
}

} // namespace

void LstmConfig::validate() const {
    if (input_size < 1) throw std::invalid_argument("input_size must be >= 1");
    if (hidden_size < 1) throw std::invalid_argument("hidden_size must be >= 1");
    if (num_layers < 1) throw std::invalid_argument("num_layers must be >= 1");
    if (seq_len < 1) throw std::invalid_argument("seq_len must be >= 1");
    if (output_size != 1) throw std::invalid_argument("output_size must be 1 (binary classifier)");
}

std::size_t LstmConfig::param_count() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l < num_layers; ++l)
        total += 4 * hidden_size * (layer_input(l) + hidden_size + 1);
    return total + hidden_size + 1;
}

LstmLayout::LstmLayout(const LstmConfig& config) {
    config.validate();
    hidden_ = config.hidden_size;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        layer_base_.push_back(offset);
        layer_in_.push_back(config.layer_input(l));
        offset += 4 * hidden_ * (config.layer_input(l) + hidden_ + 1);
    }
    out_w_ = offset;
    out_b_ = offset + hidden_;
    total_ = out_b_ + 1;
}

std::size_t LstmLayout::gate_wx(std::size_t layer, std::size_t gate) const {
    const std::size_t gate_block = hidden_ * (layer_in_[layer] + hidden_ + 1);
    return layer_base_[layer] + gate * gate_block;
}

std::size_t LstmLayout::gate_wh(std::size_t layer, std::size_t gate) const {
    return gate_wx(layer, gate) + hidden_ * layer_in_[layer];
}

std::size_t LstmLayout::gate_b(std::size_t layer, std::size_t gate) const {
    return gate_wh(layer, gate) + hidden_ * hidden_;
}

Prediction predict(double probability) {
    Prediction p;
    p.probability = probability;
    p.chosen_route = probability >= 0.5 ? 1 : 0;
    return p;
}

AdamState AdamState::zeros(std::size_t dim, double lr) {
    AdamState s;
    s.m.assign(dim, 0.0);
    s.v.assign(dim, 0.0);
    s.lr = lr;
    return s;
}

ParameterVector init_params(const LstmConfig& config, SeededRng& rng) {
    config.validate();
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_size));
    ParameterVector params(config.param_count());
    for (auto& w : params) w = rng.uniform(-bound, bound);
    return params;
}

ForwardCache lstm_forward(const ParameterVector& params, std::span<const double> window,
                          const LstmConfig& config) {
    const LstmLayout layout(config);
    if (params.size() != layout.total()) throw std::invalid_argument("parameter shape mismatch");
    if (window.size() != config.seq_len * config.input_size)
        throw std::invalid_argument("window dimension mismatch");

    const std::size_t H = config.hidden_size;
    const std::size_t L = config.num_layers;
    const std::size_t T = config.seq_len;

    ForwardCache cache;
    cache.layers = L;
    cache.steps = T;
    cache.hidden = H;
    const std::size_t n = L * T * H;
    cache.gate_i.assign(n, 0.0);
    cache.gate_f.assign(n, 0.0);
    cache.gate_g.assign(n, 0.0);
    cache.gate_o.assign(n, 0.0);
    cache.cell.assign(n, 0.0);
    cache.tanh_cell.assign(n, 0.0);
    cache.hidden_state.assign(n, 0.0);

    std::vector<double> x; // input row of the current layer at the current step
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t l = 0; l < L; ++l) {
            const std::size_t in = config.layer_input(l);
            x.resize(in);
            if (l == 0) {
                for (std::size_t k = 0; k < in; ++k) x[k] = window[t * in + k];
            } else {
                for (std::size_t k = 0; k < in; ++k) x[k] = cache.hidden_state[cache.idx(l - 1, t, k)];
            }
            for (std::size_t u = 0; u < H; ++u) {
                double act[4];
                for (std::size_t gate = 0; gate < 4; ++gate) {
                    const double* wx = params.data() + layout.gate_wx(l, gate) + u * in;
                    const double* wh = params.data() + layout.gate_wh(l, gate) + u * H;
                    double a = params[layout.gate_b(l, gate) + u];
                    for (std::size_t k = 0; k < in; ++k) a += wx[k] * x[k];
                    if (t > 0) {
                        for (std::size_t k = 0; k < H; ++k)
                            a += wh[k] * cache.hidden_state[cache.idx(l, t - 1, k)];
                    }
                    act[gate] = a;
                }
                const double gi = sigmoid(act[kGateI]);
                const double gf = sigmoid(act[kGateF]);
                const double gg = std::tanh(act[kGateG]);
                const double go = sigmoid(act[kGateO]);
                const double c_prev = t > 0 ? cache.cell[cache.idx(l, t - 1, u)] : 0.0;
                const double c = gf * c_prev + gi * gg;
                const double tc = std::tanh(c);
                const std::size_t at = cache.idx(l, t, u);
                cache.gate_i[at] = gi;
                cache.gate_f[at] = gf;
                cache.gate_g[at] = gg;
                cache.gate_o[at] = go;
                cache.cell[at] = c;
                cache.tanh_cell[at] = tc;
                cache.hidden_state[at] = go * tc;
            }
        }
    }

    double logit = params[layout.out_b()];
    for (std::size_t u = 0; u < H; ++u)
        logit += params[layout.out_w() + u] * cache.hidden_state[cache.idx(L - 1, T - 1, u)];
    cache.logit = logit;
    cache.probability = sigmoid(logit);
    cache.params_hash = hash_doubles(params);
    cache.window_hash = hash_doubles(window);
    return cache;
}

double bce_loss(double probability, int label) {
    if (!(probability >= 0.0 && probability <= 1.0))
        throw std::invalid_argument("probability outside [0,1]");
    if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
    const double p = std::clamp(probability, 1e-12, 1.0 - 1e-12);
    return -(label * std::log(p) + (1 - label) * std::log(1.0 - p));
}

ParameterVector backward(const ParameterVector& params, std::span<const double> window,
                         int label, const ForwardCache& cache, const LstmConfig& config) {
    const LstmLayout layout(config);
    const std::size_t H = config.hidden_size;
    const std::size_t L = config.num_layers;
    const std::size_t T = config.seq_len;
    if (params.size() != layout.total()) throw std::invalid_argument("parameter shape mismatch");
    if (window.size() != T * config.input_size)
        throw std::invalid_argument("window dimension mismatch");
    if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
    if (cache.layers != L || cache.steps != T || cache.hidden != H ||
        cache.params_hash != hash_doubles(params) || cache.window_hash != hash_doubles(window))
        throw std::invalid_argument("stale forward cache");

    ParameterVector grad(params.size(), 0.0);

    // d loss / d logit for sigmoid + binary cross entropy.
    const double dlogit = cache.probability - static_cast<double>(label);

    grad[layout.out_b()] = dlogit;
    for (std::size_t u = 0; u < H; ++u)
        grad[layout.out_w() + u] = cache.hidden_state[cache.idx(L - 1, T - 1, u)] * dlogit;

    // Carries from step t+1, per layer.
    std::vector<std::vector<double>> dh_carry(L, std::vector<double>(H, 0.0));
    std::vector<std::vector<double>> dc_carry(L, std::vector<double>(H, 0.0));

    std::vector<double> dh(H), dc(H), da(4 * H);
    std::vector<double> dx_above; // layer l+1's input gradient at this t
    std::vector<double> x;

    for (std::size_t t = T; t-- > 0;) {
        dx_above.clear();
        for (std::size_t l = L; l-- > 0;) {
            const std::size_t in = config.layer_input(l);
            x.resize(in);
            if (l == 0) {
                for (std::size_t k = 0; k < in; ++k) x[k] = window[t * in + k];
            } else {
                for (std::size_t k = 0; k < in; ++k) x[k] = cache.hidden_state[cache.idx(l - 1, t, k)];
            }

            for (std::size_t u = 0; u < H; ++u) {
                double total = dh_carry[l][u];
                if (l == L - 1 && t == T - 1) total += params[layout.out_w() + u] * dlogit;
                if (l < L - 1) total += dx_above[u];
                dh[u] = total;
            }

            for (std::size_t u = 0; u < H; ++u) {
                const std::size_t at = cache.idx(l, t, u);
                const double gi = cache.gate_i[at];
                const double gf = cache.gate_f[at];
                const double gg = cache.gate_g[at];
                const double go = cache.gate_o[at];
                const double tc = cache.tanh_cell[at];
                const double c_prev = t > 0 ? cache.cell[cache.idx(l, t - 1, u)] : 0.0;

                const double d_o = dh[u] * tc;
                dc[u] = dc_carry[l][u] + dh[u] * go * (1.0 - tc * tc);
                const double d_i = dc[u] * gg;
                const double d_g = dc[u] * gi;
                const double d_f = dc[u] * c_prev;
                dc_carry[l][u] = dc[u] * gf;

                da[kGateI * H + u] = d_i * gi * (1.0 - gi);
                da[kGateF * H + u] = d_f * gf * (1.0 - gf);
                da[kGateG * H + u] = d_g * (1.0 - gg * gg);
                da[kGateO * H + u] = d_o * go * (1.0 - go);
            }

            std::vector<double> dx(in, 0.0);
            std::fill(dh_carry[l].begin(), dh_carry[l].end(), 0.0);
            for (std::size_t gate = 0; gate < 4; ++gate) {
                const std::size_t wx_base = layout.gate_wx(l, gate);
                const std::size_t wh_base = layout.gate_wh(l, gate);
                const std::size_t b_base = layout.gate_b(l, gate);
                for (std::size_t u = 0; u < H; ++u) {
                    const double a = da[gate * H + u];
                    if (a == 0.0) continue;
                    double* gwx = grad.data() + wx_base + u * in;
                    const double* wx = params.data() + wx_base + u * in;
                    for (std::size_t k = 0; k < in; ++k) {
                        gwx[k] += a * x[k];
                        dx[k] += wx[k] * a;
                    }
                    if (t > 0) {
                        double* gwh = grad.data() + wh_base + u * H;
                        const double* wh = params.data() + wh_base + u * H;
                        for (std::size_t k = 0; k < H; ++k) {
                            gwh[k] += a * cache.hidden_state[cache.idx(l, t - 1, k)];
                            dh_carry[l][k] += wh[k] * a;
                        }
                    }
                    grad[b_base + u] += a;
                }
            }
            dx_above = std::move(dx);
        }
    }
    return grad;
}

void adam_step(ParameterVector& params, const ParameterVector& gradient, AdamState& state) {
    if (gradient.size() != params.size() || state.m.size() != params.size() ||
        state.v.size() != params.size())
        throw std::invalid_argument("parameter shape mismatch");
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = gradient[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

double grad_check(const ParameterVector& params, std::span<const double> window, int label,
                  const LstmConfig& config, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step size must be > 0");
    const ForwardCache cache = lstm_forward(params, window, config);
    const ParameterVector analytic = backward(params, window, label, cache, config);

    ParameterVector probe = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        probe[i] = params[i] + h;
        const double plus = bce_loss(lstm_forward(probe, window, config).probability, label);
        probe[i] = params[i] - h;
        const double minus = bce_loss(lstm_forward(probe, window, config).probability, label);
        probe[i] = params[i];
        const double numeric = (plus - minus) / (2.0 * h);
        const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

double train_epoch(ParameterVector& params, const std::vector<WindowedSample>& samples,
                   std::size_t batch_size, AdamState& adam, const LstmConfig& config,
                   SeededRng& rng) {
    if (samples.empty()) throw std::invalid_argument("no samples");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    double loss_sum = 0.0;
    ParameterVector batch_grad(params.size());
    std::vector<std::size_t> batch;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(start + batch_size, order.size());
        batch.assign(order.begin() + start, order.begin() + end);
        // Fixed summation order inside the batch.
        std::sort(batch.begin(), batch.end());

        std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
        for (std::size_t idx : batch) {
            const WindowedSample& s = samples[idx];
            const ForwardCache cache = lstm_forward(params, s.window, config);
            loss_sum += bce_loss(cache.probability, s.label);
            const ParameterVector g = backward(params, s.window, s.label, cache, config);
            for (std::size_t i = 0; i < batch_grad.size(); ++i) batch_grad[i] += g[i];
        }
        const double inv = 1.0 / static_cast<double>(batch.size());
        for (auto& g : batch_grad) g *= inv;
        adam_step(params, batch_grad, adam);
    }
    return loss_sum / static_cast<double>(samples.size());
}

} // namespace meshfl::nn
