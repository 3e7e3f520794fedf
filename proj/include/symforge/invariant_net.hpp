#pragma once

// Deep-Sets form of the S_{n^2}-invariant network applied after the selection
// front end:
//
//   f(x) = head([ sum_r eta(row_r) ; q ])
//
// where the sum runs over all n^2 rows of M2 rho(M1 x) and q are the
// complement coordinates. Rows not picked by M2 are (0, 0), so the sum is
// evaluated as the selected rows plus (n^2 - selected) * eta(0, 0).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "selection.hpp"

namespace symforge {

struct dense_layer {
    std::size_t in = 0, out = 0;
    std::size_t weights = 0;  // offset of the out x in row-major weight block
    std::size_t bias = 0;
};

/// Fully connected tanh network stored as offsets into a flat parameter
/// vector. The last layer is linear.
struct mlp_layout {
    std::vector<dense_layer> layers;

    static mlp_layout make(std::span<const std::size_t> widths, std::size_t& offset) {
        mlp_layout m;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            dense_layer d{widths[l], widths[l + 1], offset, 0};
            offset += d.in * d.out;
            d.bias = offset;
            offset += d.out;
            m.layers.push_back(d);
        }
        return m;
    }

    std::size_t input_size() const { return layers.front().in; }
    std::size_t output_size() const { return layers.back().out; }
};

/// Activations of every layer for one input; acts[0] is the input.
using mlp_trace = std::vector<vec>;

inline void mlp_forward(const double* params, const mlp_layout& net, std::span<const double> input,
                        mlp_trace& acts) {
    acts.resize(net.layers.size() + 1);
    acts[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& d = net.layers[l];
        const vec& a = acts[l];
        vec& z = acts[l + 1];
        z.resize(d.out);
        const double* W = params + d.weights;
        const double* b = params + d.bias;
        const bool hidden = l + 1 < net.layers.size();
        for (std::size_t o = 0; o < d.out; ++o) {
            double s = b[o];
            const double* w = W + o * d.in;
            for (std::size_t i = 0; i < d.in; ++i) s += w[i] * a[i];
            z[o] = hidden ? std::tanh(s) : s;
        }
    }
}

/// Accumulates d(upstream . output)/d(params) into `grad`; writes the input
/// gradient into `grad_input` when non-null.
inline void mlp_backward(const double* params, const mlp_layout& net, const mlp_trace& acts,
                         std::span<const double> upstream, double* grad, vec* grad_input, vec& delta,
                         vec& prev) {
    delta.assign(upstream.begin(), upstream.end());
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const auto& d = net.layers[l];
        const vec& a = acts[l];
        if (l + 1 < net.layers.size()) {
            const vec& z = acts[l + 1];
            for (std::size_t o = 0; o < d.out; ++o) delta[o] *= 1.0 - z[o] * z[o];
        }
        const double* W = params + d.weights;
        double* gW = grad + d.weights;
        double* gb = grad + d.bias;
        const bool need_prev = l > 0 || grad_input != nullptr;
        if (need_prev) prev.assign(d.in, 0.0);
        for (std::size_t o = 0; o < d.out; ++o) {
            const double g = delta[o];
            gb[o] += g;
            double* gw = gW + o * d.in;
            const double* w = W + o * d.in;
            for (std::size_t i = 0; i < d.in; ++i) {
                gw[i] += g * a[i];
                if (need_prev) prev[i] += g * w[i];
            }
        }
        if (need_prev) delta.swap(prev);
    }
    if (grad_input) *grad_input = delta;
}

/// sum_all: s is the sum of eta over all n^2 lifted rows, zero rows included.
/// mean_selected: s is the mean of eta over the selected rows only; the zero
/// rows add a constant that the head's bias absorbs.
enum class pooling_kind { sum_all, mean_selected };

struct phi_architecture {
    std::size_t n = 0;   // ambient dimension
    std::size_t p = 16;  // embedding width
    std::size_t h = 32;  // hidden width of both networks
    pooling_kind pooling = pooling_kind::mean_selected;

    friend bool operator==(const phi_architecture&, const phi_architecture&) = default;
};

/// Weights of the pair embedding eta: R^2 -> R^p and of the head
/// mu: R^{p+n} -> R, both with two tanh hidden layers of width h.
struct phi_params {
    phi_architecture arch;
    mlp_layout eta;
    mlp_layout head;
    vec values;

    phi_params() = default;

    explicit phi_params(phi_architecture a) : arch(a) {
        std::size_t offset = 0;
        const std::size_t eta_w[] = {2, a.h, a.h, a.p};
        const std::size_t head_w[] = {a.p + a.n, a.h, a.h, 1};
        eta = mlp_layout::make(eta_w, offset);
        head = mlp_layout::make(head_w, offset);
        values.assign(offset, 0.0);
    }

    std::size_t size() const noexcept { return values.size(); }
    std::size_t eta_size() const noexcept { return head.layers.front().weights; }
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
inline phi_params init_phi(phi_architecture a, rng_engine& rng) {
    phi_params p(a);
    auto fill = [&](const mlp_layout& net) {
        for (const auto& d : net.layers) {
            const double r = 1.0 / std::sqrt(static_cast<double>(d.in));
            std::uniform_real_distribution<double> u(-r, r);
            for (std::size_t i = 0; i < d.in * d.out; ++i) p.values[d.weights + i] = u(rng);
            for (std::size_t i = 0; i < d.out; ++i) p.values[d.bias + i] = u(rng);
        }
    };
    fill(p.eta);
    fill(p.head);
    return p;
}

enum class loss_kind { squared, absolute };

inline double loss_value(loss_kind k, double prediction, double target) {
    const double e = prediction - target;
    return k == loss_kind::squared ? e * e : std::abs(e);
}

inline double loss_derivative(loss_kind k, double prediction, double target) {
    const double e = prediction - target;
    if (k == loss_kind::squared) return 2.0 * e;
    return e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0);
}

/// Reusable buffers for forward/backward passes of one model.
class phi_evaluator {
public:
    phi_evaluator(const phi_params& params, const selection_pair& sp) : params_(&params), sp_(&sp) {
        if (params.arch.n != sp.n()) throw dimension_error("phi_evaluator: architecture n differs from selection n");
    }

    double forward(std::span<const double> x) {
        if (x.size() != sp_->n()) throw dimension_error("forward: input length");
        const auto& P = *params_;
        const double* w = P.values.data();
        pairs_ = selected_pairs(*sp_, x);
        // a fixed order over equal multisets makes the sum bitwise invariant
        std::sort(pairs_.begin(), pairs_.end());
        const std::size_t p = P.arch.p;
        const std::size_t n = sp_->n();

        const bool sum_all = P.arch.pooling == pooling_kind::sum_all;
        row_weight_ = sum_all || pairs_.empty() ? 1.0 : 1.0 / static_cast<double>(pairs_.size());
        eta_traces_.resize(pairs_.size());
        sum_.assign(p, 0.0);
        for (std::size_t r = 0; r < pairs_.size(); ++r) {
            const double in[2] = {pairs_[r].left, pairs_[r].right};
            mlp_forward(w, P.eta, in, eta_traces_[r]);
            const vec& e = eta_traces_[r].back();
            for (std::size_t j = 0; j < p; ++j) sum_[j] += row_weight_ * e[j];
        }
        zero_count_ = sum_all ? static_cast<double>(n * n - pairs_.size()) : 0.0;
        if (zero_count_ > 0) {
            const double zero[2] = {0.0, 0.0};
            mlp_forward(w, P.eta, zero, zero_trace_);
            const vec& e0 = zero_trace_.back();
            for (std::size_t j = 0; j < p; ++j) sum_[j] += zero_count_ * e0[j];
        }

        head_in_.assign(sum_.begin(), sum_.end());
        const vec q = complement(*sp_, x);
        head_in_.insert(head_in_.end(), q.begin(), q.end());
        mlp_forward(w, P.head, head_in_, head_trace_);
        const double out = head_trace_.back()[0];
        if (!std::isfinite(out)) throw numeric_error("forward: non-finite output");
        return out;
    }

    /// Adds d(loss)/d(params) * weight to `grad`; returns the loss.
    double accumulate_gradient(std::span<const double> x, double y, loss_kind lk, vec& grad, double weight = 1.0) {
        const double out = forward(x);
        const double* w = params_->values.data();
        const std::size_t p = params_->arch.p;
        const double up = weight * loss_derivative(lk, out, y);
        mlp_backward(w, params_->head, head_trace_, std::span<const double>(&up, 1), grad.data(), &head_grad_in_,
                     delta_, prev_);
        scaled_.resize(p);
        for (std::size_t j = 0; j < p; ++j) scaled_[j] = row_weight_ * head_grad_in_[j];
        for (auto& tr : eta_traces_) mlp_backward(w, params_->eta, tr, scaled_, grad.data(), nullptr, delta_, prev_);
        if (zero_count_ > 0) {
            for (std::size_t j = 0; j < p; ++j) scaled_[j] = zero_count_ * head_grad_in_[j];
            mlp_backward(w, params_->eta, zero_trace_, scaled_, grad.data(), nullptr, delta_, prev_);
        }
        return loss_value(lk, out, y);
    }

private:
    const phi_params* params_;
    const selection_pair* sp_;
    std::vector<row_pair> pairs_;
    std::vector<mlp_trace> eta_traces_;
    mlp_trace zero_trace_, head_trace_;
    vec sum_, head_in_, head_grad_in_, delta_, prev_, scaled_;
    double zero_count_ = 0.0;
    double row_weight_ = 1.0;
};

inline double forward(const phi_params& params, const selection_pair& sp, std::span<const double> x) {
    phi_evaluator ev(params, sp);
    return ev.forward(x);
}

/// Gradient of the single-example loss with respect to all parameters.
inline vec backward(const phi_params& params, const selection_pair& sp, std::span<const double> x, double y,
                    loss_kind lk) {
    vec grad(params.size(), 0.0);
    phi_evaluator ev(params, sp);
    const double loss = ev.accumulate_gradient(x, y, lk, grad);
    for (double g : grad)
        if (!std::isfinite(g)) throw numeric_error("backward: non-finite gradient");
    (void)loss;
    return grad;
}

enum class optimizer_kind { sgd, adam };

struct train_config {
    std::size_t epochs = 400;
    std::size_t batch_size = 16;
    double lr_initial = 1e-2;
    double lr_decay = 0.995;  // per epoch
    std::uint64_t seed = 0;
    loss_kind loss = loss_kind::squared;
    optimizer_kind optimizer = optimizer_kind::sgd;
    phi_architecture arch{};  // n is taken from the data

    void validate() const {
        if (epochs < 1) throw invalid_descriptor("train_config: epochs must be >= 1");
        if (batch_size < 1) throw invalid_descriptor("train_config: batch_size must be >= 1");
        if (!(lr_initial >= 0.0)) throw invalid_descriptor("train_config: lr must be >= 0");
        if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw invalid_descriptor("train_config: decay must be in (0, 1]");
    }
};

struct train_result {
    phi_params params;
    double final_loss = 0.0;
};

enum class metric { mae, mse };

inline double evaluate(const phi_params& params, const selection_pair& sp, const dataset& data, metric m) {
    if (data.empty()) return 0.0;
    phi_evaluator ev(params, sp);
    double total = 0.0;
    for (std::size_t u = 0; u < data.size(); ++u) {
        const double e = ev.forward(data.inputs[u]) - data.targets[u];
        total += m == metric::mae ? std::abs(e) : e * e;
    }
    return total / static_cast<double>(data.size());
}

inline double mean_loss(const phi_params& params, const selection_pair& sp, const dataset& data, loss_kind lk) {
    return evaluate(params, sp, data, lk == loss_kind::squared ? metric::mse : metric::mae);
}

/// Mini-batch training of phi for a fixed selection. Deterministic in
/// cfg.seed: stream 0 initializes weights, stream 1 shuffles. Pass `warm` to
/// continue from existing weights instead of a fresh initialization.
inline train_result train_sgd(const dataset& data, const selection_pair& sp, const train_config& cfg,
                              const phi_params* warm = nullptr) {
    cfg.validate();
    if (data.empty()) throw empty_dataset("train_sgd: empty dataset");
    phi_architecture arch = cfg.arch;
    arch.n = data.n;

    auto init_rng = make_stream(cfg.seed, 0);
    auto shuffle_rng = make_stream(cfg.seed, 1);
    phi_params params = warm ? *warm : init_phi(arch, init_rng);
    if (params.arch != arch) throw dimension_error("train_sgd: warm-start architecture mismatch");

    phi_evaluator ev(params, sp);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    vec grad(params.size());
    vec m1, m2;
    if (cfg.optimizer == optimizer_kind::adam) {
        m1.assign(params.size(), 0.0);
        m2.assign(params.size(), 0.0);
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double b1t = 1.0, b2t = 1.0;

    double lr = cfg.lr_initial;
    double last_finite = mean_loss(params, sp, data, cfg.loss);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const double w = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            try {
                for (std::size_t b = start; b < stop; ++b) {
                    const std::size_t u = order[b];
                    batch_loss += w * ev.accumulate_gradient(data.inputs[u], data.targets[u], cfg.loss, grad, w);
                }
            } catch (const numeric_error&) {
                throw training_diverged("train_sgd: forward pass became non-finite", last_finite);
            }
            if (!std::isfinite(batch_loss)) throw training_diverged("train_sgd: loss became non-finite", last_finite);
            last_finite = batch_loss;
            if (cfg.optimizer == optimizer_kind::sgd) {
                for (std::size_t i = 0; i < grad.size(); ++i) params.values[i] -= lr * grad[i];
            } else {
                b1t *= beta1;
                b2t *= beta2;
                for (std::size_t i = 0; i < grad.size(); ++i) {
                    m1[i] = beta1 * m1[i] + (1 - beta1) * grad[i];
                    m2[i] = beta2 * m2[i] + (1 - beta2) * grad[i] * grad[i];
                    const double mh = m1[i] / (1 - b1t), vh = m2[i] / (1 - b2t);
                    params.values[i] -= lr * mh / (std::sqrt(vh) + adam_eps);
                }
            }
        }
        lr *= cfg.lr_decay;
    }
    double final_loss;
    try {
        final_loss = mean_loss(params, sp, data, cfg.loss);
    } catch (const numeric_error&) {
        throw training_diverged("train_sgd: final evaluation non-finite", last_finite);
    }
    if (!std::isfinite(final_loss)) throw training_diverged("train_sgd: final loss non-finite", last_finite);
    return {std::move(params), final_loss};
}

}  // namespace symforge
