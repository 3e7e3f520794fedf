#pragma once

// Gradient-only baseline: M1 becomes a free real n x n matrix and M2 a free
// gate on each of the n^2 lifted rows, trained jointly with phi.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "invariant_net.hpp"

namespace symforge {

struct relaxed_model {
    phi_params phi;
    vec m1;    // n x n, row-major
    vec gate;  // n^2 diagonal of M2

    std::size_t n() const noexcept { return phi.arch.n; }
};

inline relaxed_model init_relaxed(phi_architecture arch, rng_engine& rng) {
    relaxed_model m{init_phi(arch, rng), vec(arch.n * arch.n), vec(arch.n * arch.n)};
    const double r = 1.0 / std::sqrt(static_cast<double>(arch.n));
    std::uniform_real_distribution<double> u(-r, r);
    for (auto& v : m.m1) v = u(rng);
    std::uniform_real_distribution<double> g(0.0, 1.0);
    for (auto& v : m.gate) v = g(rng);
    return m;
}

class relaxed_evaluator {
public:
    explicit relaxed_evaluator(const relaxed_model& m) : m_(&m) {}

    double forward(std::span<const double> x) {
        const auto& M = *m_;
        const std::size_t n = M.n(), p = M.phi.arch.p;
        if (x.size() != n) throw dimension_error("relaxed forward: input length");
        const double* w = M.phi.values.data();
        z_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < n; ++c) z_[i] += M.m1[i * n + c] * x[c];
        traces_.resize(n * n);
        sum_.assign(p, 0.0);
        const double scale = 1.0 / static_cast<double>(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t r = i * n + j;
                const double in[2] = {M.gate[r] * z_[i], M.gate[r] * z_[j]};
                mlp_forward(w, M.phi.eta, in, traces_[r]);
                const vec& e = traces_[r].back();
                for (std::size_t q = 0; q < p; ++q) sum_[q] += scale * e[q];
            }
        head_in_.assign(sum_.begin(), sum_.end());
        for (std::size_t i = 0; i < n; ++i) head_in_.push_back(x[i] - z_[i]);
        mlp_forward(w, M.phi.head, head_in_, head_trace_);
        const double out = head_trace_.back()[0];
        if (!std::isfinite(out)) throw numeric_error("relaxed forward: non-finite output");
        return out;
    }

    /// Adds weighted loss gradients to the three gradient blocks; returns the loss.
    double accumulate_gradient(std::span<const double> x, double y, loss_kind lk, vec& g_phi, vec& g_m1,
                               vec& g_gate, double weight = 1.0) {
        const double out = forward(x);
        const auto& M = *m_;
        const std::size_t n = M.n(), p = M.phi.arch.p;
        const double* w = M.phi.values.data();
        const double up = weight * loss_derivative(lk, out, y);
        mlp_backward(w, M.phi.head, head_trace_, std::span<const double>(&up, 1), g_phi.data(), &head_grad_, delta_,
                     prev_);
        dz_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) dz_[i] -= head_grad_[p + i];
        const double scale = 1.0 / static_cast<double>(n * n);
        ds_.resize(p);
        for (std::size_t q = 0; q < p; ++q) ds_[q] = scale * head_grad_[q];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t r = i * n + j;
                mlp_backward(w, M.phi.eta, traces_[r], ds_, g_phi.data(), &pair_grad_, delta_, prev_);
                g_gate[r] += pair_grad_[0] * z_[i] + pair_grad_[1] * z_[j];
                dz_[i] += pair_grad_[0] * M.gate[r];
                dz_[j] += pair_grad_[1] * M.gate[r];
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < n; ++c) g_m1[i * n + c] += dz_[i] * x[c];
        return loss_value(lk, out, y);
    }

private:
    const relaxed_model* m_;
    std::vector<mlp_trace> traces_;
    mlp_trace head_trace_;
    vec z_, sum_, head_in_, head_grad_, pair_grad_, dz_, ds_, delta_, prev_;
};

inline double evaluate_relaxed(const relaxed_model& m, const dataset& data, metric mt) {
    if (data.empty()) return 0.0;
    relaxed_evaluator ev(m);
    double total = 0.0;
    for (std::size_t u = 0; u < data.size(); ++u) {
        const double e = ev.forward(data.inputs[u]) - data.targets[u];
        total += mt == metric::mae ? std::abs(e) : e * e;
    }
    return total / static_cast<double>(data.size());
}

struct relaxed_result {
    relaxed_model model;
    double final_loss = 0.0;
};

/// Joint mini-batch training of phi, M1 and the M2 gates with the optimizer,
/// schedule and seeds of train_config.
inline relaxed_result train_relaxed(const dataset& data, const train_config& cfg) {
    cfg.validate();
    if (data.empty()) throw empty_dataset("train_relaxed: empty dataset");
    phi_architecture arch = cfg.arch;
    arch.n = data.n;
    auto init_rng = make_stream(cfg.seed, 0);
    auto shuffle_rng = make_stream(cfg.seed, 1);
    relaxed_model m = init_relaxed(arch, init_rng);
    relaxed_evaluator ev(m);

    std::vector<vec*> blocks{&m.phi.values, &m.m1, &m.gate};
    std::vector<vec> grads, mom1, mom2;
    for (auto* b : blocks) {
        grads.emplace_back(b->size());
        mom1.emplace_back(b->size(), 0.0);
        mom2.emplace_back(b->size(), 0.0);
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double b1t = 1.0, b2t = 1.0, lr = cfg.lr_initial;
    double last_finite = evaluate_relaxed(m, data, cfg.loss == loss_kind::squared ? metric::mse : metric::mae);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const double w = 1.0 / static_cast<double>(stop - start);
            for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
            double batch_loss = 0.0;
            try {
                for (std::size_t b = start; b < stop; ++b) {
                    const std::size_t u = order[b];
                    batch_loss += w * ev.accumulate_gradient(data.inputs[u], data.targets[u], cfg.loss, grads[0],
                                                             grads[1], grads[2], w);
                }
            } catch (const numeric_error&) {
                throw training_diverged("train_relaxed: forward pass became non-finite", last_finite);
            }
            if (!std::isfinite(batch_loss)) throw training_diverged("train_relaxed: loss became non-finite", last_finite);
            last_finite = batch_loss;
            b1t *= beta1;
            b2t *= beta2;
            for (std::size_t k = 0; k < blocks.size(); ++k) {
                auto& v = *blocks[k];
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const double g = grads[k][i];
                    if (cfg.optimizer == optimizer_kind::sgd) {
                        v[i] -= lr * g;
                        continue;
                    }
                    mom1[k][i] = beta1 * mom1[k][i] + (1 - beta1) * g;
                    mom2[k][i] = beta2 * mom2[k][i] + (1 - beta2) * g * g;
                    v[i] -= lr * (mom1[k][i] / (1 - b1t)) / (std::sqrt(mom2[k][i] / (1 - b2t)) + adam_eps);
                }
            }
        }
        lr *= cfg.lr_decay;
    }
    const double final_loss = evaluate_relaxed(m, data, cfg.loss == loss_kind::squared ? metric::mse : metric::mae);
    if (!std::isfinite(final_loss)) throw training_diverged("train_relaxed: final loss non-finite", last_finite);
    return {std::move(m), final_loss};
}

}  // namespace symforge
