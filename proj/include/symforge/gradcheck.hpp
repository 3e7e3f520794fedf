#pragma once

// Central finite differences against the hand-written backward passes.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "group.hpp"
#include "invariant_net.hpp"
#include "relaxed.hpp"
#include "selection.hpp"

namespace symforge {

struct gradient_check_report {
    std::string label;
    std::size_t checks = 0;
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    double tolerance = 1e-4;

    bool passed() const { return max_relative_error <= tolerance; }
};

/// |a - f| / max(|a|, |f|, floor). The floor keeps coordinates whose true
/// gradient is zero from reporting roundoff as a huge ratio.
inline double relative_gap(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace detail {

inline std::vector<std::size_t> pick_coordinates(std::size_t size, std::size_t count, rng_engine& rng) {
    std::vector<std::size_t> all(size);
    for (std::size_t i = 0; i < size; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::min(count, size));
    std::sort(all.begin(), all.end());
    return all;
}

inline void record(gradient_check_report& rep, double analytic, double numeric) {
    ++rep.checks;
    rep.max_relative_error = std::max(rep.max_relative_error, relative_gap(analytic, numeric));
    rep.max_absolute_error = std::max(rep.max_absolute_error, std::abs(analytic - numeric));
}

}  // namespace detail

/// Squared-loss gradient of phi for selection `G`: `coords` random parameter
/// coordinates (one draw shared by all inputs) times `inputs` random inputs.
inline gradient_check_report check_phi_gradients(const group_descriptor& G, pooling_kind pooling,
                                                 std::size_t coords, std::size_t inputs, std::uint64_t seed,
                                                 double step = 1e-5) {
    auto rng = make_stream(seed, 0);
    phi_architecture arch;
    arch.n = G.n();
    arch.p = 8;
    arch.h = 12;
    arch.pooling = pooling;
    phi_params params = init_phi(arch, rng);
    const auto sp = make_selection(G);
    const auto picked = detail::pick_coordinates(params.size(), coords, rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    gradient_check_report rep;
    rep.label = "phi " + describe(G) + (pooling == pooling_kind::sum_all ? " sum_all" : " mean_selected");
    for (std::size_t s = 0; s < inputs; ++s) {
        vec x(G.n());
        for (auto& v : x) v = u(rng);
        const double y = u(rng);
        const vec g = backward(params, sp, x, y, loss_kind::squared);
        for (std::size_t c : picked) {
            phi_params probe = params;
            probe.values[c] = params.values[c] + step;
            const double up = loss_value(loss_kind::squared, forward(probe, sp, x), y);
            probe.values[c] = params.values[c] - step;
            const double down = loss_value(loss_kind::squared, forward(probe, sp, x), y);
            detail::record(rep, g[c], (up - down) / (2 * step));
        }
    }
    return rep;
}

/// Same check for the relaxed model, with coordinates drawn from phi, M1 and
/// the M2 gates together.
inline gradient_check_report check_relaxed_gradients(std::size_t n, std::size_t coords, std::size_t inputs,
                                                     std::uint64_t seed, double step = 1e-5) {
    auto rng = make_stream(seed, 0);
    phi_architecture arch;
    arch.n = n;
    arch.p = 8;
    arch.h = 12;
    relaxed_model model = init_relaxed(arch, rng);
    const std::size_t sizes[3] = {model.phi.size(), model.m1.size(), model.gate.size()};
    const auto picked = detail::pick_coordinates(sizes[0] + sizes[1] + sizes[2], coords, rng);
    auto slot = [&](relaxed_model& m, std::size_t c) -> double& {
        if (c < sizes[0]) return m.phi.values[c];
        if (c < sizes[0] + sizes[1]) return m.m1[c - sizes[0]];
        return m.gate[c - sizes[0] - sizes[1]];
    };
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    gradient_check_report rep;
    rep.label = "relaxed n=" + std::to_string(n);
    for (std::size_t s = 0; s < inputs; ++s) {
        vec x(n);
        for (auto& v : x) v = u(rng);
        const double y = u(rng);
        vec g_phi(sizes[0], 0.0), g_m1(sizes[1], 0.0), g_gate(sizes[2], 0.0);
        relaxed_evaluator(model).accumulate_gradient(x, y, loss_kind::squared, g_phi, g_m1, g_gate);
        for (std::size_t c : picked) {
            const double analytic =
                c < sizes[0] ? g_phi[c] : c < sizes[0] + sizes[1] ? g_m1[c - sizes[0]] : g_gate[c - sizes[0] - sizes[1]];
            relaxed_model probe = model;
            slot(probe, c) = slot(model, c) + step;
            const double up = loss_value(loss_kind::squared, relaxed_evaluator(probe).forward(x), y);
            slot(probe, c) = slot(model, c) - step;
            const double down = loss_value(loss_kind::squared, relaxed_evaluator(probe).forward(x), y);
            detail::record(rep, analytic, (up - down) / (2 * step));
        }
    }
    return rep;
}

}  // namespace symforge
