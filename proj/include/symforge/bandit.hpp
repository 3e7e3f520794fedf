#pragma once

// Linear Thompson sampling over selection arms, and a synthetic linear
// bandit used to check the misidentification trend.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "invariant_net.hpp"
#include "selection.hpp"

namespace symforge {

/// Gaussian posterior N(mu_hat, nu^2 B^-1) with B = I + sum a a^T and
/// mu_hat = B^-1 f, f = sum a gamma.
class bandit_posterior {
public:
    bandit_posterior() = default;
    bandit_posterior(std::size_t d, double nu)
        : B_(Eigen::MatrixXd::Identity(d, d)), f_(Eigen::VectorXd::Zero(d)), mu_hat_(Eigen::VectorXd::Zero(d)),
          nu_(nu) {
        if (d == 0) throw dimension_error("bandit_posterior: d must be >= 1");
        if (!(nu >= 0.0) || !std::isfinite(nu)) throw numeric_error("bandit_posterior: nu must be finite and >= 0");
        factor();
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(f_.size()); }
    double nu() const noexcept { return nu_; }
    const Eigen::MatrixXd& B() const noexcept { return B_; }
    const Eigen::VectorXd& f() const noexcept { return f_; }
    const Eigen::VectorXd& mu_hat() const noexcept { return mu_hat_; }
    const Eigen::LLT<Eigen::MatrixXd>& cholesky() const noexcept { return llt_; }

    void update(std::span<const double> a, double gamma) {
        if (a.size() != dim()) throw dimension_error("posterior_update: feature length");
        if (!std::isfinite(gamma)) throw numeric_error("posterior_update: non-finite reward");
        Eigen::Map<const Eigen::VectorXd> av(a.data(), static_cast<Eigen::Index>(a.size()));
        B_.noalias() += av * av.transpose();
        f_ += gamma * av;
        factor();
    }

private:
    void factor() {
        llt_.compute(B_);
        if (llt_.info() != Eigen::Success) throw numeric_error("bandit_posterior: B is not positive definite");
        mu_hat_ = llt_.solve(f_);
    }

    Eigen::MatrixXd B_;
    Eigen::VectorXd f_;
    Eigen::VectorXd mu_hat_;
    double nu_ = 0.5;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline vec to_vec(std::span<const std::uint8_t> bits) { return vec(bits.begin(), bits.end()); }

inline bandit_posterior posterior_update(bandit_posterior post, std::span<const double> a, double gamma) {
    post.update(a, gamma);
    return post;
}

/// mu = mu_hat + nu L^-T z with L L^T = B, z standard normal.
inline Eigen::VectorXd posterior_sample(const bandit_posterior& post, rng_engine& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(post.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    if (post.nu() == 0.0) return post.mu_hat();
    Eigen::VectorXd w = post.cholesky().matrixU().solve(z);
    return post.mu_hat() + post.nu() * w;
}

// ---------------------------------------------------------------------------
// Discovery

enum class reward_source { train, validation };

/// clamped:   gamma = -min(L, cap) / cap
/// log_ratio: gamma = log10(L0 / L), L0 the loss of the constant
///            train-mean predictor on the same split; clipped to [-cap, cap]
enum class reward_kind { clamped, log_ratio };

/// posterior_mean: rank by a^T mu_hat.
/// empirical_play: rank by how often each arm was played, then by a^T mu_hat.
enum class recommendation { posterior_mean, empirical_play };

struct discovery_config {
    std::size_t T = 40;
    double nu = 0.5;
    double loss_cap = 1.0;
    reward_source source = reward_source::train;
    reward_kind reward = reward_kind::clamped;
    bool center_rewards = false;  // subtract the mean of earlier raw rewards
    bool cold_start = false;
    std::size_t top_k = 3;
    recommendation recommend = recommendation::posterior_mean;
    train_config train;
    std::uint64_t seed = 0;

    void validate() const {
        if (T < 1) throw invalid_descriptor("discovery: T must be >= 1");
        if (!(nu >= 0.0)) throw invalid_descriptor("discovery: nu must be >= 0");
        if (!(loss_cap > 0.0)) throw invalid_descriptor("discovery: loss_cap must be > 0");
        train.validate();
    }
};

struct pull_record {
    std::size_t t = 0;
    std::size_t arm = 0;  // index into the arm list
    double reward = 0.0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    bool diverged = false;
};

struct ranked_arm {
    std::size_t arm = 0;
    double score = 0.0;
    std::size_t pulls = 0;
    double validation_mae = 0.0;  // raw target units
};

struct discovery_result {
    std::vector<ranked_arm> top;  // best first
    std::vector<pull_record> log;
    std::vector<std::size_t> ranking;  // every arm, best first
    vec scores;                        // a^T mu_hat per arm
    std::map<std::size_t, phi_params> trained;
    bandit_posterior posterior;
};

/// gamma = -min(L, cap) / cap.
inline double loss_reward(double loss, double cap) { return -std::min(loss, cap) / cap; }

inline double log_ratio_reward(double loss, double baseline, double cap) {
    const double r = std::log10(baseline / std::max(loss, 1e-300));
    return std::clamp(r, -cap, cap);
}

/// Loss of predicting the mean training target everywhere.
inline double constant_predictor_loss(const dataset& train, const dataset& eval, loss_kind lk) {
    double mean = 0.0;
    for (double y : train.targets) mean += y;
    mean /= static_cast<double>(train.size());
    double total = 0.0;
    for (double y : eval.targets) total += loss_value(lk, mean, y);
    return total / static_cast<double>(eval.size());
}

/// Arms sorted by score descending; equal scores fall back to the
/// lexicographic order of the feature bits.
inline std::vector<std::size_t> rank_arms(std::span<const arm_feature> arms, std::span<const double> scores) {
    std::vector<std::size_t> idx(arms.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return arms[a].bits < arms[b].bits;
    });
    return idx;
}

namespace detail {

inline std::uint64_t pull_seed(std::uint64_t seed, std::size_t t) {
    return seed * 0x9e3779b97f4a7c15ull + 0x51ed + t;
}

}  // namespace detail

/// Algorithm: sample mu, play argmax_a mu^T a, fit phi for that arm, reward
/// minus the clamped loss, update the posterior. Revisited arms continue from
/// their cached weights unless cold_start is set. Divergent training is
/// scored with the floor reward. Finally ranks all arms by a^T mu_hat, or by
/// play count, and reports validation MAE for the top arms.
inline discovery_result run_discovery(std::span<const arm_feature> arms, const dataset& train,
                                      const dataset& validation, const discovery_config& cfg,
                                      std::ostream* progress = nullptr) {
    cfg.validate();
    if (arms.empty()) throw invalid_descriptor("run_discovery: empty arm set");
    if (train.empty()) throw empty_dataset("run_discovery: empty training set");
    const bool use_val = cfg.source == reward_source::validation && !validation.empty();
    const std::size_t d = arms.front().dim();
    const double baseline = constant_predictor_loss(train, use_val ? validation : train, cfg.train.loss);
    auto reward_of = [&](double loss) {
        return cfg.reward == reward_kind::clamped ? loss_reward(loss, cfg.loss_cap)
                                                  : log_ratio_reward(loss, baseline, cfg.loss_cap);
    };

    discovery_result res;
    res.posterior = bandit_posterior(d, cfg.nu);
    auto rng = make_stream(cfg.seed, 7);
    std::vector<vec> features;
    features.reserve(arms.size());
    for (const auto& a : arms) features.push_back(to_vec(a.bits));

    double raw_sum = 0.0;
    for (std::size_t t = 1; t <= cfg.T; ++t) {
        const Eigen::VectorXd mu = posterior_sample(res.posterior, rng);
        const auto& chosen = argmax_arm(std::span<const double>(mu.data(), d), arms);
        const std::size_t ai = static_cast<std::size_t>(&chosen - arms.data());
        const auto sp = make_selection(chosen.descriptor);

        train_config tc = cfg.train;
        tc.seed = detail::pull_seed(cfg.seed, t);
        pull_record rec{t, ai, 0.0, 0.0, 0.0, false};
        const phi_params* warm = nullptr;
        if (!cfg.cold_start) {
            auto it = res.trained.find(ai);
            if (it != res.trained.end()) warm = &it->second;
        }
        try {
            auto fit = train_sgd(train, sp, tc, warm);
            rec.train_loss = fit.final_loss;
            rec.validation_loss = use_val ? mean_loss(fit.params, sp, validation, tc.loss) : fit.final_loss;
            res.trained[ai] = std::move(fit.params);
            rec.reward = reward_of(use_val ? rec.validation_loss : rec.train_loss);
        } catch (const training_diverged& e) {
            rec.diverged = true;
            rec.train_loss = e.last_finite_loss();
            rec.validation_loss = rec.train_loss;
            rec.reward = cfg.reward == reward_kind::clamped ? -1.0 : -cfg.loss_cap;
        }
        const double raw = rec.reward;
        if (cfg.center_rewards) rec.reward = t == 1 ? 0.0 : raw - raw_sum / static_cast<double>(t - 1);
        raw_sum += raw;
        res.posterior.update(features[ai], rec.reward);
        res.log.push_back(rec);
        if (progress)
            *progress << "t=" << t << " arm=" << describe(chosen.descriptor) << " reward=" << rec.reward << '\n';
    }

    const auto& mh = res.posterior.mu_hat();
    res.scores.resize(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) res.scores[i] = score(std::span<const double>(mh.data(), d), arms[i]);
    res.ranking = rank_arms(arms, res.scores);

    std::map<std::size_t, std::size_t> pulls;
    for (const auto& r : res.log) ++pulls[r.arm];
    if (cfg.recommend == recommendation::empirical_play) {
        auto count = [&](std::size_t a) { return pulls.count(a) ? pulls[a] : std::size_t{0}; };
        std::stable_sort(res.ranking.begin(), res.ranking.end(),
                         [&](std::size_t a, std::size_t b) { return count(a) > count(b); });
    }
    const dataset& eval_set = validation.empty() ? train : validation;
    for (std::size_t r = 0; r < std::min(cfg.top_k, arms.size()); ++r) {
        const std::size_t ai = res.ranking[r];
        const auto sp = make_selection(arms[ai].descriptor);
        ranked_arm ra{ai, res.scores[ai], pulls.count(ai) ? pulls[ai] : 0, 0.0};
        auto it = res.trained.find(ai);
        if (it == res.trained.end()) {
            train_config tc = cfg.train;
            tc.seed = detail::pull_seed(cfg.seed, cfg.T + 1 + r);
            try {
                it = res.trained.emplace(ai, train_sgd(train, sp, tc).params).first;
            } catch (const training_diverged&) {
                ra.validation_mae = std::numeric_limits<double>::infinity();
                res.top.push_back(ra);
                continue;
            }
        }
        ra.validation_mae = evaluate(it->second, sp, eval_set, metric::mae) * eval_set.scaling.scale;
        res.top.push_back(ra);
    }
    return res;
}

inline void write_pull_log_csv(std::ostream& os, std::span<const arm_feature> arms,
                               std::span<const pull_record> log) {
    os << "t,arm,reward,train_loss,validation_loss\n";
    char buf[128];
    for (const auto& r : log) {
        os << r.t << ',';
        for (auto b : arms[r.arm].bits) os << int(b);
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", r.reward, r.train_loss, r.validation_loss);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Synthetic linear bandit

struct linear_instance {
    vec mu_star;
    std::vector<vec> arms;
    double noise_sigma = 0.1;

    std::size_t dim() const noexcept { return mu_star.size(); }

    double mean_reward(std::size_t a) const {
        double s = 0.0;
        for (std::size_t i = 0; i < mu_star.size(); ++i) s += arms[a][i] * mu_star[i];
        return s;
    }

    std::size_t best_arm() const {
        std::size_t best = 0;
        for (std::size_t a = 1; a < arms.size(); ++a)
            if (mean_reward(a) > mean_reward(best)) best = a;
        return best;
    }

    /// Gap between the best and the second-best mean reward.
    double delta_min() const {
        const double top = mean_reward(best_arm());
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < arms.size(); ++a) {
            const double g = top - mean_reward(a);
            if (g > 0 && g < gap) gap = g;
        }
        return gap;
    }

    void validate() const {
        if (arms.empty()) throw invalid_descriptor("linear_instance: no arms");
        for (const auto& a : arms)
            if (a.size() != mu_star.size()) throw dimension_error("linear_instance: arm length");
        const double top = mean_reward(best_arm());
        int ties = 0;
        for (std::size_t a = 0; a < arms.size(); ++a) ties += mean_reward(a) == top;
        if (ties != 1) throw invalid_descriptor("linear_instance: best arm is not unique");
    }
};

inline std::size_t argmax_linear(const Eigen::VectorXd& mu, const std::vector<vec>& arms) {
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < arms.size(); ++a) {
        double v = 0.0;
        for (std::size_t i = 0; i < arms[a].size(); ++i) v += arms[a][i] * mu[static_cast<Eigen::Index>(i)];
        if (v > best_v) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

/// One LinTS run of `T` rounds with Gaussian rewards; returns the arm played
/// in each round.
inline std::vector<std::size_t> linear_trajectory(const linear_instance& inst, std::size_t T, double nu,
                                                  rng_engine& rng) {
    bandit_posterior post(inst.dim(), nu);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::size_t> played;
    played.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        const auto mu = posterior_sample(post, rng);
        const std::size_t a = argmax_linear(mu, inst.arms);
        const double r = inst.mean_reward(a) + inst.noise_sigma * noise(rng);
        post.update(inst.arms[a], r);
        played.push_back(a);
    }
    return played;
}

struct misid_point {
    std::size_t T = 0;
    std::size_t trials = 0;
    std::size_t misses = 0;           // draws of A_T that missed a*
    double rate = 0.0;                // misses / trials
    double expected_rate = 0.0;       // mean over trials of 1 - N_T(a*)/T
    double ci_low = 0.0, ci_high = 0.0;  // 95% Wilson interval for rate
    double mean_regret = 0.0;         // mean cumulative regret up to T
};

/// 95% Wilson score interval.
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n) {
    if (n == 0) return {0.0, 1.0};
    constexpr double z = 1.959963984540054;
    const double p = static_cast<double>(successes) / n;
    const double denom = 1 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// For every trial one trajectory up to the largest horizon is run; each
/// horizon T reads its prefix and draws A_T from the empirical distribution
/// of the first T plays.
inline std::vector<misid_point> simulate_linear(const linear_instance& inst, std::span<const std::size_t> horizons,
                                                double nu, std::size_t trials, std::uint64_t seed) {
    inst.validate();
    if (trials == 0) throw empty_dataset("simulate_linear: trials must be >= 1");
    if (horizons.empty()) throw invalid_descriptor("simulate_linear: no horizons");
    const std::size_t t_max = *std::max_element(horizons.begin(), horizons.end());
    const std::size_t best = inst.best_arm();
    const double top = inst.mean_reward(best);

    std::vector<misid_point> out(horizons.size());
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        if (horizons[h] < 1) throw invalid_descriptor("simulate_linear: horizon must be >= 1");
        out[h].T = horizons[h];
        out[h].trials = trials;
    }
    for (std::size_t trial = 0; trial < trials; ++trial) {
        auto rng = make_stream(seed, 3 * trial);
        auto draw_rng = make_stream(seed, 3 * trial + 1);
        const auto played = linear_trajectory(inst, t_max, nu, rng);
        for (auto& pt : out) {
            std::size_t hits = 0;
            double regret = 0.0;
            for (std::size_t t = 0; t < pt.T; ++t) {
                hits += played[t] == best;
                regret += top - inst.mean_reward(played[t]);
            }
            std::uniform_int_distribution<std::size_t> pick(0, pt.T - 1);
            pt.misses += played[pick(draw_rng)] != best;
            pt.expected_rate += 1.0 - static_cast<double>(hits) / pt.T;
            pt.mean_regret += regret;
        }
    }
    for (auto& pt : out) {
        pt.rate = static_cast<double>(pt.misses) / trials;
        pt.expected_rate /= trials;
        pt.mean_regret /= trials;
        std::tie(pt.ci_low, pt.ci_high) = wilson_interval(pt.misses, trials);
    }
    return out;
}

inline void write_misid_csv(std::ostream& os, std::span<const misid_point> pts) {
    os << "T,trials,misses,rate,ci_low,ci_high,expected_rate,mean_regret\n";
    char buf[256];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.T, p.trials, p.misses, p.rate,
                      p.ci_low, p.ci_high, p.expected_rate, p.mean_regret);
        os << buf;
    }
}

}  // namespace symforge
