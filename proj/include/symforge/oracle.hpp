#pragma once

// Brute-force ground truth: invariance checks, group averaging, the
// orbit-mapping argument behind the lifting maps, product groups and the
// orbit-counting obstruction for linear maps.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "group.hpp"
#include "rho.hpp"
#include "selection.hpp"

namespace symforge {

using scalar_fn = std::function<double(const vec&)>;

struct invariance_report {
    double max_violation = 0.0;
    vec worst_x;
    permutation worst_g;
    std::size_t checks = 0;
    double tolerance = 0.0;

    bool passed() const { return max_violation <= tolerance; }
};

inline invariance_report check_invariance(const scalar_fn& fn, const group_descriptor& G,
                                          std::span<const vec> samples, double tol) {
    const auto group = elements(G);
    invariance_report r;
    r.tolerance = tol;
    r.worst_g = permutation(G.n());
    for (const auto& x : samples) {
        if (x.size() != G.n()) throw dimension_error("check_invariance: sample length");
        const double fx = fn(x);
        for (const auto& g : group) {
            const double v = std::abs(fn(act(g, x)) - fx);
            ++r.checks;
            if (v > r.max_violation || std::isnan(v)) {
                r.max_violation = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
                r.worst_x = x;
                r.worst_g = g;
            }
        }
    }
    return r;
}

/// `count` points uniform on [0,1]^n; with `distinct` set, points with a
/// repeated coordinate are redrawn.
inline std::vector<vec> uniform_samples(std::size_t n, std::size_t count, rng_engine& rng, bool distinct = true) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<vec> out;
    out.reserve(count);
    while (out.size() < count) {
        vec x(n);
        for (auto& v : x) v = u(rng);
        if (distinct) {
            vec s = x;
            std::sort(s.begin(), s.end());
            if (std::adjacent_find(s.begin(), s.end()) != s.end()) continue;
        }
        out.push_back(std::move(x));
    }
    return out;
}

/// x -> mean over g in G of fn(g.x), summed in sorted order so that the
/// result is bitwise invariant.
inline scalar_fn symmetrize(scalar_fn fn, const group_descriptor& G) {
    auto group = std::make_shared<const std::vector<permutation>>(elements(G));
    return [fn = std::move(fn), group](const vec& x) {
        vec vals;
        vals.reserve(group->size());
        for (const auto& g : *group) vals.push_back(fn(act(g, x)));
        std::sort(vals.begin(), vals.end());
        double s = 0.0;
        for (double v : vals) s += v;
        return s / static_cast<double>(vals.size());
    };
}

// ---------------------------------------------------------------------------
// Row-permutation search

/// Row permutations g with g.rows = lift(t, y) for some y, found by a
/// depth-first search that fills one output row at a time and prunes as soon
/// as two rows disagree about a coordinate. Equal rows are interchangeable,
/// so the search runs over distinct row values and each arrangement stands
/// for prod(multiplicity!) permutations. Coordinates never mentioned by the
/// template stay NaN in the preimages.
struct image_search_result {
    std::uint64_t permutation_count = 0;
    std::vector<vec> preimages;                  // one per distinct arrangement
    std::vector<std::vector<int>> permutations;  // g as images g(r); only when all rows are distinct
};

inline image_search_result search_row_permutations(const rho_template& t, std::size_t n,
                                                   std::span<const row_pair> rows,
                                                   std::size_t limit = 1'000'000) {
    if (rows.size() != t.size()) throw dimension_error("search_row_permutations: row count");
    const std::size_t R = rows.size();
    std::vector<row_pair> values(rows.begin(), rows.end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<int> remaining(values.size(), 0);
    std::vector<int> source(values.size(), -1);
    for (std::size_t r = 0; r < R; ++r) {
        const auto v = static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), rows[r]) - values.begin());
        ++remaining[v];
        source[v] = static_cast<int>(r);
    }
    std::uint64_t per_arrangement = 1;
    for (int m : remaining) per_arrangement *= factorial(static_cast<std::size_t>(m));
    const bool distinct = values.size() == R;

    image_search_result res;
    vec y(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<int> owners(n, 0);  // how many placed rows pin each coordinate
    std::vector<int> perm(R, -1);

    auto bind = [&](int idx, double v) {
        if (owners[idx] > 0 && y[idx] != v) return false;
        if (owners[idx]++ == 0) y[idx] = v;
        return true;
    };
    auto unbind = [&](int idx) {
        if (--owners[idx] == 0) y[idx] = std::numeric_limits<double>::quiet_NaN();
    };

    std::function<void(std::size_t)> dfs = [&](std::size_t p) {
        if (p == R) {
            if (res.preimages.size() >= limit) throw enumeration_too_large("search_row_permutations: limit reached");
            res.permutation_count += per_arrangement;
            res.preimages.push_back(y);
            if (distinct) res.permutations.push_back(perm);
            return;
        }
        const auto [a, b] = t[p];
        for (std::size_t v = 0; v < values.size(); ++v) {
            if (remaining[v] == 0) continue;
            if (!bind(a, values[v].left)) continue;
            if (!bind(b, values[v].right)) {
                unbind(a);
                continue;
            }
            --remaining[v];
            perm[p] = source[v];
            dfs(p + 1);
            ++remaining[v];
            unbind(b);
            unbind(a);
        }
    };
    dfs(0);
    return res;
}

/// Row permutation h~ with lift(t, h.x) = h~ . lift(t, x) for every x, read
/// off the template; nullopt if some mapped pair is missing or the template
/// repeats a pair (then h~ is not unique).
inline std::optional<std::vector<int>> induced_row_permutation(const rho_template& t, const permutation& h) {
    std::map<std::pair<int, int>, int> where;
    for (std::size_t r = 0; r < t.size(); ++r)
        if (!where.emplace(t[r], static_cast<int>(r)).second) return std::nullopt;
    std::vector<int> out(t.size());
    for (std::size_t r = 0; r < t.size(); ++r) {
        auto it = where.find({h(t[r].first), h(t[r].second)});
        if (it == where.end()) return std::nullopt;
        out[r] = it->second;
    }
    return out;
}

inline bool has_distinct_entries(std::span<const double> x) {
    vec s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) == s.end();
}

inline bool has_distinct_rows(const pair_matrix& m) {
    auto s = m.rows;
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) == s.end();
}

// ---------------------------------------------------------------------------
// Orbit mapping for a single local group

struct orbit_mapping_report {
    group_kind kind = group_kind::cyclic;
    std::size_t k = 0;
    std::size_t rows = 0;
    std::size_t group_order = 0;
    std::size_t samples = 0;
    bool degenerate = false;               // template repeats a pair (dihedral, k = 2)
    std::size_t injectivity_violations = 0;   // step 1
    std::size_t equivariance_violations = 0;  // step 2
    std::size_t image_violations = 0;         // step 3
    std::size_t orbit_violations = 0;         // step 4
    std::uint64_t min_passing = 0, max_passing = 0;

    std::size_t violations() const {
        return injectivity_violations + equivariance_violations + image_violations + orbit_violations;
    }
    bool passed() const { return violations() == 0; }
};

/// Outcome of the image characterisation for one input.
struct image_check {
    bool ok = true;
    std::uint64_t passing = 0;       // |{g : g.rho(x) in Im rho}|
    std::size_t induced = 0;         // |{h~ : h in G}|
    std::optional<vec> escape;       // a preimage outside the G-orbit of x
};

/// With a non-degenerate template the passing permutations must be exactly
/// the induced ones. The induced ones always pass, so equal counts suffice;
/// with distinct rows the two sets are also compared directly. With a
/// degenerate template only images are compared: every passing image must be
/// lift(t, h.x) for some h.
inline image_check check_image(const rho_template& t, std::span<const permutation> group, const vec& x) {
    const auto lifted = lift(t, x);
    const auto found = search_row_permutations(t, x.size(), lifted.rows);
    image_check c;
    c.passing = found.permutation_count;

    std::set<std::vector<int>> induced;
    bool degenerate = false;
    for (const auto& h : group) {
        auto ht = induced_row_permutation(t, h);
        if (!ht) {
            degenerate = true;
            break;
        }
        induced.insert(*ht);
    }
    c.induced = induced.size();

    std::set<vec> orbit_points;
    for (const auto& h : group) orbit_points.insert(act(h, x));
    for (const auto& y : found.preimages) {
        if (!orbit_points.count(y)) {
            c.ok = false;
            if (!c.escape) c.escape = y;
        }
    }
    if (!degenerate) {
        if (c.passing != induced.size()) c.ok = false;
        if (!found.permutations.empty()) {
            std::set<std::vector<int>> passing(found.permutations.begin(), found.permutations.end());
            if (passing != induced) c.ok = false;
        }
    } else {
        std::set<vec> images(found.preimages.begin(), found.preimages.end());
        if (images != orbit_points) c.ok = false;
    }
    return c;
}

inline orbit_mapping_report verify_orbit_mapping(group_kind kind, std::size_t k, std::size_t trials,
                                                 std::uint64_t seed) {
    if (k < 2) throw invalid_descriptor("verify_orbit_mapping: k must be >= 2");
    if (kind == group_kind::product) throw invalid_descriptor("verify_orbit_mapping: use verify_product_group");
    if (k > 5) throw enumeration_too_large("verify_orbit_mapping: k must be <= 5");
    std::vector<int> I(k);
    std::iota(I.begin(), I.end(), 0);
    const auto G = group_descriptor::local(kind, I, k);
    const auto group = elements(G);
    const auto all = elements(group_descriptor::local(group_kind::symmetric, I, k));
    const auto v = rho_variant_for(kind);
    const auto t = make_rho_template(v, k);

    orbit_mapping_report r;
    r.kind = kind;
    r.k = k;
    r.rows = t.size();
    r.group_order = group.size();
    r.samples = trials;
    r.min_passing = std::numeric_limits<std::uint64_t>::max();
    for (const auto& h : group)
        if (!induced_row_permutation(t, h)) r.degenerate = true;

    auto rng = make_stream(seed, 11);
    const auto samples = uniform_samples(k, trials, rng, true);
    for (const auto& x : samples) {
        const auto lifted = lift(t, x);
        // step 1: the lift is invertible on its image
        const auto back = unlift(t, k, lifted.rows);
        if (!back || *back != x) ++r.injectivity_violations;

        // step 2: h.x lifts to a row permutation of the lift of x
        for (const auto& h : group) {
            const auto lh = lift(t, act(h, x));
            if (auto ht = induced_row_permutation(t, h)) {
                if (act_rows(permutation(*ht), lifted) != lh) ++r.equivariance_violations;
            } else if (sorted_rows(lh) != sorted_rows(lifted)) {
                ++r.equivariance_violations;
            }
        }

        // step 3: row permutations landing in the image are exactly the induced ones
        const auto c = check_image(t, group, x);
        if (!c.ok) ++r.image_violations;
        if (!r.degenerate && c.passing != group.size()) ++r.image_violations;
        r.min_passing = std::min(r.min_passing, c.passing);
        r.max_passing = std::max(r.max_passing, c.passing);

        // step 4: y is in the G-orbit of x iff the lifts agree up to row order
        const auto orb = orbit_of(std::span<const permutation>(group), x);
        const auto canon = sorted_rows(lifted);
        for (const auto& s : all) {
            const auto y = act(s, x);
            const bool same_orbit = orb.contains(y);
            const bool same_canon = sorted_rows(lift(t, y)) == canon;
            if (same_orbit != same_canon) ++r.orbit_violations;
        }
    }
    if (samples.empty()) r.min_passing = 0;
    return r;
}

// ---------------------------------------------------------------------------
// Repeated-coordinate inputs for the dihedral lift

struct set_e_report {
    std::size_t k = 0;
    std::size_t inputs_searched = 0;
    std::size_t failing_inputs = 0;
    std::optional<vec> example;            // first failing duplicate-entry input
    std::uint64_t example_passing = 0;     // passing permutations for it
    std::size_t group_order = 0;
    std::size_t orbit_escapes = 0;         // failing inputs with a preimage outside the orbit
    std::optional<vec> escape_input, escape_preimage;
    std::size_t distinct_trials = 0;
    std::size_t distinct_failures = 0;

    bool reproduced() const { return failing_inputs > 0 && distinct_failures == 0; }
};

/// Exhaustive search over inputs with values drawn from {1, .., k-1} (so at
/// least one value repeats), plus `distinct_trials` random distinct-entry
/// inputs that must all pass.
inline set_e_report search_set_e(std::size_t k, std::size_t distinct_trials, std::uint64_t seed) {
    if (k < 3 || k > 6) throw invalid_descriptor("search_set_e: k must be in [3, 6]");
    std::vector<int> I(k);
    std::iota(I.begin(), I.end(), 0);
    const auto group = elements(group_descriptor::local(group_kind::dihedral, I, k));
    const auto t = make_rho_template(rho_variant::dihedral, k);
    set_e_report r;
    r.k = k;
    r.group_order = group.size();

    const std::size_t alphabet = k - 1;
    std::size_t total = 1;
    for (std::size_t i = 0; i < k; ++i) total *= alphabet;
    for (std::size_t code = 0; code < total; ++code) {
        vec x(k);
        std::size_t c = code;
        for (std::size_t i = 0; i < k; ++i) {
            x[i] = static_cast<double>(c % alphabet + 1);
            c /= alphabet;
        }
        ++r.inputs_searched;
        const auto res = check_image(t, group, x);
        if (res.ok) continue;
        ++r.failing_inputs;
        if (!r.example) {
            r.example = x;
            r.example_passing = res.passing;
        }
        if (res.escape) {
            ++r.orbit_escapes;
            if (!r.escape_input) {
                r.escape_input = x;
                r.escape_preimage = res.escape;
            }
        }
    }
    auto rng = make_stream(seed, 13);
    for (const auto& x : uniform_samples(k, distinct_trials, rng, true)) {
        ++r.distinct_trials;
        if (!check_image(t, group, x).ok) ++r.distinct_failures;
    }
    return r;
}

/// Some y with lift(y) a row permutation of lift(x) under the dihedral lift
/// but y outside the dihedral orbit of x, if one exists.
inline std::optional<vec> dihedral_orbit_escape(const vec& x) {
    std::vector<int> I(x.size());
    std::iota(I.begin(), I.end(), 0);
    const auto group = elements(group_descriptor::local(group_kind::dihedral, I, x.size()));
    const auto t = make_rho_template(rho_variant::dihedral, x.size());
    const auto found = search_row_permutations(t, x.size(), lift(t, x).rows);
    std::set<vec> orbit_points;
    for (const auto& h : group) orbit_points.insert(act(h, x));
    for (const auto& y : found.preimages)
        if (!orbit_points.count(y)) return y;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Selection pipeline against the per-group lifts

struct structure_report {
    std::size_t cases = 0;
    std::size_t row_violations = 0;         // nonzero rows differ from the direct lift
    std::size_t complement_violations = 0;  // complement differs from the masked input
    std::size_t invariance_violations = 0;  // row multiset or complement moved under G

    bool passed() const { return row_violations + complement_violations + invariance_violations == 0; }
};

/// For every kind, every index set of size 2..k_max inside [n] (k = 2 only
/// for the symmetric kind), and `trials` random inputs.
inline structure_report verify_pipeline_structure(std::size_t n, std::size_t k_max, std::size_t trials,
                                                  std::uint64_t seed) {
    structure_report r;
    auto rng = make_stream(seed, 17);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        const std::size_t k = static_cast<std::size_t>(__builtin_popcount(mask));
        if (k < 2 || k > k_max) continue;
        std::vector<int> I;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) I.push_back(static_cast<int>(i));
        for (auto kind : {group_kind::symmetric, group_kind::cyclic, group_kind::dihedral}) {
            if (k == 2 && kind != group_kind::symmetric) continue;
            const auto G = group_descriptor::local(kind, I, n);
            const auto sp = make_selection(G);
            const auto group = elements(G);
            for (const auto& x : uniform_samples(n, trials, rng, true)) {
                ++r.cases;
                const auto front = apply_pipeline_front(sp, x);
                std::vector<row_pair> nonzero;
                for (std::size_t i = 0; i < n * n; ++i)
                    if (front.rows[i] != row_pair{}) nonzero.push_back(front.rows[i]);
                vec sub;
                for (int i : I) sub.push_back(x[i]);
                auto direct = rho(rho_variant_for(kind), sub).rows;
                std::sort(nonzero.begin(), nonzero.end());
                std::sort(direct.begin(), direct.end());
                if (nonzero != direct) ++r.row_violations;

                vec masked = x;
                for (int i : I) masked[i] = 0.0;
                bool comp_ok = true;
                for (std::size_t i = 0; i < n; ++i)
                    if (front.rows[n * n + i] != row_pair{masked[i], 0.0}) comp_ok = false;
                if (!comp_ok) ++r.complement_violations;

                for (const auto& h : group) {
                    const auto fh = apply_pipeline_front(sp, act(h, x));
                    std::vector<row_pair> a(front.rows.begin(), front.rows.begin() + n * n);
                    std::vector<row_pair> b(fh.rows.begin(), fh.rows.begin() + n * n);
                    std::sort(a.begin(), a.end());
                    std::sort(b.begin(), b.end());
                    const bool same_tail = std::equal(front.rows.begin() + n * n, front.rows.end(),
                                                      fh.rows.begin() + n * n);
                    if (a != b || !same_tail) ++r.invariance_violations;
                }
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Orbit counting for linear maps

struct nonrealizability_report {
    std::size_t k = 0;
    std::size_t trials = 0;
    std::size_t cyclic_orbit_max = 0;     // largest |O_Z(x)|
    std::size_t symmetric_orbit_min = 0;  // smallest |O_S(Mx)|
    std::size_t violations = 0;           // |O_Z(x)| > k or |O_S(Mx)| != k!
    std::size_t redraws = 0;              // ill-conditioned M or repeated entries in Mx
    bool contradiction = false;           // k! > k

    bool passed() const { return violations == 0; }
};

inline constexpr double max_condition_number = 1e3;

inline nonrealizability_report nonrealizability_counts(std::size_t k, std::size_t trials, std::uint64_t seed) {
    if (k < 2) throw invalid_descriptor("nonrealizability_counts: k must be >= 2");
    if (k > max_symmetric_k) throw enumeration_too_large("nonrealizability_counts: k too large");
    std::vector<int> I(k);
    std::iota(I.begin(), I.end(), 0);
    const auto cyc = elements(group_descriptor::local(group_kind::cyclic, I, k));
    const auto sym = elements(group_descriptor::local(group_kind::symmetric, I, k));
    nonrealizability_report r;
    r.k = k;
    r.trials = trials;
    r.contradiction = factorial(k) > k;
    r.symmetric_orbit_min = std::numeric_limits<std::size_t>::max();

    auto rng = make_stream(seed, 19);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto K = static_cast<Eigen::Index>(k);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Eigen::MatrixXd M(K, K);
        for (;;) {
            for (Eigen::Index i = 0; i < K; ++i)
                for (Eigen::Index j = 0; j < K; ++j) M(i, j) = normal(rng);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
            const auto& s = svd.singularValues();
            if (s(K - 1) > 0 && s(0) / s(K - 1) <= max_condition_number) break;
            ++r.redraws;
        }
        vec x, z;
        for (;;) {
            x.assign(k, 0.0);
            for (auto& v : x) v = u(rng);
            Eigen::Map<const Eigen::VectorXd> xv(x.data(), K);
            Eigen::VectorXd zv = M * xv;
            z.assign(zv.data(), zv.data() + K);
            if (has_distinct_entries(x) && has_distinct_entries(z)) break;
            ++r.redraws;
        }
        const auto oz = orbit_of(std::span<const permutation>(cyc), x).elements.size();
        const auto os = orbit_of(std::span<const permutation>(sym), z).elements.size();
        r.cyclic_orbit_max = std::max(r.cyclic_orbit_max, oz);
        r.symmetric_orbit_min = std::min(r.symmetric_orbit_min, os);
        if (oz > k || os != factorial(k)) ++r.violations;
    }
    if (trials == 0) r.symmetric_orbit_min = 0;
    return r;
}

// ---------------------------------------------------------------------------
// Product groups

inline constexpr std::size_t max_product_check_order = 10'000;

/// Concatenation of the per-component lifts, with local positions mapped to
/// the component's global indices.
inline rho_template product_template(const group_descriptor& G) {
    rho_template t;
    for (const auto& c : G.components()) {
        for (auto [a, b] : make_rho_template(rho_variant_for(c.kind), c.k()))
            t.emplace_back(c.index_set[a], c.index_set[b]);
    }
    return t;
}

struct product_report {
    std::size_t group_order = 0;
    std::size_t rows = 0;  // l, the invariance size of phi
    std::size_t samples = 0;
    std::size_t injectivity_violations = 0;
    std::size_t equivariance_violations = 0;
    std::size_t image_violations = 0;

    bool passed() const { return injectivity_violations + equivariance_violations + image_violations == 0; }
};

inline product_report verify_product_group(const std::vector<local_group>& components, std::size_t n,
                                           std::size_t trials, std::uint64_t seed) {
    const auto G = group_descriptor::product(components, n);
    if (G.order() > max_product_check_order)
        throw enumeration_too_large("verify_product_group: group order exceeds " +
                                    std::to_string(max_product_check_order));
    const auto group = elements(G);
    const auto t = product_template(G);
    product_report r;
    r.group_order = group.size();
    r.rows = t.size();
    r.samples = trials;

    std::vector<char> covered(n, 0);
    for (auto [a, b] : t) covered[a] = covered[b] = 1;

    auto rng = make_stream(seed, 23);
    for (const auto& x : uniform_samples(n, trials, rng, true)) {
        const auto lifted = lift(t, x);
        const auto found = search_row_permutations(t, n, lifted.rows);
        // the identity arrangement always passes; its preimage must be x on the covered coordinates
        bool injective = false;
        for (std::size_t i = 0; i < found.permutations.size(); ++i) {
            const auto& p = found.permutations[i];
            bool identity = true;
            for (std::size_t q = 0; q < p.size(); ++q) identity &= p[q] == static_cast<int>(q);
            if (!identity) continue;
            injective = true;
            for (std::size_t j = 0; j < n; ++j)
                if (covered[j] && found.preimages[i][j] != x[j]) injective = false;
        }
        if (!injective) ++r.injectivity_violations;

        std::set<std::vector<int>> induced;
        for (const auto& h : group) {
            auto ht = induced_row_permutation(t, h);
            if (!ht || act_rows(permutation(*ht), lifted) != lift(t, act(h, x))) {
                ++r.equivariance_violations;
                continue;
            }
            induced.insert(*ht);
        }
        std::set<std::vector<int>> passing(found.permutations.begin(), found.permutations.end());
        if (passing != induced || passing.size() != group.size()) ++r.image_violations;
    }
    return r;
}

}  // namespace symforge
