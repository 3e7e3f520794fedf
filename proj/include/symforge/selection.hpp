#pragma once

// Selection matrices M1 (n x n) and M2 (n^2 x n^2) that reduce the unified
// pair lifting to the lifting of one local group, plus the bandit arm space
// over (kind, index set) and its binary feature encoding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "group.hpp"
#include "rho.hpp"

namespace symforge {

/// 0/1 matrix stored as its nonzero (row, col) positions, sorted by row.
struct sparse_binary_matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::pair<int, int>> entries;

    /// Row-selection semantics: out[r] = sum of in[c] over entries (r, c).
    vec apply(std::span<const double> x) const {
        if (x.size() != cols) throw dimension_error("sparse_binary_matrix: input length");
        vec out(rows, 0.0);
        for (auto [r, c] : entries) out[r] += x[c];
        return out;
    }

    /// Same selection applied to the rows of a pair matrix. Each row of a
    /// selection matrix holds at most one 1, so no pair arithmetic is needed.
    pair_matrix apply_rows(const pair_matrix& m) const {
        if (m.row_count() != cols) throw dimension_error("sparse_binary_matrix: row count");
        pair_matrix out{std::vector<row_pair>(rows)};
        for (auto [r, c] : entries) out.rows[r] = m.rows[c];
        return out;
    }

    std::vector<std::vector<int>> dense() const {
        std::vector<std::vector<int>> d(rows, std::vector<int>(cols, 0));
        for (auto [r, c] : entries) d[r][c] = 1;
        return d;
    }

    std::size_t nonzero_rows() const {
        std::vector<char> hit(rows, 0);
        for (auto [r, c] : entries) hit[r] = 1;
        return static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    }
};

struct selection_pair {
    group_descriptor descriptor;
    sparse_binary_matrix m1;
    sparse_binary_matrix m2;
    std::vector<char> in_index_set;  // diagonal of M1^T M1

    std::size_t n() const noexcept { return descriptor.n(); }
};

inline void require_local(const group_descriptor& G, const char* who) {
    if (G.kind() == group_kind::product) throw invalid_descriptor(std::string(who) + ": product descriptor");
}

/// M1[u, i_u] = 1 for u < k: (M1 x)_u = x_{i_u}, zero below row k.
inline sparse_binary_matrix build_m1(const group_descriptor& G) {
    require_local(G, "build_m1");
    const auto& I = G.index_set();
    sparse_binary_matrix m{G.n(), G.n(), {}};
    for (std::size_t u = 0; u < I.size(); ++u) m.entries.emplace_back(static_cast<int>(u), I[u]);
    return m;
}

/// M2 as a fixed row selection on the unified lifting of M1 x. Slot u of M1 x
/// holds x_{i_u}, so the pair (x_{i_u}, x_{i_v}) sits at row u*n + v.
///   symmetric: diagonal rows (u, u), kept in place;
///   cyclic:    output row u <- (u, tau(u));
///   dihedral:  output row u <- (u, tau(u)), output row k+u <- (tau(u), u).
inline sparse_binary_matrix build_m2(const group_descriptor& G) {
    require_local(G, "build_m2");
    const int n = static_cast<int>(G.n());
    const int k = static_cast<int>(G.k());
    sparse_binary_matrix m{G.n() * G.n(), G.n() * G.n(), {}};
    auto row_of = [n](int u, int v) { return u * n + v; };
    switch (G.kind()) {
        case group_kind::symmetric:
            for (int u = 0; u < k; ++u) m.entries.emplace_back(row_of(u, u), row_of(u, u));
            break;
        case group_kind::cyclic:
            for (int u = 0; u < k; ++u) m.entries.emplace_back(u, row_of(u, (u + 1) % k));
            break;
        case group_kind::dihedral:
            for (int u = 0; u < k; ++u) m.entries.emplace_back(u, row_of(u, (u + 1) % k));
            for (int u = 0; u < k; ++u) m.entries.emplace_back(k + u, row_of((u + 1) % k, u));
            break;
        default: break;
    }
    std::sort(m.entries.begin(), m.entries.end());
    return m;
}

inline selection_pair make_selection(const group_descriptor& G) {
    selection_pair sp{G, build_m1(G), build_m2(G), std::vector<char>(G.n(), 0)};
    for (int i : G.index_set()) sp.in_index_set[i] = 1;
    return sp;
}

/// Coordinates outside I, zero on I: (I - M1^T M1) x.
inline vec complement(const selection_pair& sp, std::span<const double> x) {
    vec q(x.begin(), x.end());
    for (std::size_t i = 0; i < q.size(); ++i)
        if (sp.in_index_set[i]) q[i] = 0.0;
    return q;
}

/// The n(n+1)-row input of the invariant network: M2 rho(M1 x) stacked over
/// the complement rows (q_u, 0).
inline pair_matrix apply_pipeline_front(const selection_pair& sp, std::span<const double> x) {
    if (x.size() != sp.n()) throw dimension_error("apply_pipeline_front: input length");
    const vec z = sp.m1.apply(x);
    pair_matrix out = sp.m2.apply_rows(rho_unified(z));
    for (double q : complement(sp, x)) out.rows.push_back({q, 0.0});
    return out;
}

/// The nonzero part of the first block without materializing n^2 rows: the
/// pairs picked by M2, in M2 row order.
inline std::vector<row_pair> selected_pairs(const selection_pair& sp, std::span<const double> x) {
    const auto& I = sp.descriptor.index_set();
    const std::size_t n = sp.n();
    std::vector<row_pair> out;
    out.reserve(sp.m2.entries.size());
    for (auto [r, c] : sp.m2.entries) {
        const std::size_t u = static_cast<std::size_t>(c) / n, v = static_cast<std::size_t>(c) % n;
        const double a = u < I.size() ? x[I[u]] : 0.0;
        const double b = v < I.size() ? x[I[v]] : 0.0;
        out.push_back({a, b});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Arms

/// Kind order in the one-hot tail of the feature vector.
inline int kind_slot(group_kind k) {
    switch (k) {
        case group_kind::symmetric: return 0;
        case group_kind::dihedral: return 1;
        case group_kind::cyclic: return 2;
        default: break;
    }
    throw invalid_descriptor("no arm slot for product kind");
}

inline group_kind kind_of_slot(int s) {
    static constexpr group_kind kinds[] = {group_kind::symmetric, group_kind::dihedral, group_kind::cyclic};
    return kinds[s];
}

struct arm_feature {
    std::vector<std::uint8_t> bits;  // n index bits, then (S, D, Z) one-hot
    group_descriptor descriptor;

    std::size_t dim() const noexcept { return bits.size(); }
};

inline arm_feature encode_arm(const group_descriptor& G) {
    require_local(G, "encode_arm");
    arm_feature a{std::vector<std::uint8_t>(G.n() + 3, 0), G};
    for (int i : G.index_set()) a.bits[i] = 1;
    a.bits[G.n() + kind_slot(G.kind())] = 1;
    return a;
}

inline group_descriptor decode_arm(std::span<const std::uint8_t> bits) {
    if (bits.size() < 5) throw invalid_descriptor("decode_arm: feature too short");
    const std::size_t n = bits.size() - 3;
    int slot = -1;
    for (int s = 0; s < 3; ++s) {
        if (bits[n + s]) {
            if (slot >= 0) throw invalid_descriptor("decode_arm: kind bits are not one-hot");
            slot = s;
        }
    }
    if (slot < 0) throw invalid_descriptor("decode_arm: no kind bit set");
    std::vector<int> I;
    for (std::size_t i = 0; i < n; ++i)
        if (bits[i]) I.push_back(static_cast<int>(i));
    return group_descriptor::local(kind_of_slot(slot), std::move(I), n);
}

inline constexpr std::size_t max_arm_n = 14;

/// 3 (2^n - n - 1) - 2 C(n, 2): three kinds per index set of size >= 2,
/// except that size-2 sets keep only the symmetric arm.
inline std::size_t arm_count(std::size_t n) {
    const std::size_t subsets = (std::size_t{1} << n) - n - 1;
    return 3 * subsets - n * (n - 1);
}

/// All arms, ordered by index-set bitmask and then kind (S, D, Z).
inline std::vector<arm_feature> enumerate_arms(std::size_t n) {
    if (n < 2) throw invalid_descriptor("enumerate_arms: n < 2");
    if (n > max_arm_n) throw enumeration_too_large("enumerate_arms: n exceeds " + std::to_string(max_arm_n));
    std::vector<arm_feature> arms;
    arms.reserve(arm_count(n));
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        const int k = __builtin_popcount(mask);
        if (k < 2) continue;
        std::vector<int> I;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) I.push_back(static_cast<int>(i));
        for (int s = 0; s < 3; ++s) {
            if (k == 2 && s != 0) continue;
            arms.push_back(encode_arm(group_descriptor::local(kind_of_slot(s), I, n)));
        }
    }
    return arms;
}

inline double score(std::span<const double> mu, const arm_feature& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.bits.size(); ++i)
        if (a.bits[i]) s += mu[i];
    return s;
}

/// Exhaustive argmax of mu^T a; ties go to the lexicographically smallest bits.
inline const arm_feature& argmax_arm(std::span<const double> mu, std::span<const arm_feature> arms) {
    if (arms.empty()) throw invalid_descriptor("argmax_arm: empty arm set");
    for (double m : mu)
        if (!std::isfinite(m)) throw numeric_error("argmax_arm: non-finite score vector");
    const arm_feature* best = &arms.front();
    double best_score = score(mu, *best);
    for (const auto& a : arms.subspan(1)) {
        const double s = score(mu, a);
        if (s > best_score || (s == best_score && a.bits < best->bits)) {
            best = &a;
            best_score = s;
        }
    }
    return *best;
}

/// Closed-form maximiser over the full arm space of dimension n: take every
/// index with positive weight, padding with the heaviest remaining indices up
/// to the minimum size of the kind (2 for S, 3 for Z and D), then the best kind.
inline arm_feature argmax_arm_closed_form(std::span<const double> mu) {
    if (mu.size() < 5) throw invalid_descriptor("argmax_arm_closed_form: feature too short");
    const std::size_t n = mu.size() - 3;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return mu[a] > mu[b]; });

    double best = -std::numeric_limits<double>::infinity();
    arm_feature best_arm;
    for (int s = 0; s < 3; ++s) {
        const std::size_t min_k = s == 0 ? 2 : 3;
        if (n < min_k) continue;
        std::vector<int> I;
        for (std::size_t r = 0; r < n; ++r)
            if (r < min_k || mu[order[r]] > 0.0) I.push_back(order[r]);
        std::sort(I.begin(), I.end());
        auto arm = encode_arm(group_descriptor::local(kind_of_slot(s), I, n));
        const double v = score(mu, arm);
        if (v > best || (v == best && arm.bits < best_arm.bits)) {
            best = v;
            best_arm = std::move(arm);
        }
    }
    return best_arm;
}

/// (row, col, 1) triples, 0-based.
inline void write_triples_csv(std::ostream& os, const sparse_binary_matrix& m) {
    os << "row,col,value\n";
    for (auto [r, c] : m.entries) os << r << ',' << c << ",1\n";
}

/// Dense '.'/'1' rendering; rows beyond `max_rows` and columns beyond
/// `max_cols` are cut off.
inline void write_dense_text(std::ostream& os, const sparse_binary_matrix& m,
                             std::size_t max_rows = std::numeric_limits<std::size_t>::max(),
                             std::size_t max_cols = std::numeric_limits<std::size_t>::max()) {
    const auto d = m.dense();
    for (std::size_t r = 0; r < std::min(m.rows, max_rows); ++r) {
        for (std::size_t c = 0; c < std::min(m.cols, max_cols); ++c) os << (d[r][c] ? '1' : '.');
        os << '\n';
    }
}

}  // namespace symforge
