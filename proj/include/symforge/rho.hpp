#pragma once

// Pair-lifting maps: a vector becomes a matrix of coordinate pairs. The
// per-group variants lift a k-vector; the unified variant lifts an n-vector
// to all n^2 ordered pairs.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "group.hpp"

namespace symforge {

struct row_pair {
    double left = 0.0;
    double right = 0.0;

    friend bool operator==(const row_pair&, const row_pair&) = default;
    friend auto operator<=>(const row_pair&, const row_pair&) = default;
};

struct pair_matrix {
    std::vector<row_pair> rows;

    std::size_t row_count() const noexcept { return rows.size(); }
    const row_pair& operator[](std::size_t r) const { return rows[r]; }

    friend bool operator==(const pair_matrix&, const pair_matrix&) = default;
};

enum class rho_variant { symmetric, cyclic, dihedral, unified };

inline rho_variant rho_variant_for(group_kind k) {
    switch (k) {
        case group_kind::symmetric: return rho_variant::symmetric;
        case group_kind::cyclic: return rho_variant::cyclic;
        case group_kind::dihedral: return rho_variant::dihedral;
        default: break;
    }
    throw invalid_descriptor("no per-group lifting for a product kind");
}

/// Row r of the lifted matrix is (x[a], x[b]) for template[r] = {a, b}.
using rho_template = std::vector<std::pair<int, int>>;

inline std::size_t rho_rows(rho_variant v, std::size_t k) {
    switch (v) {
        case rho_variant::symmetric:
        case rho_variant::cyclic: return k;
        case rho_variant::dihedral: return 2 * k;
        case rho_variant::unified: return k * k;
    }
    return 0;
}

/// Inverse of rho_rows; nullopt when no k produces `rows`.
inline std::optional<std::size_t> rho_k_from_rows(rho_variant v, std::size_t rows) {
    switch (v) {
        case rho_variant::symmetric:
        case rho_variant::cyclic: return rows;
        case rho_variant::dihedral:
            if (rows % 2) return std::nullopt;
            return rows / 2;
        case rho_variant::unified: {
            auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(rows))));
            if (k * k != rows) return std::nullopt;
            return k;
        }
    }
    return std::nullopt;
}

inline rho_template make_rho_template(rho_variant v, std::size_t k) {
    rho_template t;
    const int K = static_cast<int>(k);
    switch (v) {
        case rho_variant::symmetric:
            for (int r = 0; r < K; ++r) t.emplace_back(r, r);
            break;
        case rho_variant::cyclic:
            for (int r = 0; r < K; ++r) t.emplace_back(r, (r + 1) % K);
            break;
        case rho_variant::dihedral:
            for (int r = 0; r < K; ++r) {
                t.emplace_back(r, (r + 1) % K);
                t.emplace_back((r + 1) % K, r);
            }
            break;
        case rho_variant::unified:
            for (int i = 0; i < K; ++i)
                for (int j = 0; j < K; ++j) t.emplace_back(i, j);
            break;
    }
    return t;
}

inline pair_matrix lift(const rho_template& t, std::span<const double> x) {
    pair_matrix m;
    m.rows.reserve(t.size());
    for (auto [a, b] : t) m.rows.push_back({x[a], x[b]});
    return m;
}

inline pair_matrix rho(rho_variant v, std::span<const double> x) {
    if (v != rho_variant::unified && x.size() < 2) throw dimension_error("rho: need k >= 2");
    return lift(make_rho_template(v, x.size()), x);
}

inline pair_matrix rho_cyclic(std::span<const double> x) { return rho(rho_variant::cyclic, x); }
inline pair_matrix rho_dihedral(std::span<const double> x) { return rho(rho_variant::dihedral, x); }
inline pair_matrix rho_symmetric(std::span<const double> x) { return rho(rho_variant::symmetric, x); }
inline pair_matrix rho_unified(std::span<const double> x) { return rho(rho_variant::unified, x); }

/// Recovers the vector whose lift under `t` equals the given rows. Each
/// coordinate takes the first component of the first row that defines it;
/// returns nullopt when any other occurrence disagrees or a coordinate is
/// never mentioned.
inline std::optional<vec> unlift(const rho_template& t, std::size_t k, std::span<const row_pair> rows) {
    if (rows.size() != t.size()) return std::nullopt;
    vec x(k, 0.0);
    std::vector<char> set(k, 0);
    auto assign = [&](int idx, double v) {
        if (!set[idx]) {
            set[idx] = 1;
            x[idx] = v;
            return true;
        }
        return x[idx] == v;
    };
    // left components first so the defining rows win
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (!assign(t[r].first, rows[r].left)) return std::nullopt;
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (!assign(t[r].second, rows[r].right)) return std::nullopt;
    for (char s : set)
        if (!s) return std::nullopt;
    return x;
}

inline bool in_image(const pair_matrix& m, rho_variant v) {
    auto k = rho_k_from_rows(v, m.row_count());
    if (!k || (v != rho_variant::unified && *k < 2)) return false;
    return unlift(make_rho_template(v, *k), *k, m.rows).has_value();
}

inline vec rho_inverse(const pair_matrix& m, rho_variant v) {
    auto k = rho_k_from_rows(v, m.row_count());
    if (!k) throw not_in_image("rho_inverse: row count does not fit the variant");
    auto x = unlift(make_rho_template(v, *k), *k, m.rows);
    if (!x) throw not_in_image("rho_inverse: matrix is not in the image of the lifting");
    return *x;
}

/// Row permutation in the same convention as vectors: (g.m)[r] = m[g(r)].
inline pair_matrix act_rows(const permutation& g, const pair_matrix& m) {
    return {act<row_pair>(g, std::span<const row_pair>(m.rows))};
}

/// Rows sorted lexicographically: a canonical representative of the orbit
/// of `m` under all row permutations.
inline pair_matrix sorted_rows(pair_matrix m) {
    std::sort(m.rows.begin(), m.rows.end());
    return m;
}

inline void write_csv(std::ostream& os, const pair_matrix& m) {
    os << "left,right\n";
    char buf[64];
    for (const auto& r : m.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.left, r.right);
        os << buf;
    }
}

}  // namespace symforge
