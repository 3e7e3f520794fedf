#pragma once

// Synthetic regression tasks with a known symmetry: group-invariant
// polynomials and convex-quadrangle area, plus the CSV dataset format.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "group.hpp"

namespace symforge {

struct monomial {
    double coefficient = 1.0;
    std::vector<std::pair<int, int>> factors;  // (variable, exponent)
};

/// Evaluation multiplies each term's factor values in sorted order and sums
/// the term values in sorted order, so a permutation of the variables that
/// maps terms onto terms gives a bitwise-identical result.
class polynomial {
public:
    polynomial() = default;
    polynomial(std::size_t n, std::vector<monomial> terms) : n_(n), terms_(std::move(terms)) {
        for (const auto& t : terms_)
            for (auto [v, e] : t.factors)
                if (v < 0 || static_cast<std::size_t>(v) >= n_ || e < 1)
                    throw invalid_descriptor("polynomial: bad factor");
    }

    std::size_t n() const noexcept { return n_; }
    const std::vector<monomial>& terms() const noexcept { return terms_; }

    double operator()(std::span<const double> x) const {
        if (x.size() != n_) throw dimension_error("polynomial: input length");
        std::vector<double> values;
        values.reserve(terms_.size());
        std::vector<double> f;
        for (const auto& t : terms_) {
            f.clear();
            for (auto [v, e] : t.factors) {
                double p = x[v];
                for (int i = 1; i < e; ++i) p *= x[v];
                f.push_back(p);
            }
            std::sort(f.begin(), f.end());
            double prod = t.coefficient;
            for (double a : f) prod *= a;
            values.push_back(prod);
        }
        std::sort(values.begin(), values.end());
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }

private:
    std::size_t n_ = 0;
    std::vector<monomial> terms_;
};

struct polynomial_spec {
    std::string name;
    group_descriptor descriptor;
    polynomial poly;
};

inline const std::vector<std::string>& builtin_polynomial_names() {
    static const std::vector<std::string> names{"S_I(4)", "Z_I(5)", "Z_I(7)", "D_I(5)", "D_I(7)"};
    return names;
}

/// Throws when `fn` changes by more than `tol` under any group element on
/// `trials` uniform points of [0,1]^n.
template <typename F>
void require_invariant(const F& fn, const group_descriptor& G, std::size_t trials, double tol, std::uint64_t seed) {
    auto rng = make_stream(seed, 99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto group = elements(G);
    for (std::size_t t = 0; t < trials; ++t) {
        vec x(G.n());
        for (auto& v : x) v = u(rng);
        const double fx = fn(x);
        for (const auto& g : group)
            if (!(std::abs(fn(act(g, x)) - fx) <= tol))
                throw invalid_descriptor("polynomial is not invariant under its declared group");
    }
}

namespace detail {

/// sum_j x_{c_j} x_{c_{j+1}}^2 around the cycle c.
inline std::vector<monomial> cyclic_cubic(const std::vector<int>& c) {
    std::vector<monomial> terms;
    for (std::size_t j = 0; j < c.size(); ++j) terms.push_back({1.0, {{c[j], 1}, {c[(j + 1) % c.size()], 2}}});
    return terms;
}

}  // namespace detail

/// The benchmark polynomials (1-based variables as printed):
///   S_I(4): x1 x2 x3 x4 + x5                         on I = {1,2,3,4}
///   Z_I(5): x1x2^2 + x2x3^2 + x3x6^2 + x6x7^2 + x7x1^2 on I = {1,2,3,6,7}
///   Z_I(7): the same cycle through {1,2,3,6,7,9,10}
///   D_I(k): Z_I(k) plus its index-reversed counterpart
/// `n` defaults to 5 for S_I(4) and 10 otherwise; a larger n adds
/// coordinates the polynomial ignores.
inline polynomial_spec builtin_polynomial(std::string_view name, std::size_t n = 0) {
    std::vector<int> I;
    group_kind kind;
    std::vector<monomial> terms;
    std::size_t natural_n = 10;
    if (name == "S_I(4)") {
        kind = group_kind::symmetric;
        I = {0, 1, 2, 3};
        natural_n = 5;
        terms = {{1.0, {{0, 1}, {1, 1}, {2, 1}, {3, 1}}}, {1.0, {{4, 1}}}};
    } else if (name == "Z_I(5)" || name == "D_I(5)" || name == "Z_I(7)" || name == "D_I(7)") {
        const bool seven = name.find('7') != std::string_view::npos;
        I = seven ? std::vector<int>{0, 1, 2, 5, 6, 8, 9} : std::vector<int>{0, 1, 2, 5, 6};
        kind = name.front() == 'Z' ? group_kind::cyclic : group_kind::dihedral;
        terms = detail::cyclic_cubic(I);
        if (kind == group_kind::dihedral) {
            std::vector<int> rev(I.rbegin(), I.rend());
            auto back = detail::cyclic_cubic(rev);
            terms.insert(terms.end(), back.begin(), back.end());
        }
    } else {
        std::string valid;
        for (const auto& v : builtin_polynomial_names()) valid += (valid.empty() ? "" : ", ") + v;
        throw invalid_descriptor("unknown polynomial '" + std::string(name) + "' (valid: " + valid + ")");
    }
    if (n == 0) n = natural_n;
    if (n < natural_n) throw dimension_error("builtin_polynomial: n smaller than the polynomial's variables");
    polynomial_spec spec{std::string(name), group_descriptor::local(kind, I, n), polynomial(n, std::move(terms))};
    require_invariant(spec.poly, spec.descriptor, 100, 1e-12, 0);
    return spec;
}

inline bool has_duplicate_coordinates(std::span<const double> x) {
    vec s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) != s.end();
}

/// Uniform inputs on [0,1]^n with raw polynomial targets. Dihedral specs
/// resample inputs with a repeated coordinate.
inline dataset gen_poly_dataset(const polynomial_spec& spec, std::size_t m, std::uint64_t seed,
                                std::uint64_t stream = 0) {
    if (m < 1) throw empty_dataset("gen_poly_dataset: m must be >= 1");
    auto rng = make_stream(seed, 1000 + stream);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    dataset d;
    d.n = spec.poly.n();
    const bool reject_dups = spec.descriptor.kind() == group_kind::dihedral;
    for (std::size_t r = 0; r < m; ++r) {
        vec x(d.n);
        do {
            for (auto& v : x) v = u(rng);
        } while (reject_dups && has_duplicate_coordinates(x));
        const double y = spec.poly(x);
        d.push_back(std::move(x), y);
    }
    return d;
}

/// Min-max scaling fitted on `reference`.
inline target_scaling fit_min_max(const dataset& reference) {
    if (reference.empty()) throw empty_dataset("fit_min_max: empty dataset");
    auto [lo, hi] = std::minmax_element(reference.targets.begin(), reference.targets.end());
    const double range = *hi - *lo;
    return {*lo, range > 0 ? range : 1.0};
}

inline dataset apply_scaling(dataset d, const target_scaling& s) {
    for (auto& y : d.targets) y = s.normalize(y);
    d.scaling = s;
    return d;
}

struct dataset_splits {
    dataset train, validation, test;
};

/// Train/validation/test drawn from disjoint sub-streams of one seed and
/// min-max normalized with the train-split statistics.
inline dataset_splits gen_poly_splits(const polynomial_spec& spec, std::size_t train, std::size_t validation,
                                      std::size_t test, std::uint64_t seed) {
    dataset_splits s;
    s.train = gen_poly_dataset(spec, train, seed, 1);
    const auto scaling = fit_min_max(s.train);
    s.train = apply_scaling(std::move(s.train), scaling);
    if (validation) s.validation = apply_scaling(gen_poly_dataset(spec, validation, seed, 2), scaling);
    else s.validation = dataset{spec.poly.n(), {}, {}, scaling};
    if (test) s.test = apply_scaling(gen_poly_dataset(spec, test, seed, 3), scaling);
    else s.test = dataset{spec.poly.n(), {}, {}, scaling};
    return s;
}

// ---------------------------------------------------------------------------
// Convex quadrangles

using point2 = std::array<double, 2>;
using quadrangle = std::array<point2, 4>;

inline double signed_area(const quadrangle& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& a = q[i];
        const auto& b = q[(i + 1) % 4];
        s += a[0] * b[1] - b[0] * a[1];
    }
    return 0.5 * s;
}

inline double shoelace_area(const quadrangle& q) { return std::abs(signed_area(q)); }

inline double cross(const point2& o, const point2& a, const point2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/// Counter-clockwise hull order when all four points are strictly convex
/// hull vertices; false otherwise.
inline bool convex_order(quadrangle pts, quadrangle& out) {
    std::sort(pts.begin(), pts.end());
    std::vector<point2> hull;
    for (int pass = 0; pass < 2; ++pass) {
        const std::size_t base = hull.size();
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& p = pass == 0 ? pts[i] : pts[3 - i];
            while (hull.size() >= base + 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0) hull.pop_back();
            hull.push_back(p);
        }
        hull.pop_back();
    }
    if (hull.size() != 4) return false;
    std::copy(hull.begin(), hull.end(), out.begin());
    return true;
}

/// Counter-clockwise order starting from the lexicographically smallest
/// vertex, for vertices already listed in either cyclic orientation.
inline quadrangle canonical_quadrangle(quadrangle q) {
    if (signed_area(q) < 0) std::reverse(q.begin(), q.end());
    auto first = std::min_element(q.begin(), q.end());
    std::rotate(q.begin(), first, q.end());
    return q;
}

inline vec flatten(const quadrangle& q) {
    vec x;
    for (const auto& p : q) x.insert(x.end(), p.begin(), p.end());
    return x;
}

inline quadrangle unflatten_quadrangle(std::span<const double> x) {
    if (x.size() != 8) throw dimension_error("quadrangle: expected 8 coordinates");
    quadrangle q;
    for (std::size_t i = 0; i < 4; ++i) q[i] = {x[2 * i], x[2 * i + 1]};
    return q;
}

/// Block action: g permutes `x.size() / block` slots of `block` coordinates.
inline vec act_blocks(const permutation& g, std::span<const double> x, std::size_t block) {
    if (g.size() * block != x.size()) throw dimension_error("act_blocks: size mismatch");
    vec out(x.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t c = 0; c < block; ++c) out[i * block + c] = x[g(i) * block + c];
    return out;
}

inline constexpr std::size_t quadrangle_rejection_budget = 10'000;

/// Four points in [0,2]^2 in convex position with area in (0, 1]; inputs are
/// the canonical vertex list flattened to 8 coordinates, target is the area.
inline dataset gen_quadrangle_dataset(std::size_t m, std::uint64_t seed, std::uint64_t stream = 0) {
    if (m < 1) throw empty_dataset("gen_quadrangle_dataset: m must be >= 1");
    auto rng = make_stream(seed, 2000 + stream);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    dataset d;
    d.n = 8;
    for (std::size_t r = 0; r < m; ++r) {
        bool ok = false;
        for (std::size_t attempt = 0; attempt < quadrangle_rejection_budget && !ok; ++attempt) {
            quadrangle raw, hull;
            for (auto& p : raw) p = {u(rng), u(rng)};
            if (!convex_order(raw, hull)) continue;
            const double area = shoelace_area(hull);
            if (!(area > 0.0 && area <= 1.0)) continue;
            const auto q = canonical_quadrangle(hull);
            d.push_back(flatten(q), shoelace_area(q));
            ok = true;
        }
        if (!ok) throw generation_error("gen_quadrangle_dataset: rejection budget exceeded");
    }
    return d;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_dataset_csv(std::ostream& os, const dataset& d) {
    for (std::size_t i = 0; i < d.n; ++i) os << "x_" << (i + 1) << ',';
    os << "y\n";
    char buf[40];
    for (std::size_t r = 0; r < d.size(); ++r) {
        for (double v : d.inputs[r]) {
            std::snprintf(buf, sizeof buf, "%.17g,", v);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", d.targets[r]);
        os << buf;
    }
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

}  // namespace detail

/// Parses the format written by write_dataset_csv. Scaling is not part of
/// the CSV and is left at identity.
inline dataset read_dataset_csv(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!detail::trim(line).empty()) break;
    }
    if (detail::trim(line).empty()) throw empty_dataset("dataset file is empty");
    const auto header = detail::split_csv(detail::trim(line));
    dataset d;
    std::size_t cols = 0;
    while (cols < header.size() && detail::trim(header[cols]) == "x_" + std::to_string(cols + 1)) ++cols;
    if (cols == 0) throw parse_error("missing column 'x_1'", lineno);
    if (cols == header.size()) throw parse_error("missing column 'y'", lineno);
    if (detail::trim(header[cols]) != "y") {
        throw parse_error("missing column '" + (cols + 1 == header.size() ? std::string("y") : "x_" + std::to_string(cols + 1)) +
                              "' (found '" + std::string(detail::trim(header[cols])) + "')",
                          lineno);
    }
    if (cols + 1 != header.size()) throw parse_error("unexpected column after 'y'", lineno);
    d.n = cols;
    while (std::getline(is, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        const auto fields = detail::split_csv(t);
        if (fields.size() != cols + 1)
            throw parse_error("expected " + std::to_string(cols + 1) + " fields, got " + std::to_string(fields.size()),
                              lineno);
        vec row(cols + 1);
        for (std::size_t c = 0; c <= cols; ++c) {
            const auto f = detail::trim(fields[c]);
            const char* b = f.data();
            const char* e = f.data() + f.size();
            auto [ptr, ec] = std::from_chars(b, e, row[c]);
            if (ec != std::errc() || ptr != e)
                throw parse_error("column '" + std::string(detail::trim(header[c])) + "': not a number '" +
                                      std::string(f) + "'",
                                  lineno);
        }
        const double y = row.back();
        row.pop_back();
        d.push_back(std::move(row), y);
    }
    if (d.empty()) throw empty_dataset("dataset file has no rows");
    return d;
}

inline void save_dataset(const std::string& path, const dataset& d) {
    std::ofstream os(path);
    if (!os) throw error("cannot open '" + path + "' for writing");
    write_dataset_csv(os, d);
}

inline dataset load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw error("cannot open '" + path + "'");
    try {
        return read_dataset_csv(is);
    } catch (const parse_error& e) {
        throw parse_error(path + ": " + e.message(), e.line());
    }
}

}  // namespace symforge
