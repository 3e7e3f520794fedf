#pragma once

// Local permutation groups on [n]: cyclic (Z_I), dihedral (D_I), symmetric
// (S_I), and direct products of them on disjoint index sets. Indices are
// 0-based internally; 1-based only in serialized records.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace symforge {

using vec = std::vector<double>;

class permutation {
public:
    permutation() = default;

    /// Identity on n points.
    explicit permutation(std::size_t n) : map_(n) { std::iota(map_.begin(), map_.end(), 0); }

    /// `images[i]` is the image g(i). Throws if not a bijection on [0, n).
    explicit permutation(std::vector<int> images) : map_(std::move(images)) {
        std::vector<char> seen(map_.size(), 0);
        for (int v : map_) {
            if (v < 0 || static_cast<std::size_t>(v) >= map_.size() || seen[v])
                throw invalid_descriptor("permutation images are not a bijection");
            seen[v] = 1;
        }
    }

    std::size_t size() const noexcept { return map_.size(); }
    int operator()(std::size_t i) const { return map_[i]; }
    const std::vector<int>& images() const noexcept { return map_; }

    bool is_identity() const {
        for (std::size_t i = 0; i < map_.size(); ++i)
            if (map_[i] != static_cast<int>(i)) return false;
        return true;
    }

    permutation inverse() const {
        std::vector<int> inv(map_.size());
        for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = static_cast<int>(i);
        return permutation(std::move(inv));
    }

    friend bool operator==(const permutation&, const permutation&) = default;
    friend auto operator<=>(const permutation&, const permutation&) = default;

private:
    std::vector<int> map_;
};

/// (g . x)_i = x_{g(i)}. Pure copy, no arithmetic.
template <typename T>
std::vector<T> act(const permutation& g, std::span<const T> x) {
    if (g.size() != x.size()) throw dimension_error("act: permutation and vector sizes differ");
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[g(i)];
    return out;
}

inline vec act(const permutation& g, const vec& x) { return act<double>(g, std::span<const double>(x)); }

/// The permutation whose action equals acting by `h` first and then by `g`:
/// act(compose(g, h), x) == act(g, act(h, x)). With the action
/// (g.x)_i = x_{g(i)} this is the map i -> h(g(i)).
inline permutation compose(const permutation& g, const permutation& h) {
    if (g.size() != h.size()) throw dimension_error("compose: size mismatch");
    std::vector<int> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = h(g(i));
    return permutation(std::move(out));
}

enum class group_kind { symmetric, cyclic, dihedral, product };

inline std::string_view to_string(group_kind k) {
    switch (k) {
        case group_kind::symmetric: return "symmetric";
        case group_kind::cyclic: return "cyclic";
        case group_kind::dihedral: return "dihedral";
        case group_kind::product: return "product";
    }
    return "?";
}

inline group_kind group_kind_from_string(std::string_view s) {
    if (s == "symmetric" || s == "S") return group_kind::symmetric;
    if (s == "cyclic" || s == "Z") return group_kind::cyclic;
    if (s == "dihedral" || s == "D") return group_kind::dihedral;
    if (s == "product") return group_kind::product;
    throw invalid_descriptor("unknown group kind '" + std::string(s) + "'");
}

/// One Z_I, D_I or S_I factor. The order of `index_set` is the cycle order
/// used by the cyclic generator; canonical descriptors keep it increasing.
struct local_group {
    group_kind kind = group_kind::symmetric;
    std::vector<int> index_set;

    std::size_t k() const noexcept { return index_set.size(); }

    friend bool operator==(const local_group&, const local_group&) = default;
};

inline std::size_t factorial(std::size_t k) {
    std::size_t r = 1;
    for (std::size_t i = 2; i <= k; ++i) r *= i;
    return r;
}

/// Number of distinct elements of a local group. D_I with k = 2 coincides with
/// Z_I (the reflection equals the generator), so its order is 2.
inline std::size_t local_order(const local_group& g) {
    const std::size_t k = g.k();
    switch (g.kind) {
        case group_kind::cyclic: return k;
        case group_kind::dihedral: return k == 2 ? 2 : 2 * k;
        case group_kind::symmetric: return factorial(k);
        default: break;
    }
    throw invalid_descriptor("local_order: product is not a local group");
}

class group_descriptor {
public:
    group_descriptor() = default;

    static group_descriptor local(group_kind kind, std::vector<int> index_set, std::size_t n) {
        if (kind == group_kind::product) throw invalid_descriptor("use group_descriptor::product");
        group_descriptor d;
        d.kind_ = kind;
        d.n_ = n;
        d.components_.push_back({kind, std::move(index_set)});
        d.validate();
        return d;
    }

    static group_descriptor product(std::vector<local_group> components, std::size_t n) {
        group_descriptor d;
        d.kind_ = group_kind::product;
        d.n_ = n;
        d.components_ = std::move(components);
        d.validate();
        return d;
    }

    group_kind kind() const noexcept { return kind_; }
    std::size_t n() const noexcept { return n_; }
    const std::vector<local_group>& components() const noexcept { return components_; }

    /// Index set of a single-component descriptor.
    const std::vector<int>& index_set() const {
        if (kind_ == group_kind::product) throw invalid_descriptor("product descriptor has no single index set");
        return components_.front().index_set;
    }
    std::size_t k() const { return index_set().size(); }

    std::size_t order() const {
        std::size_t r = 1;
        for (const auto& c : components_) r *= local_order(c);
        return r;
    }

    friend bool operator==(const group_descriptor&, const group_descriptor&) = default;

private:
    void validate() const {
        if (components_.empty()) throw invalid_descriptor("descriptor has no components");
        std::vector<char> used(n_, 0);
        int symmetric_count = 0;
        for (const auto& c : components_) {
            if (c.kind == group_kind::product) throw invalid_descriptor("nested product components");
            if (c.k() < 2) throw invalid_descriptor("index set must have at least 2 elements");
            for (int i : c.index_set) {
                if (i < 0 || static_cast<std::size_t>(i) >= n_)
                    throw invalid_descriptor("index " + std::to_string(i + 1) + " outside [1, n]");
                if (used[i]) throw invalid_descriptor("index " + std::to_string(i + 1) + " repeated");
                used[i] = 1;
            }
            if (c.kind == group_kind::symmetric) ++symmetric_count;
        }
        if (kind_ == group_kind::product) {
            if (symmetric_count > 1) throw invalid_descriptor("product has more than one symmetric component");
            std::set<std::size_t> orders;
            for (const auto& c : components_)
                if (!orders.insert(local_order(c)).second)
                    throw invalid_descriptor("product components of equal order (isomorphic factors)");
        }
    }

    group_kind kind_ = group_kind::symmetric;
    std::size_t n_ = 0;
    std::vector<local_group> components_;
};

/// Short 1-based label such as "Z{1,2,3,6,7}" or "S{1,2}xZ{3,4,5}".
inline std::string describe(const group_descriptor& G) {
    std::string out;
    for (const auto& c : G.components()) {
        if (!out.empty()) out += 'x';
        out += c.kind == group_kind::symmetric ? 'S' : c.kind == group_kind::cyclic ? 'Z' : 'D';
        out += '{';
        for (std::size_t j = 0; j < c.index_set.size(); ++j) {
            if (j) out += ',';
            out += std::to_string(c.index_set[j] + 1);
        }
        out += '}';
    }
    return out;
}

/// Generator of Z_I: i_j -> i_{(j mod k)+1}, identity off I.
inline permutation cyclic_generator(std::span<const int> index_set, std::size_t n) {
    const std::size_t k = index_set.size();
    if (k < 2) throw invalid_descriptor("cyclic_generator: |I| < 2");
    std::vector<int> map(n);
    std::iota(map.begin(), map.end(), 0);
    for (std::size_t j = 0; j < k; ++j) {
        int i = index_set[j];
        if (i < 0 || static_cast<std::size_t>(i) >= n) throw invalid_descriptor("cyclic_generator: index out of range");
        map[i] = index_set[(j + 1) % k];
    }
    return permutation(std::move(map));
}

/// Reflection about the centre of I: i_l -> i_{k-l+1}.
inline permutation dihedral_reflection(std::span<const int> index_set, std::size_t n) {
    const std::size_t k = index_set.size();
    if (k < 2) throw invalid_descriptor("dihedral_reflection: |I| < 2");
    std::vector<int> map(n);
    std::iota(map.begin(), map.end(), 0);
    for (std::size_t l = 0; l < k; ++l) map[index_set[l]] = index_set[k - 1 - l];
    return permutation(std::move(map));
}

inline constexpr std::size_t max_symmetric_k = 8;
inline constexpr std::size_t max_product_order = 1'000'000;

namespace detail {

inline std::vector<permutation> local_elements(const local_group& g, std::size_t n) {
    std::vector<permutation> out;
    const auto& I = g.index_set;
    const std::size_t k = I.size();
    switch (g.kind) {
        case group_kind::cyclic:
        case group_kind::dihedral: {
            const permutation pi = cyclic_generator(I, n);
            permutation p = pi;
            for (std::size_t j = 0; j < k; ++j) {
                out.push_back(p);
                p = compose(p, pi);
            }
            if (g.kind == group_kind::dihedral) {
                const permutation sigma = dihedral_reflection(I, n);
                for (std::size_t j = 0; j < k; ++j) {
                    permutation sp = compose(sigma, out[j]);
                    if (std::find(out.begin(), out.end(), sp) == out.end()) out.push_back(std::move(sp));
                }
            }
            break;
        }
        case group_kind::symmetric: {
            if (k > max_symmetric_k)
                throw enumeration_too_large("symmetric group on " + std::to_string(k) + " points exceeds guard");
            std::vector<int> images(I.begin(), I.end());
            std::sort(images.begin(), images.end());
            std::vector<int> positions = images;
            do {
                std::vector<int> map(n);
                std::iota(map.begin(), map.end(), 0);
                for (std::size_t j = 0; j < k; ++j) map[positions[j]] = images[j];
                out.emplace_back(std::move(map));
            } while (std::next_permutation(images.begin(), images.end()));
            break;
        }
        default: throw invalid_descriptor("local_elements: product");
    }
    return out;
}

}  // namespace detail

/// Enumerates the group. Cyclic: pi^1..pi^k; dihedral: then sigma.pi^1..sigma.pi^k;
/// symmetric: lexicographic in the images of I; product: component-wise
/// compositions with the last component varying fastest.
inline std::vector<permutation> elements(const group_descriptor& G) {
    const auto& comps = G.components();
    if (G.kind() == group_kind::product) {
        std::size_t total = 1;
        for (const auto& c : comps) {
            if (c.kind == group_kind::symmetric && c.k() > max_symmetric_k)
                throw enumeration_too_large("symmetric component exceeds guard");
            total *= local_order(c);
            if (total > max_product_order) throw enumeration_too_large("product order exceeds guard");
        }
    }
    std::vector<permutation> acc{permutation(G.n())};
    for (const auto& c : comps) {
        auto local = detail::local_elements(c, G.n());
        std::vector<permutation> next;
        next.reserve(acc.size() * local.size());
        for (const auto& a : acc)
            for (const auto& l : local) next.push_back(compose(a, l));
        acc = std::move(next);
    }
    return acc;
}

struct orbit {
    vec representative;
    std::vector<vec> elements;  // distinct, lexicographically sorted

    bool contains(const vec& y) const { return std::binary_search(elements.begin(), elements.end(), y); }
};

inline orbit orbit_of(std::span<const permutation> group, const vec& x) {
    std::set<vec> seen;
    for (const auto& g : group) seen.insert(act(g, x));
    return {x, std::vector<vec>(seen.begin(), seen.end())};
}

inline orbit orbit_of(const group_descriptor& G, const vec& x) {
    if (x.size() != G.n()) throw dimension_error("orbit: vector length differs from n");
    auto els = elements(G);
    return orbit_of(std::span<const permutation>(els), x);
}

struct cycle_decomposition_result {
    std::vector<std::vector<int>> cycles;  // nontrivial cycles, each starting at its smallest point
    std::vector<int> fixed_points;
    bool unique_lengths = true;  // no two nontrivial cycles share a length
};

/// Disjoint cycles in order of their smallest element. Each cycle lists
/// c, g(c), g(g(c)), ...
inline cycle_decomposition_result cycle_decomposition(const permutation& g) {
    cycle_decomposition_result r;
    std::vector<char> seen(g.size(), 0);
    std::set<std::size_t> lengths;
    for (std::size_t s = 0; s < g.size(); ++s) {
        if (seen[s]) continue;
        std::vector<int> cyc;
        for (int i = static_cast<int>(s); !seen[i]; i = g(i)) {
            seen[i] = 1;
            cyc.push_back(i);
        }
        if (cyc.size() == 1) {
            r.fixed_points.push_back(cyc.front());
        } else {
            if (!lengths.insert(cyc.size()).second) r.unique_lengths = false;
            r.cycles.push_back(std::move(cyc));
        }
    }
    return r;
}

/// Product of cyclic factors, one per nontrivial cycle of g, with each
/// factor's index set listed in the order that makes its cyclic generator
/// equal to the cycle itself. Throws if cycle lengths repeat.
inline group_descriptor cyclic_product_of(const permutation& g) {
    auto d = cycle_decomposition(g);
    if (d.cycles.empty()) throw invalid_descriptor("identity has no nontrivial cycles");
    if (!d.unique_lengths) throw invalid_descriptor("cycle lengths are not unique");
    std::vector<local_group> comps;
    for (auto& c : d.cycles) {
        // cyclic_generator maps index_set[j] -> index_set[j+1], and the action
        // convention makes that the permutation i -> g(i) when listed in cycle order.
        comps.push_back({group_kind::cyclic, c});
    }
    return group_descriptor::product(std::move(comps), g.size());
}

}  // namespace symforge
