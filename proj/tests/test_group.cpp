#include <catch_amalgamated.hpp>

#include <random>

#include <symforge/group.hpp>

using namespace symforge;

namespace {

permutation one_based(std::initializer_list<int> images) {
    std::vector<int> m;
    for (int v : images) m.push_back(v - 1);
    return permutation(m);
}

vec random_vec(std::size_t n, rng_engine& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    vec x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("cyclic generator follows the index order") {
    const std::vector<int> I{0, 1, 3};
    CHECK(cyclic_generator(I, 4) == one_based({2, 4, 3, 1}));
    const std::vector<int> full{0, 1, 2};
    CHECK(cyclic_generator(full, 3) == one_based({2, 3, 1}));
    const std::vector<int> pair{1, 3};
    CHECK(cyclic_generator(pair, 5) == one_based({1, 4, 3, 2, 5}));
    const std::vector<int> lone{2};
    CHECK_THROWS_AS(cyclic_generator(lone, 5), invalid_descriptor);
}

TEST_CASE("reflection reverses the index set") {
    const std::vector<int> I{0, 2, 3, 5};
    const auto s = dihedral_reflection(I, 6);
    CHECK(s == one_based({6, 2, 4, 3, 5, 1}));
    CHECK(compose(s, s).is_identity());
}

TEST_CASE("element counts per kind") {
    for (std::size_t k = 2; k <= 6; ++k) {
        std::vector<int> I(k);
        std::iota(I.begin(), I.end(), 0);
        const std::size_t n = k + 1;
        CHECK(elements(group_descriptor::local(group_kind::cyclic, I, n)).size() == k);
        CHECK(elements(group_descriptor::local(group_kind::symmetric, I, n)).size() == factorial(k));
        const auto d = elements(group_descriptor::local(group_kind::dihedral, I, n));
        CHECK(d.size() == (k == 2 ? 2 : 2 * k));
        CHECK(std::set<permutation>(d.begin(), d.end()).size() == d.size());
    }
    std::vector<int> nine(9);
    std::iota(nine.begin(), nine.end(), 0);
    CHECK_THROWS_AS(elements(group_descriptor::local(group_kind::symmetric, nine, 9)), enumeration_too_large);
}

TEST_CASE("action is a pure copy") {
    const vec x{0.1, 0.2, 0.3};
    CHECK(act(permutation(3), x) == x);
    CHECK(act(one_based({2, 3, 1}), x) == vec{0.2, 0.3, 0.1});
    const auto g = one_based({3, 1, 2});
    CHECK(act(g.inverse(), act(g, x)) == x);
    CHECK_THROWS_AS(act(permutation(4), x), dimension_error);
}

TEST_CASE("permutation rejects non-bijections") {
    CHECK_THROWS_AS(permutation(std::vector<int>{0, 0, 1}), invalid_descriptor);
    CHECK_THROWS_AS(permutation(std::vector<int>{0, 3, 1}), invalid_descriptor);
    const auto g = one_based({2, 4, 1, 3});
    CHECK(compose(g, g.inverse()).is_identity());
}

TEST_CASE("closure: acting twice equals acting by the composite") {
    auto rng = make_stream(1, 0);
    for (auto kind : {group_kind::cyclic, group_kind::dihedral, group_kind::symmetric}) {
        const auto G = group_descriptor::local(kind, {0, 2, 3, 4}, 6);
        const auto els = elements(G);
        const std::set<permutation> as_set(els.begin(), els.end());
        const vec x = random_vec(6, rng);
        for (const auto& g : els)
            for (const auto& h : els) {
                CHECK(act(g, act(h, x)) == act(compose(g, h), x));
                CHECK(as_set.count(compose(g, h)));
            }
    }
}

TEST_CASE("orbits") {
    const vec x{0.1, 0.2, 0.3};
    const auto Z = group_descriptor::local(group_kind::cyclic, {0, 1, 2}, 3);
    const auto o = orbit_of(Z, x);
    CHECK(o.elements.size() == 3);
    CHECK(o.contains(vec{0.2, 0.3, 0.1}));
    CHECK(o.contains(vec{0.3, 0.1, 0.2}));
    CHECK(orbit_of(group_descriptor::local(group_kind::symmetric, {0, 1, 2}, 3), x).elements.size() == 6);
    CHECK(orbit_of(group_descriptor::local(group_kind::dihedral, {0, 1, 2}, 3), vec{0.5, 0.5, 0.5}).elements.size() == 1);

    auto rng = make_stream(2, 0);
    const auto D = group_descriptor::local(group_kind::dihedral, {0, 1, 3, 4}, 5);
    const auto base = orbit_of(D, random_vec(5, rng));
    CHECK(D.order() % base.elements.size() == 0);
    for (const auto& y : base.elements) CHECK(orbit_of(D, y).elements == base.elements);
}

TEST_CASE("product groups act independently per component") {
    const auto P = group_descriptor::product({{group_kind::cyclic, {0, 1, 2}}, {group_kind::symmetric, {3, 4}}}, 6);
    const auto els = elements(P);
    CHECK(els.size() == 6);
    for (const auto& g : els) CHECK(g(5) == 5);
    const vec x{1, 2, 3, 4, 5, 6};
    CHECK(orbit_of(P, x).elements.size() == 6);
    CHECK(describe(P) == "Z{1,2,3}xS{4,5}");

    CHECK_THROWS_AS(group_descriptor::product({{group_kind::cyclic, {0, 1}}, {group_kind::symmetric, {2, 3}}}, 4),
                    invalid_descriptor);
    CHECK_THROWS_AS(
        group_descriptor::product({{group_kind::symmetric, {0, 1}}, {group_kind::symmetric, {2, 3, 4}}}, 5),
        invalid_descriptor);
    CHECK_THROWS_AS(group_descriptor::product({{group_kind::cyclic, {0, 1, 2}}, {group_kind::dihedral, {2, 3, 4, 5}}}, 6),
                    invalid_descriptor);
}

TEST_CASE("descriptor validation") {
    CHECK_THROWS_AS(group_descriptor::local(group_kind::cyclic, {0}, 4), invalid_descriptor);
    CHECK_THROWS_AS(group_descriptor::local(group_kind::cyclic, {0, 4}, 4), invalid_descriptor);
    CHECK_THROWS_AS(group_descriptor::local(group_kind::cyclic, {1, 1}, 4), invalid_descriptor);
    CHECK(group_kind_from_string("dihedral") == group_kind::dihedral);
    CHECK_THROWS(group_kind_from_string("affine"));
}

TEST_CASE("cycle decomposition") {
    const auto id = cycle_decomposition(permutation(4));
    CHECK(id.cycles.empty());
    CHECK(id.fixed_points.size() == 4);

    const auto g = one_based({2, 3, 1, 5, 4});
    const auto d = cycle_decomposition(g);
    REQUIRE(d.cycles.size() == 2);
    CHECK(d.cycles[0].size() == 3);
    CHECK(d.cycles[1].size() == 2);
    CHECK(d.unique_lengths);

    const auto h = one_based({2, 1, 4, 3});
    CHECK_FALSE(cycle_decomposition(h).unique_lengths);
    CHECK_THROWS_AS(cyclic_product_of(h), invalid_descriptor);

    // the product descriptor built from g contains g itself
    const auto P = cyclic_product_of(g);
    const auto els = elements(P);
    CHECK(els.size() == 6);
    CHECK(std::find(els.begin(), els.end(), g) != els.end());
}
