#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include <symforge/group.hpp>
#include <symforge/rho.hpp>

using namespace symforge;

namespace {

using rows = std::vector<row_pair>;

vec distinct_vec(std::size_t n, rng_engine& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    vec x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("cyclic lifting chains consecutive coordinates") {
    const double a = 1, b = 2, c = 3;
    CHECK(rho_cyclic(vec{a, b, c}).rows == rows{{a, b}, {b, c}, {c, a}});
    CHECK(rho_cyclic(vec{a, b}).rows == rows{{a, b}, {b, a}});
    CHECK_THROWS_AS(rho_cyclic(vec{a}), dimension_error);

    // shifting x rotates the rows
    const vec x{0.1, 0.2, 0.3, 0.4};
    const auto shift = cyclic_generator(std::vector<int>{0, 1, 2, 3}, 4);
    const auto m = rho_cyclic(x);
    CHECK(rho_cyclic(act(shift, x)) == act_rows(shift, m));
}

TEST_CASE("dihedral lifting keeps both orientations") {
    const double a = 1, b = 2, c = 3;
    CHECK(rho_dihedral(vec{a, b}).rows == rows{{a, b}, {b, a}, {b, a}, {a, b}});
    CHECK(rho_dihedral(vec{a, b, c}).rows == rows{{a, b}, {b, a}, {b, c}, {c, b}, {c, a}, {a, c}});
    const auto m = rho_dihedral(vec{0.3, 0.1, 0.7, 0.2});
    for (const auto& r : m.rows) CHECK(std::count(m.rows.begin(), m.rows.end(), row_pair{r.right, r.left}) >= 1);
}

TEST_CASE("symmetric lifting is the diagonal") {
    CHECK(rho_symmetric(vec{1, 2}).rows == rows{{1, 1}, {2, 2}});
    const auto constant = rho_symmetric(vec{5, 5, 5});
    CHECK(constant.rows == rows(3, {5, 5}));
    const vec x{0.4, 0.1, 0.9};
    const auto g = permutation(std::vector<int>{2, 0, 1});
    CHECK(rho_symmetric(act(g, x)) == act_rows(g, rho_symmetric(x)));
}

TEST_CASE("unified lifting enumerates all pairs row-major") {
    CHECK(rho_unified(vec{1, 2}).rows == rows{{1, 1}, {1, 2}, {2, 1}, {2, 2}});
    auto rng = make_stream(3, 0);
    for (std::size_t n = 2; n <= 6; ++n) {
        const vec x = distinct_vec(n, rng);
        const auto m = rho_unified(x);
        CHECK(m.row_count() == n * n);
        // any coordinate permutation moves rows by the induced (i, j) relabeling
        std::vector<int> p(n);
        std::iota(p.begin(), p.end(), 0);
        std::shuffle(p.begin(), p.end(), rng);
        const permutation g(p);
        std::vector<int> rowmap(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) rowmap[i * n + j] = g(i) * static_cast<int>(n) + g(j);
        CHECK(rho_unified(act(g, x)) == act_rows(permutation(rowmap), m));
    }
}

TEST_CASE("inverse and image membership") {
    const double a = 1, b = 2, c = 3;
    CHECK(rho_inverse(pair_matrix{{{a, b}, {b, c}, {c, a}}}, rho_variant::cyclic) == vec{a, b, c});
    CHECK_THROWS_AS(rho_inverse(pair_matrix{{{1, 2}, {3, 4}}}, rho_variant::cyclic), not_in_image);
    CHECK_THROWS_AS(rho_inverse(pair_matrix{{{1, 2}, {2, 1}, {1, 1}}}, rho_variant::dihedral), not_in_image);

    auto rng = make_stream(4, 0);
    for (int t = 0; t < 1000; ++t) {
        const vec x = distinct_vec(2 + t % 5, rng);
        for (auto v : {rho_variant::cyclic, rho_variant::dihedral, rho_variant::symmetric, rho_variant::unified}) {
            const auto m = rho(v, x);
            REQUIRE(in_image(m, v));
            REQUIRE(rho_inverse(m, v) == x);
        }
    }
}

TEST_CASE("exactly k of the k! row shuffles stay in the cyclic image") {
    for (std::size_t k = 3; k <= 5; ++k) {
        auto rng = make_stream(5, k);
        const vec x = distinct_vec(k, rng);
        const auto m = rho_cyclic(x);
        std::vector<int> p(k);
        std::iota(p.begin(), p.end(), 0);
        std::size_t passing = 0;
        do {
            passing += in_image(act_rows(permutation(p), m), rho_variant::cyclic);
        } while (std::next_permutation(p.begin(), p.end()));
        CHECK(passing == k);
    }
}

TEST_CASE("duplicate entries let extra dihedral shuffles through") {
    // with distinct entries exactly 2k of the (2k)! shuffles pass; a repeated
    // value lets many more row orders reproduce the same image
    const vec x{0.5, 0.2, 0.5, 0.9};
    const auto m = rho_dihedral(x);
    std::vector<int> p(8);
    std::iota(p.begin(), p.end(), 0);
    std::size_t passing = 0;
    do {
        passing += in_image(act_rows(permutation(p), m), rho_variant::dihedral);
    } while (std::next_permutation(p.begin(), p.end()));
    CHECK(passing > 8);

    const vec y{0.1, 0.2, 0.3, 0.4};
    const auto md = rho_dihedral(y);
    std::iota(p.begin(), p.end(), 0);
    passing = 0;
    do {
        passing += in_image(act_rows(permutation(p), md), rho_variant::dihedral);
    } while (std::next_permutation(p.begin(), p.end()));
    CHECK(passing == 8);
}

TEST_CASE("pair matrix CSV") {
    std::ostringstream os;
    write_csv(os, rho_cyclic(vec{0.5, 0.25}));
    CHECK(os.str() == "left,right\n0.5,0.25\n0.25,0.5\n");
}
