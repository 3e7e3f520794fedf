#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include <symforge/selection.hpp>

using namespace symforge;

namespace {

vec random_vec(std::size_t n, rng_engine& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    vec x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

std::vector<row_pair> nonzero_first_block(const pair_matrix& m, std::size_t n) {
    std::vector<row_pair> out;
    for (std::size_t r = 0; r < n * n; ++r)
        if (m.rows[r] != row_pair{0.0, 0.0}) out.push_back(m.rows[r]);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<int>> subsets(std::size_t n, std::size_t k) {
    std::vector<std::vector<int>> out;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
        std::vector<int> I;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) I.push_back(static_cast<int>(i));
        out.push_back(I);
    }
    return out;
}

}  // namespace

TEST_CASE("M1 moves the index set to the leading slots") {
    const auto G = group_descriptor::local(group_kind::cyclic, {0, 1, 3}, 4);
    const auto m1 = build_m1(G);
    CHECK(m1.entries.size() == 3);
    CHECK(m1.apply(vec{1, 2, 3, 4}) == vec{1, 2, 4, 0});

    const auto full = build_m1(group_descriptor::local(group_kind::symmetric, {0, 1, 2, 3}, 4));
    CHECK(full.apply(vec{5, 6, 7, 8}) == vec{5, 6, 7, 8});

    const auto tail = build_m1(group_descriptor::local(group_kind::symmetric, {3, 4}, 5));
    CHECK(tail.apply(vec{1, 2, 3, 4, 5}) == vec{4, 5, 0, 0, 0});
}

TEST_CASE("M2 row counts and shape") {
    for (auto kind : {group_kind::symmetric, group_kind::cyclic, group_kind::dihedral}) {
        const auto G = group_descriptor::local(kind, {1, 2, 4, 5}, 7);
        const auto m2 = build_m2(G);
        CHECK(m2.rows == 49);
        CHECK(m2.cols == 49);
        std::set<int> rows;
        for (auto [r, c] : m2.entries) CHECK(rows.insert(r).second);
        CHECK(m2.nonzero_rows() == (kind == group_kind::dihedral ? 8u : 4u));
    }
}

TEST_CASE("hand trace at n = 3, I = {1, 2}") {
    const double a = 0.3, b = 0.6, c = 0.9;
    const auto sp = make_selection(group_descriptor::local(group_kind::cyclic, {0, 1}, 3));
    std::set<int> cols;
    for (auto [r, col] : sp.m2.entries) cols.insert(col);
    // row-major slots (1,2) and (2,1) are unified rows 2 and 4 (1-based)
    CHECK(cols == std::set<int>{1, 3});
    const auto front = apply_pipeline_front(sp, vec{a, b, c});
    CHECK(front.row_count() == 12);
    CHECK(nonzero_first_block(front, 3) == std::vector<row_pair>{{a, b}, {b, a}});
    CHECK(front.rows[9] == row_pair{0.0, 0.0});
    CHECK(front.rows[10] == row_pair{0.0, 0.0});
    CHECK(front.rows[11] == row_pair{c, 0.0});
}

TEST_CASE("full symmetric selection leaves an empty complement") {
    const vec x{0.2, 0.4, 0.6, 0.8};
    const auto sp = make_selection(group_descriptor::local(group_kind::symmetric, {0, 1, 2, 3}, 4));
    const auto front = apply_pipeline_front(sp, x);
    CHECK(nonzero_first_block(front, 4) == std::vector<row_pair>{{0.2, 0.2}, {0.4, 0.4}, {0.6, 0.6}, {0.8, 0.8}});
    for (std::size_t r = 16; r < 20; ++r) CHECK(front.rows[r] == row_pair{0.0, 0.0});

    const auto zero = apply_pipeline_front(sp, vec(4, 0.0));
    for (const auto& r : zero.rows) CHECK(r == row_pair{0.0, 0.0});
}

TEST_CASE("pipeline front equals the per-kind lifting of the restricted input") {
    auto rng = make_stream(7, 0);
    const std::size_t n = 6;
    for (auto kind : {group_kind::symmetric, group_kind::cyclic, group_kind::dihedral})
        for (std::size_t k = 2; k <= 5; ++k)
            for (const auto& I : subsets(n, k)) {
                const auto G = group_descriptor::local(kind, I, n);
                const auto sp = make_selection(G);
                for (int t = 0; t < 5; ++t) {
                    const vec x = random_vec(n, rng);
                    vec sub;
                    for (int i : I) sub.push_back(x[i]);
                    auto want = rho(rho_variant_for(kind), sub).rows;
                    std::sort(want.begin(), want.end());
                    REQUIRE(nonzero_first_block(apply_pipeline_front(sp, x), n) == want);

                    auto picked = selected_pairs(sp, x);
                    std::sort(picked.begin(), picked.end());
                    REQUIRE(picked == want);
                }
            }
}

TEST_CASE("row multiset and complement are invariant under the arm's group") {
    auto rng = make_stream(8, 0);
    for (auto kind : {group_kind::symmetric, group_kind::cyclic, group_kind::dihedral}) {
        const auto G = group_descriptor::local(kind, {0, 2, 3, 5}, 7);
        const auto sp = make_selection(G);
        for (int t = 0; t < 20; ++t) {
            const vec x = random_vec(7, rng);
            const auto base = apply_pipeline_front(sp, x);
            for (const auto& h : elements(G)) {
                const auto moved = apply_pipeline_front(sp, act(h, x));
                REQUIRE(nonzero_first_block(moved, 7) == nonzero_first_block(base, 7));
                REQUIRE(std::equal(moved.rows.begin() + 49, moved.rows.end(), base.rows.begin() + 49));
            }
        }
    }
}

TEST_CASE("arm encoding") {
    const auto z = encode_arm(group_descriptor::local(group_kind::cyclic, {3, 5, 6, 8}, 10));
    CHECK(z.bits == std::vector<std::uint8_t>{0, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 0, 1});
    const auto s = encode_arm(group_descriptor::local(group_kind::symmetric, {0, 1, 2, 3}, 4));
    CHECK(s.bits == std::vector<std::uint8_t>{1, 1, 1, 1, 1, 0, 0});
    CHECK_THROWS_AS(decode_arm(std::vector<std::uint8_t>{1, 1, 0, 1, 1, 0}), invalid_descriptor);
    CHECK_THROWS_AS(decode_arm(std::vector<std::uint8_t>{1, 1, 0, 0, 0, 0}), invalid_descriptor);
}

TEST_CASE("arm enumeration") {
    CHECK(enumerate_arms(3).size() == 6);
    CHECK(enumerate_arms(2).size() == 1);
    CHECK(enumerate_arms(2).front().descriptor.kind() == group_kind::symmetric);
    for (std::size_t n = 2; n <= 10; ++n) CHECK(enumerate_arms(n).size() == arm_count(n));
    CHECK(arm_count(10) == 2949);
    CHECK_THROWS_AS(enumerate_arms(15), enumeration_too_large);

    const auto arms = enumerate_arms(7);
    std::set<std::vector<std::uint8_t>> seen;
    for (const auto& a : arms) {
        CHECK(seen.insert(a.bits).second);
        CHECK(decode_arm(a.bits) == a.descriptor);
    }
}

TEST_CASE("argmax: self-match, ties and the closed form") {
    const auto arms = enumerate_arms(6);
    const auto G = group_descriptor::local(group_kind::dihedral, {0, 2, 4}, 6);
    vec mu(9, -1.0);
    for (int i : G.index_set()) mu[i] = 1.0;
    mu[6 + kind_slot(group_kind::dihedral)] = 1.0;
    CHECK(argmax_arm(mu, arms).descriptor == G);

    const vec zero(9, 0.0);
    const auto& tie = argmax_arm(zero, arms);
    for (const auto& a : arms) CHECK_FALSE(a.bits < tie.bits);

    auto rng = make_stream(9, 0);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        vec m(9);
        for (auto& v : m) v = nd(rng);
        const auto& scan = argmax_arm(m, arms);
        const auto closed = argmax_arm_closed_form(m);
        REQUIRE(score(m, scan) == Catch::Approx(score(m, closed)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(argmax_arm(zero, std::span<const arm_feature>{}), invalid_descriptor);
}

TEST_CASE("matrix dumps") {
    const auto sp = make_selection(group_descriptor::local(group_kind::cyclic, {0, 1, 3}, 4));
    std::ostringstream os;
    write_triples_csv(os, sp.m1);
    CHECK(os.str() == "row,col,value\n0,0,1\n1,1,1\n2,3,1\n");
    std::ostringstream dense;
    write_dense_text(dense, sp.m1);
    CHECK(dense.str() == "1...\n.1..\n...1\n....\n");
}
