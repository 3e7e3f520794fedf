#include <catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include <symforge/oracle.hpp>
#include <symforge/tasks.hpp>

using namespace symforge;

namespace {

dataset from_text(const std::string& text) {
    std::istringstream is(text);
    return read_dataset_csv(is);
}

std::string to_text(const dataset& d) {
    std::ostringstream os;
    write_dataset_csv(os, d);
    return os.str();
}

}  // namespace

TEST_CASE("builtin polynomials") {
    const auto s4 = builtin_polynomial("S_I(4)");
    CHECK(s4.poly.n() == 5);
    CHECK(s4.poly(vec{1, 2, 3, 4, 5}) == 29.0);
    CHECK(builtin_polynomial("Z_I(5)", 10).poly(vec(10, 1.0)) == 5.0);
    CHECK(builtin_polynomial("D_I(5)", 10).poly(vec(10, 1.0)) == 10.0);

    const auto z5 = builtin_polynomial("Z_I(5)", 10);
    CHECK(describe(z5.descriptor) == "Z{1,2,3,6,7}");
    CHECK(describe(builtin_polynomial("D_I(7)").descriptor) == "D{1,2,3,6,7,9,10}");
    // x1 x2^2 + x2 x3^2 + x3 x6^2 + x6 x7^2 + x7 x1^2
    const vec x{0.3, 0.5, 0.7, 0.0, 0.0, 0.11, 0.13, 0.0, 0.0, 0.0};
    const double want = 0.3 * 0.5 * 0.5 + 0.5 * 0.7 * 0.7 + 0.7 * 0.11 * 0.11 + 0.11 * 0.13 * 0.13 + 0.13 * 0.3 * 0.3;
    CHECK(z5.poly(x) == Catch::Approx(want).epsilon(1e-14));

    const auto d5 = builtin_polynomial("D_I(5)", 10);
    const std::vector<int> I{0, 1, 2, 5, 6};
    const auto flip = dihedral_reflection(I, 10);
    CHECK(d5.poly(act(flip, x)) == d5.poly(x));

    try {
        builtin_polynomial("Q_I(3)");
        FAIL("expected rejection");
    } catch (const invalid_descriptor& e) {
        CHECK(std::string(e.what()).find("Z_I(5)") != std::string::npos);
    }
    CHECK_THROWS_AS(builtin_polynomial("Z_I(5)", 6), dimension_error);
}

TEST_CASE("polynomials are exactly invariant under their groups") {
    auto rng = make_stream(21, 0);
    for (const auto& name : builtin_polynomial_names()) {
        const auto spec = builtin_polynomial(name, 10);
        const auto xs = uniform_samples(10, 100, rng);
        const auto rep = check_invariance(spec.poly, spec.descriptor, xs, 0.0);
        INFO(name);
        CHECK(rep.max_violation == 0.0);
    }
    // a wrong group moves the value
    const auto spec = builtin_polynomial("Z_I(5)", 10);
    const auto wrong = group_descriptor::local(group_kind::symmetric, {0, 1, 2, 5, 6}, 10);
    const auto xs = uniform_samples(10, 10, rng);
    CHECK(check_invariance(spec.poly, wrong, xs, 1e-12).max_violation > 1e-6);
}

TEST_CASE("polynomial datasets") {
    const auto spec = builtin_polynomial("D_I(5)", 10);
    const auto a = gen_poly_dataset(spec, 64, 3);
    CHECK(a.size() == 64);
    CHECK(a == gen_poly_dataset(spec, 64, 3));
    CHECK_FALSE(a == gen_poly_dataset(spec, 64, 4));
    for (const auto& x : a.inputs) {
        CHECK_FALSE(has_duplicate_coordinates(x));
        for (double v : x) CHECK((v >= 0.0 && v <= 1.0));
    }
    const auto els = elements(spec.descriptor);
    for (std::size_t r = 0; r < a.size(); ++r) CHECK(spec.poly(act(els[r % els.size()], a.inputs[r])) == a.targets[r]);
    CHECK_THROWS_AS(gen_poly_dataset(spec, 0, 3), empty_dataset);
}

TEST_CASE("splits are disjoint and normalized on the training split") {
    const auto spec = builtin_polynomial("Z_I(5)", 10);
    const auto s = gen_poly_splits(spec, 64, 480, 4800, 0);
    CHECK(s.train.size() == 64);
    CHECK(s.validation.size() == 480);
    CHECK(s.test.size() == 4800);
    std::set<vec> seen(s.train.inputs.begin(), s.train.inputs.end());
    for (const auto* d : {&s.validation, &s.test})
        for (const auto& x : d->inputs) CHECK(seen.insert(x).second);
    CHECK(*std::min_element(s.train.targets.begin(), s.train.targets.end()) == 0.0);
    CHECK(*std::max_element(s.train.targets.begin(), s.train.targets.end()) == 1.0);
    CHECK(s.validation.scaling == s.train.scaling);
    const auto raw = gen_poly_dataset(spec, 480, 0, 2);
    CHECK(s.validation.scaling.denormalize(s.validation.targets[5]) == Catch::Approx(raw.targets[5]).epsilon(1e-14));
}

TEST_CASE("quadrangles") {
    const quadrangle unit{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    CHECK(shoelace_area(unit) == 1.0);
    quadrangle shifted{{unit[1], unit[2], unit[3], unit[0]}};
    CHECK(shoelace_area(shifted) == 1.0);
    quadrangle reversed{{unit[3], unit[2], unit[1], unit[0]}};
    CHECK(shoelace_area(reversed) == 1.0);
    CHECK(signed_area(reversed) == -1.0);

    quadrangle hull;
    CHECK_FALSE(convex_order({{{0, 0}, {2, 0}, {0, 2}, {0.5, 0.5}}}, hull));
    CHECK(convex_order({{{1, 1}, {0, 0}, {0, 1}, {1, 0}}}, hull));
    CHECK(canonical_quadrangle(hull) == unit);

    const auto d = gen_quadrangle_dataset(200, 5);
    CHECK(d.n == 8);
    const std::vector<int> all{0, 1, 2, 3};
    const auto D4 = elements(group_descriptor::local(group_kind::dihedral, all, 4));
    REQUIRE(D4.size() == 8);
    for (std::size_t r = 0; r < d.size(); ++r) {
        const auto q = unflatten_quadrangle(d.inputs[r]);
        CHECK(d.targets[r] > 0.0);
        CHECK(d.targets[r] <= 1.0);
        CHECK(std::abs(shoelace_area(q) - d.targets[r]) <= 1e-12);
        CHECK(signed_area(q) > 0.0);
        CHECK(canonical_quadrangle(q) == q);
        for (double v : d.inputs[r]) CHECK((v >= 0.0 && v <= 2.0));
        for (const auto& g : D4) {
            const auto moved = unflatten_quadrangle(act_blocks(g, d.inputs[r], 2));
            CHECK(canonical_quadrangle(moved) == q);
            CHECK(std::abs(shoelace_area(moved) - d.targets[r]) <= 1e-12);
        }
    }
}

TEST_CASE("CSV round trip and errors") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto d = gen_poly_dataset(builtin_polynomial("S_I(4)"), 20, seed);
        const auto back = from_text(to_text(d));
        CHECK(back.inputs == d.inputs);
        CHECK(back.targets == d.targets);
    }
    try {
        from_text("x_1,x_3,y\n0.1,0.2,0.3\n");
        FAIL("expected parse error");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find("x_2") != std::string::npos);
        CHECK(e.line() == 1);
    }
    try {
        from_text("x_1,x_2\n0.1,0.2\n");
        FAIL("expected parse error");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find("'y'") != std::string::npos);
    }
    try {
        from_text("x_1,y\n0.1,0.2\n0.3\n");
        FAIL("expected parse error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(from_text("x_1,y\n0.1,abc\n"), parse_error);
    CHECK_THROWS_AS(from_text(""), empty_dataset);
    CHECK_THROWS_AS(from_text("x_1,y\n"), empty_dataset);
}
