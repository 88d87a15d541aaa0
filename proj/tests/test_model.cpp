#include <doctest.h>

#include <cmath>

#include "gbsvie/model.hpp"

using namespace gbsvie;

namespace {

ProblemSpec basic_spec() {
    ProblemSpec spec;
    spec.band = {0.5, 1.0};
    spec.tgrid = {1.0, 100};
    spec.xgrid = {-6.0, 6.0, 121};  // dx = 0.1, cfl = 1.0
    spec.gen = GeneratorSpec::from_expression(Expression::parse("0"), 0.0);
    spec.terminal = TerminalFamily::from_expression(Expression::parse("x"));
    return spec;
}

}  // namespace

TEST_CASE("cfl_number arithmetic") {
    ProblemSpec spec;
    spec.tgrid = {1e-4 * 4.0, 4};  // dt = 1e-4
    spec.xgrid = {-5e-3 * 4, 5e-3 * 4, 5};  // dx = 1e-2

    spec.band = {0.5, 1.0};
    CHECK(cfl_number(spec) == doctest::Approx(1.0));
    spec.band = {0.25, 0.5};
    CHECK(cfl_number(spec) == doctest::Approx(0.25));
    spec.band = {0.5, 2.0};
    CHECK(cfl_number(spec) == doctest::Approx(4.0));
}

TEST_CASE("validate_problem: zero generator passes everything") {
    ProblemSpec spec = basic_spec();
    ValidationReport rep = validate_problem(spec);
    CHECK(rep.ok());
    CHECK(rep.all_proxies_pass());
    CHECK(rep.cfl == doctest::Approx(1.0));
}

TEST_CASE("validate_problem: CFL violation is a hard error, substep waives it") {
    ProblemSpec spec = basic_spec();
    spec.band = {0.5, 2.0};  // cfl = 4
    ValidationReport rep = validate_problem(spec);
    CHECK(!rep.ok());
    REQUIRE(!rep.hard_errors.empty());
    CHECK(rep.hard_errors.front().find("CFL") != std::string::npos);

    spec.substep = true;
    CHECK(validate_problem(spec).ok());
}

TEST_CASE("validate_problem: band and grid invariants") {
    ProblemSpec spec = basic_spec();
    spec.band = {1.0, 0.5};
    CHECK(!validate_problem(spec).ok());

    spec = basic_spec();
    spec.band = {0.0, 1.0};
    CHECK(!validate_problem(spec).ok());

    spec = basic_spec();
    spec.xgrid = {0.5, 6.0, 121};  // must straddle 0
    CHECK(!validate_problem(spec).ok());

    spec = basic_spec();
    spec.alpha = 1.0;
    CHECK(!validate_problem(spec).ok());
}

TEST_CASE("validate_problem: sampled Lipschitz audit") {
    ProblemSpec spec = basic_spec();
    spec.gen = GeneratorSpec::from_expression(Expression::parse("sin(y)"), 1.0);
    ValidationReport rep = validate_problem(spec);
    CHECK(rep.ok());
    const ProxyResult* h2 = rep.proxy("H2_lipschitz");
    REQUIRE(h2 != nullptr);
    CHECK(h2->pass);        // |sin y1 - sin y2| <= |y1 - y2|
    CHECK(h2->stat <= 1.0 + 1e-12);

    // under-declared constant is flagged, not fatal
    spec.gen = GeneratorSpec::from_expression(Expression::parse("3*y"), 1.0);
    rep = validate_problem(spec);
    CHECK(rep.ok());
    h2 = rep.proxy("H2_lipschitz");
    REQUIRE(h2 != nullptr);
    CHECK(!h2->pass);
    CHECK(h2->stat == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("validate_problem: jump in t trips the t-modulus proxy") {
    ProblemSpec spec = basic_spec();
    spec.gen = GeneratorSpec::from_expression(Expression::parse("step(t - 0.5)*y"), 1.0);
    ValidationReport rep = validate_problem(spec);
    CHECK(rep.ok());  // warning, not hard error
    const ProxyResult* h4 = rep.proxy("H4_generator_t_modulus");
    REQUIRE(h4 != nullptr);
    CHECK(!h4->pass);

    // a jump in s is allowed: s enters only through the integral
    spec.gen = GeneratorSpec::from_expression(Expression::parse("step(s - 0.5)*y"), 1.0);
    rep = validate_problem(spec);
    const ProxyResult* h4b = rep.proxy("H4_generator_t_modulus");
    REQUIRE(h4b != nullptr);
    CHECK(h4b->pass);
}

TEST_CASE("validate_problem: non-finite terminal on grid is a hard error") {
    ProblemSpec spec = basic_spec();
    spec.terminal = TerminalFamily::from_expression(Expression::parse("1/(x - 0.2)"));
    // x = 0.2 is a grid node (dx = 0.1) -> inf on grid
    ValidationReport rep = validate_problem(spec);
    CHECK(!rep.ok());
}

TEST_CASE("validate_problem is deterministic given the probe seed") {
    ProblemSpec spec = basic_spec();
    spec.gen = GeneratorSpec::from_expression(Expression::parse("sin(y) + cos(z)*x"), 2.0);
    ValidationReport a = validate_problem(spec);
    ValidationReport b = validate_problem(spec);
    REQUIRE(a.proxies.size() == b.proxies.size());
    for (std::size_t i = 0; i < a.proxies.size(); ++i) {
        CHECK(a.proxies[i].pass == b.proxies[i].pass);
        CHECK(a.proxies[i].stat == b.proxies[i].stat);  // bitwise
    }
}

TEST_CASE("triangular field: storage and contract violation") {
    TriangularField z(4, 3);
    z.at(0, 0, 0) = 1.0;
    z.at(0, 4, 2) = 2.0;
    z.at(4, 4, 1) = 3.0;
    CHECK(z.at(0, 4, 2) == 2.0);
    CHECK_THROWS_AS(z.at(3, 2, 0), std::out_of_range);   // k < i
    CHECK_THROWS_AS(z.at(0, 5, 0), std::out_of_range);
    CHECK_THROWS_AS(z.at(0, 0, 3), std::out_of_range);

    // norm is finite and scales linearly in the field
    TriangularField w(4, 3);
    for (int i = 0; i <= 4; ++i)
        for (int k = i; k <= 4; ++k)
            for (int j = 0; j < 3; ++j) w.at(i, k, j) = 1.0;
    double n1 = w.norm(2.0, 0.25);
    CHECK(std::isfinite(n1));
    for (int i = 0; i <= 4; ++i)
        for (int k = i; k <= 4; ++k)
            for (int j = 0; j < 3; ++j) w.at(i, k, j) = 2.0;
    CHECK(w.norm(2.0, 0.25) == doctest::Approx(2.0 * n1));
}

TEST_CASE("space grid: nearest node lookup") {
    SpaceGrid g{-1.0, 1.0, 21};  // dx = 0.1
    CHECK(g.nearest_index(0.0) == 10);
    CHECK(g.nearest_index(0.04) == 10);
    CHECK(g.nearest_index(0.06) == 11);
    CHECK(g.nearest_index(-5.0) == 0);
    CHECK(g.nearest_index(5.0) == 20);
}
