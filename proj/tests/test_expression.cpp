#include <doctest.h>

#include <cmath>
#include <random>

#include "gbsvie/expression.hpp"

using gbsvie::EvalContext;
using gbsvie::Expression;

TEST_CASE("expression: basic arithmetic and precedence") {
    CHECK(Expression::parse("x^2")({0, 0, 3, 0, 0}) == doctest::Approx(9.0));
    CHECK(Expression::parse("max(x,0) + 0.5*y")({0, 0, -1, 2, 0}) == doctest::Approx(1.0));
    CHECK(Expression::parse("2+3*4")({}) == doctest::Approx(14.0));
    CHECK(Expression::parse("(2+3)*4")({}) == doctest::Approx(20.0));
    CHECK(Expression::parse("2^3^1")({}) == doctest::Approx(8.0));
    CHECK(Expression::parse("-x^2")({0, 0, 2, 0, 0}) == doctest::Approx(-4.0));
    CHECK(Expression::parse("x^-1")({0, 0, 4, 0, 0}) == doctest::Approx(0.25));
    CHECK(Expression::parse("1 - 2 - 3")({}) == doctest::Approx(-4.0));
    CHECK(Expression::parse("t + s + z")({1, 2, 0, 0, 4}) == doctest::Approx(7.0));
}

TEST_CASE("expression: functions") {
    CHECK(Expression::parse("step(x)")({0, 0, 0.0, 0, 0}) == 1.0);  // step(0) = 1
    CHECK(Expression::parse("step(x)")({0, 0, -1e-9, 0, 0}) == 0.0);
    CHECK(Expression::parse("pos(x)")({0, 0, -3, 0, 0}) == 0.0);
    CHECK(Expression::parse("pos(x)")({0, 0, 3, 0, 0}) == 3.0);
    CHECK(Expression::parse("neg(x)")({0, 0, -3, 0, 0}) == 3.0);
    CHECK(Expression::parse("abs(x) - sqrt(x^2)")({0, 0, -1.5, 0, 0}) == doctest::Approx(0.0));
    CHECK(Expression::parse("exp(log(x))")({0, 0, 2.5, 0, 0}) == doctest::Approx(2.5));
    CHECK(Expression::parse("min(sin(x), cos(x))")({0, 0, 0, 0, 0}) == doctest::Approx(0.0));
    CHECK(Expression::parse("sin(pi)")({}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("expression: domain and syntax errors") {
    CHECK_THROWS_AS(Expression::parse("log(x)")({0, 0, -1, 0, 0}), gbsvie::EvalError);
    CHECK_THROWS_AS(Expression::parse("sqrt(x)")({0, 0, -1, 0, 0}), gbsvie::EvalError);

    CHECK_THROWS_AS(Expression::parse("2 +"), gbsvie::ParseError);
    CHECK_THROWS_AS(Expression::parse("foo(x)"), gbsvie::ParseError);
    CHECK_THROWS_AS(Expression::parse("max(x)"), gbsvie::ParseError);
    CHECK_THROWS_AS(Expression::parse("(x"), gbsvie::ParseError);
    CHECK_THROWS_AS(Expression::parse(""), gbsvie::ParseError);
    CHECK_THROWS_AS(Expression::parse("x 2"), gbsvie::ParseError);

    try {
        Expression::parse("x + qq*2");
        FAIL("expected ParseError");
    } catch (const gbsvie::ParseError& e) {
        CHECK(e.offset == 4);  // byte position of the unknown identifier
    }
}

TEST_CASE("expression: variable usage and constants") {
    Expression e = Expression::parse("0.5*y + sin(z)");
    CHECK(e.uses('y'));
    CHECK(e.uses('z'));
    CHECK(!e.uses('x'));
    CHECK(!e.uses('t'));

    Expression c = Expression::parse("1 + 2*3");
    CHECK(c.is_constant());
    CHECK(c.constant_value() == doctest::Approx(7.0));

    Expression zero;
    CHECK(zero.is_constant());
    CHECK(zero.constant_value() == 0.0);
}

TEST_CASE("expression: print/parse round-trip evaluates identically") {
    const char* samples[] = {
        "x^2 - 3*x + 1",
        "max(x,0) + 0.5*y - neg(z)",
        "exp(-t)*sin(3*x) + cos(s)",
        "step(s - 0.5)*y + sqrt(abs(x))",
        "(t + s)/(1 + x^2) - min(y, z)",
    };
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const char* text : samples) {
        Expression a = Expression::parse(text);
        Expression b = Expression::parse(a.str());
        for (int i = 0; i < 200; ++i) {
            EvalContext ctx{u(rng), u(rng), u(rng), u(rng), u(rng)};
            CAPTURE(text);
            CHECK(a(ctx) == b(ctx));  // bitwise: same program modulo folding
        }
    }
}
