#include "slowcert/examples.hpp"
#include "slowcert/expression.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace slowcert;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double eval(const std::string& s, const Vec& x, double t, const Vec& tau) {
  return parse_expression(s, {static_cast<std::size_t>(x.size()), static_cast<std::size_t>(tau.size()), true, false})(
      x, t, tau);
}

}  // namespace

TEST_CASE("constants and precedence") {
  const Vec none;
  CHECK(eval("0", none, 0, none) == 0.0);
  CHECK(eval("1 + 2 * 3", none, 0, none) == 7.0);
  CHECK(eval("(1 + 2) * 3", none, 0, none) == 9.0);
  CHECK(eval("2 ^ 3 ^ 2", none, 0, none) == 512.0);
  CHECK(eval("-2 ^ 2", none, 0, none) == -4.0);
  CHECK(eval("2 ^ -1", none, 0, none) == 0.5);
  CHECK(eval("8 / 4 / 2", none, 0, none) == 1.0);
  CHECK_THAT(eval("pi - e", none, 0, none), WithinAbs(std::numbers::pi - std::numbers::e, 1e-15));
  CHECK(eval("1.5e2", none, 0, none) == 150.0);
}

TEST_CASE("every function evaluates") {
  const Vec none;
  CHECK_THAT(eval("sin(1)+cos(1)+tan(0.3)+exp(0.5)+log(2)+sqrt(3)+tanh(0.4)+abs(-2)", none, 0, none),
             WithinAbs(std::sin(1) + std::cos(1) + std::tan(0.3) + std::exp(0.5) + std::log(2) + std::sqrt(3) +
                           std::tanh(0.4) + 2.0,
                       1e-14));
}

TEST_CASE("variables bind to state, time and parameters") {
  Vec x(2), tau(3);
  x << 1.5, -2.0;
  tau << 0.1, 0.2, 0.3;
  CHECK_THAT(eval("x1*x2 + t - tau3", x, 4.0, tau), WithinAbs(-3.0 + 4.0 - 0.3, 1e-15));
  const Expression p = parse_expression("cos(s)^2", {0, 0, false, true});
  CHECK_THAT(p.of_s(0.4), WithinAbs(std::cos(0.4) * std::cos(0.4), 1e-15));
}

TEST_CASE("round trip against hand-coded fields") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3), ut(0, 10), up(0, 1);
  const auto scalar = parse_expression("x1/sqrt(1+x1^2)*(1-90*tau1)", {1, 1, true, false});
  const auto sat = parse_expression("tanh(5*x2)", {2, 0, true, false});
  const auto fric = parse_expression("-tau1*x2 - (1+exp(-t))*x1 - (tau2 + tau3*exp(-x2^2/(1+x2^2)))*tanh(x2)",
                                     {2, 3, true, false});
  const auto pend = parse_expression("-x1 - (1 + tau1*0.5*(1+sin(x1+t)))*x2", {2, 1, true, false});
  for (int i = 0; i < 1000; ++i) {
    Vec x(2), tau(3);
    x << u(rng), u(rng);
    tau << up(rng), up(rng), up(rng);
    const double t = ut(rng);
    const Vec x1 = x.head(1), tau1 = tau.head(1);
    CHECK_THAT(scalar(x1, t, tau1), WithinAbs(x[0] / std::sqrt(1 + x[0] * x[0]) * (1 - 90 * tau[0]), 1e-12));
    CHECK_THAT(sat(x, t, Vec()), WithinAbs(std::tanh(5 * x[1]), 1e-12));
    const double mu = x[1] * x[1] / (1 + x[1] * x[1]);
    CHECK_THAT(fric(x, t, tau),
               WithinAbs(-tau[0] * x[1] - (1 + std::exp(-t)) * x[0] -
                             (tau[1] + tau[2] * std::exp(-mu)) * std::tanh(x[1]),
                         1e-12));
    CHECK_THAT(pend(x, t, tau1), WithinAbs(pendulum_field(x, tau[0], 0.5 * (1 + std::sin(x[0] + t)))[1], 1e-12));
  }
}

TEST_CASE("syntax errors carry a position") {
  try {
    (void)parse_expression("1 + * 2");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
  CHECK_THROWS_AS(parse_expression("(1 + 2"), ParseError);
  CHECK_THROWS_AS(parse_expression("1 2"), ParseError);
  CHECK_THROWS_AS(parse_expression(""), ParseError);
  CHECK_THROWS_AS(parse_expression("3 $ 4"), ParseError);
}

TEST_CASE("arity and identifier errors") {
  CHECK_THROWS_AS(parse_expression("sin(1, 2)"), ParseError);
  CHECK_THROWS_AS(parse_expression("sin"), ParseError);
  CHECK_THROWS_AS(parse_expression("foo(1)"), ParseError);
  CHECK_THROWS_AS(parse_expression("y1 + 1"), ParseError);
  CHECK_THROWS_AS(parse_expression("x3", {2, 1, true, false}), ParseError);
  CHECK_THROWS_AS(parse_expression("tau2", {2, 1, true, false}), ParseError);
  CHECK_THROWS_AS(parse_expression("x0", {2, 1, true, false}), ParseError);
  CHECK_THROWS_AS(parse_expression("t", {1, 1, false, true}), ParseError);
  CHECK_THROWS_AS(parse_expression("s", {1, 1, true, false}), ParseError);
}
