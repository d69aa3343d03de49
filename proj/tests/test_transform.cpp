#include "slowcert/certificate.hpp"
#include "slowcert/examples.hpp"
#include "slowcert/simverify.hpp"
#include "slowcert/transform.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace slowcert;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MuFunction saturating_mu() {
  MuFunction m;
  m.mu = [](double l) { return l / (1.0 + l); };
  m.mu_prime = [](double l) { return 1.0 / ((1.0 + l) * (1.0 + l)); };
  return m;
}

// With V~ = x^2 + 0.1 tau x^2/(1+x^2) and x' = -tau x/(1+x^2) the frozen
// derivative is at most -2 tau x^2/(1+x^2) <= -tau mu(V~) for mu(l) = l/(1+l),
// and |V~_tau| <= 0.1 mu(V~) because V~ >= x^2.
struct MuExample {
  LyapunovFamily tilde;
  SlowSystem sys;
};

MuExample mu_example() {
  MuExample e;
  e.sys.frozen.dim_state = 1;
  e.sys.frozen.dim_param = 1;
  e.sys.frozen.f = [](const Vec& x, double, const Vec& tau) {
    return examples::vec1(-tau[0] * x[0] / (1.0 + x[0] * x[0]));
  };
  e.sys.path.p = [](double s) { return examples::vec1(1.0 + 0.5 * std::sin(s)); };
  e.sys.path.p_prime = [](double s) { return examples::vec1(0.5 * std::cos(s)); };
  e.sys.path.period = 2.0 * oracle::pi;
  LyapunovFamily& L = e.tilde;
  L.V = [](const Vec& x, double, const Vec& tau) {
    const double r = x[0] * x[0];
    return r + 0.1 * tau[0] * r / (1.0 + r);
  };
  L.V_x = [](const Vec& x, double, const Vec& tau) {
    const double r = x[0] * x[0];
    return examples::vec1(2.0 * x[0] * (1.0 + 0.1 * tau[0] / ((1.0 + r) * (1.0 + r))));
  };
  L.V_t = [](const Vec&, double, const Vec&) { return 0.0; };
  L.V_tau = [](const Vec& x, double, const Vec&) {
    const double r = x[0] * x[0];
    return examples::vec1(0.1 * r / (1.0 + r));
  };
  L.alpha1 = [](double s) { return s * s; };
  L.alpha2 = [](double s) { return 1.2 * s * s; };
  L.q = [](const Vec& tau) { return tau[0]; };
  L.c_a = 0.2;
  L.c_b = 2.0 * oracle::pi * 0.99;
  L.T = 2.0 * oracle::pi;
  L.mu = saturating_mu();
  return e;
}

}  // namespace

TEST_CASE("identity mu gives k(r) = r^2") {
  const KFunction k(identity_mu());
  CHECK(k.B() == 1.0);
  for (double r : {1e-6, 1e-3, 0.5, 1.0, 3.0, 100.0}) CHECK_THAT(k(r), WithinRel(r * r, 1e-6));
}

TEST_CASE("saturating mu has the closed-form k") {
  const KFunction k(saturating_mu());
  CHECK_THAT(k.B(), WithinRel(1.0, 1e-12));
  for (double r : {1e-4, 0.2, 1.0, 4.0, 20.0})
    CHECK_THAT(k(r), WithinRel(r * r * std::exp(2.0 * (r - 1.0)), 1e-8));
}

TEST_CASE("k' mu = 2 B k") {
  for (const MuFunction& mu : {identity_mu(), saturating_mu()}) {
    const KFunction k(mu);
    for (double r : {1e-5, 0.01, 0.7, 1.0, 9.0})
      CHECK_THAT(k.prime(r) * mu(r), WithinRel(2.0 * k.B() * k(r), 1e-8));
  }
}

TEST_CASE("k' vanishes at the origin") {
  const KFunction k(identity_mu());
  CHECK(k.prime(0.0) == 0.0);
  CHECK(k.prime(1e-8) < 1e-6);
  CHECK_THROWS_AS(k.prime(-1.0), DomainError);
  CHECK(k(0.0) == 0.0);
}

TEST_CASE("k' respects the power bound on (0, 1]") {
  const KFunction k(saturating_mu());
  for (double r : {1e-6, 1e-3, 0.1, 0.5, 1.0}) CHECK(k.prime(r) <= k.prime_power_bound(r) * (1 + 1e-9));
}

TEST_CASE("exponents below the knee flush to zero") {
  MuFunction steep;
  steep.mu = [](double l) { return l; };
  steep.mu_prime = [](double) { return 1.0; };
  steep.B = 200.0;  // xi = 400: k(r) = r^400
  steep.divergence_declared = true;
  const KFunction k(steep);
  CHECK(k(1e-3) == 0.0);
  CHECK(k.prime(1e-3) == 0.0);
  CHECK(k(0.999) > 0.0);
}

TEST_CASE("B is the grid sup of mu' on [0, 1]") {
  MuFunction clipped;
  clipped.mu = [](double l) { return std::max(0.0, std::sin(l)); };
  CHECK_THAT(stiffness_B(clipped), WithinAbs(1.0, 1e-8));
  MuFunction flat;
  flat.mu = [](double) { return 0.0; };
  CHECK_THROWS_AS(stiffness_B(flat), ConfigError);
}

TEST_CASE("mu validation") {
  CHECK_NOTHROW(validate_mu(saturating_mu()));
  MuFunction shifted;
  shifted.mu = [](double l) { return l + 0.1; };
  CHECK_THROWS_AS(validate_mu(shifted), ConfigError);
  MuFunction convergent;  // int_1^inf 1/l^2 < inf
  convergent.mu = [](double l) { return l * l; };
  CHECK_THROWS_AS(validate_mu(convergent), ConfigError);
}

TEST_CASE("transformed constants scale by 2B and the threshold is unchanged") {
  const MuExample e = mu_example();
  const LyapunovFamily L = transform_family(e.tilde);
  CHECK_THAT(L.c_a, WithinRel(2.0 * e.tilde.c_a, 1e-12));
  CHECK_THAT(L.c_b, WithinRel(2.0 * e.tilde.c_b, 1e-12));
  Vec tau(1);
  tau << 0.7;
  CHECK_THAT(L.q(tau), WithinRel(2.0 * 0.7, 1e-12));
  CertificateOptions o;
  o.p_bar = 0.5;
  const Certificate c = build_certificate(L, e.sys.with_alpha(1.0), o);
  const double expected = 2.0 * e.tilde.T * e.tilde.c_a * 0.5 / e.tilde.c_b;
  CHECK_THAT(c.threshold_ugas, WithinRel(expected, 1e-12));
}

TEST_CASE("transformed gradients follow the chain rule") {
  const MuExample e = mu_example();
  const LyapunovFamily L = transform_family(e.tilde);
  Vec x(1), tau(1);
  x << 0.8;
  tau << 1.2;
  const double h = 1e-6;
  Vec xp = x, xm = x;
  xp[0] += h;
  xm[0] -= h;
  CHECK_THAT(L.grad_x(x, 0.0, tau)[0], WithinRel((L.V(xp, 0, tau) - L.V(xm, 0, tau)) / (2 * h), 1e-6));
}

TEST_CASE("mu-weighted hypotheses hold for the test family") {
  const MuExample e = mu_example();
  FalsifyOptions o;
  o.grid.samples = 5000;
  o.grid.radius = 5.0;
  const auto reps = falsify_assumption2(e.tilde, e.sys, o);
  for (const auto& r : reps) {
    INFO(r.condition << " worst slack " << r.worst_slack);
    CHECK(r.passed());
  }
}
