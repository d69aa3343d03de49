#include "slowcert/certificate.hpp"
#include "slowcert/examples.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace slowcert;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("construction rejects degenerate constants") {
  ExampleBundle b = pendulum_example();
  LyapunovFamily bad = b.family;
  bad.c_b = 0.0;
  CHECK_THROWS_AS(build_certificate(bad, b.sys), ConfigError);
  bad = b.family;
  bad.T = -1.0;
  CHECK_THROWS_AS(build_certificate(bad, b.sys), ConfigError);
  bad = b.family;
  bad.c_a = -1.0;
  CHECK_THROWS_AS(build_certificate(bad, b.sys), ConfigError);
  CHECK_THROWS_AS(build_certificate(b.family, b.sys.with_alpha(0.0)), ConfigError);
  bad = b.family;
  MuFunction m;
  m.mu = [](double l) { return l / (1 + l); };
  bad.mu = m;
  CHECK_THROWS_AS(build_certificate(bad, b.sys), ConfigError);
}

TEST_CASE("tau-independent families have a zero threshold") {
  const ExampleBundle b = scalar_example();
  const Certificate c = build_certificate(b.family, b.sys.with_alpha(0.5));
  CHECK(c.threshold_ugas == 0.0);
  CHECK(c.threshold_iss == 0.0);
  CHECK_FALSE(c.below_threshold);
}

TEST_CASE("thresholds and decrease coefficient follow the constants") {
  const ExampleBundle b = friction_example();
  CertificateOptions o;
  o.p_bar = 0.25 * std::sqrt(3.0);
  o.m_bar = 0.75 / 882.0;
  const Certificate c = build_certificate(b.family, b.sys.with_alpha(10.0), o);
  const double T = 2.0 * oracle::pi, cb = oracle::pi / 882.0;
  CHECK_THAT(c.threshold_ugas, WithinRel(2.0 * T * 1.0 * o.p_bar.value() / cb, 1e-12));
  CHECK_THAT(c.threshold_iss, WithinRel(2.0 * c.threshold_ugas, 1e-15));
  CHECK_THAT(c.decrease_coeff, WithinRel(cb / (2 * T) * std::exp(-10.0 * T * *o.m_bar / 2.0), 1e-12));
  CHECK(c.below_threshold);
}

TEST_CASE("hat-alpha bounds sandwich the certificate") {
  const ExampleBundle b = friction_example();
  const Certificate c = build_certificate(b.family, b.sys.with_alpha(50.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-4, 4), ut(0, 2000);
  for (int i = 0; i < 500; ++i) {
    Vec x(2);
    x << ux(rng), ux(rng);
    const double t = ut(rng);
    const double v = eval_certificate(c, x, t);
    CHECK(v >= c.hat_alpha1(x.norm()) * (1 - 1e-12));
    CHECK(v <= c.hat_alpha2(x.norm()) * (1 + 1e-12));
  }
}

TEST_CASE("certificate derivative matches central differences along the flow") {
  const ExampleBundle b = friction_example();
  const Certificate c = build_certificate(b.family, b.sys.with_alpha(3.0));
  for (double t : {0.5, 4.0, 17.0}) {
    Vec x(2);
    x << 1.2, -0.7;
    const double h = 1e-5;
    const Vec f = eval_slow_field(c.sys, x, t);
    const double up = eval_certificate(c, x + h * f, t + h);
    const double dn = eval_certificate(c, x - h * f, t - h);
    CHECK_THAT(certificate_derivative(c, x, t), WithinRel((up - dn) / (2 * h), 1e-6));
  }
}

TEST_CASE("certificate value is zero at the origin and rejects negative time") {
  const ExampleBundle b = pendulum_example();
  const Certificate c = build_certificate(b.family, b.sys);
  CHECK(eval_certificate(c, Vec::Zero(2), 1.0) == 0.0);
  CHECK_THROWS_AS(eval_certificate(c, Vec::Ones(2), -1.0), DomainError);
}

TEST_CASE("huge gains overflow in value but not in log form") {
  const ExampleBundle b = scalar_example();
  const Certificate c = build_certificate(b.family, b.sys.with_alpha(100.0));
  Vec x(1);
  x << 1.0;
  CHECK_THROWS_AS(eval_certificate(c, x, 0.0), OverflowError);
  CHECK(std::isfinite(eval_certificate_log(c, x, 0.0)));
  CHECK(std::isfinite(certificate_rate(c, x, 0.0).scaled_derivative));
}

TEST_CASE("the ISS gate needs a positive c_a") {
  const ExampleBundle b = scalar_example();
  const Certificate c = build_certificate(b.family, b.sys);
  CHECK_THROWS_AS(iss_gate(c, 1.0), ConfigError);
}

TEST_CASE("the ISS gate has the closed form chi") {
  const ExampleBundle b = controlled_friction_example();
  const Certificate c = build_certificate(b.family, b.sys.with_alpha(1.0));
  const double ca = b.family.c_a, cb = b.family.c_b, T = b.family.T;
  for (double s : {0.1, 1.0, 7.0}) {
    const double a1 = s * s / 2;
    CHECK_THAT(iss_gate(c, s), WithinRel(cb * std::sqrt(a1) / (2 * T * ca * ca * (1 + std::pow(a1, 0.25))), 1e-14));
  }
  Vec x(2);
  x << 0.3, -2.0;
  const Vec u = worst_case_input(c, x, 1.0);
  CHECK_THAT(u.norm(), WithinRel(iss_gate(c, x.norm()), 1e-14));
}

TEST_CASE("operator norm of a matrix is its largest singular value") {
  Mat m(2, 2);
  m << 3, 0, 0, -5;
  CHECK_THAT(operator_norm(m), WithinRel(5.0, 1e-14));
}
