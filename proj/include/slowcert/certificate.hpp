#pragma once

// The strict Lyapunov certificate for the slow system
//   V#(t, x) = E(t, alpha) V(x, t, p(t/alpha)),
// its alpha thresholds, decrease bound, sandwich bounds, and the ISS gate.

#include "slowcert/averaging.hpp"
#include "slowcert/core.hpp"
#include "slowcert/report.hpp"
#include "slowcert/sampling.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace slowcert {

struct CertificateOptions {
  std::optional<double> p_bar;  // overrides the path's declared / estimated value
  std::optional<double> m_bar;
  /// Estimation interval (slow time) for aperiodic paths.
  double sup_lo = -1.0;
  double sup_hi = 100.0;
};

struct Certificate {
  LyapunovFamily family;
  SlowSystem sys;
  AveragedSignal sig;
  double alpha = 1.0;
  double p_bar = 0.0;
  double threshold_ugas = 0.0;
  double threshold_iss = 0.0;
  double decrease_coeff = 0.0;
  double log_decrease_coeff = 0.0;
  bool below_threshold = false;  // warning only: the decrease guarantee is not claimed

  double m_bar() const { return sig.m_bar; }
  double T() const { return family.T; }

  /// alpha T M / 2: the half-width of the log-gain envelope.
  double gain_envelope_exponent() const { return alpha * family.T * sig.m_bar / 2.0; }

  double hat_alpha1(double s) const { return std::exp(-gain_envelope_exponent()) * family.alpha1(s); }
  double hat_alpha2(double s) const { return std::exp(gain_envelope_exponent()) * family.alpha2(s); }

  /// alpha_3(s) = decrease_coeff alpha_1(s).
  double alpha3(double s) const { return decrease_coeff * family.alpha1(s); }

  Vec tau_at(double t) const { return sys.path.p(t / alpha); }
};

namespace detail {

inline void require_identity_mu(const LyapunovFamily& fam) {
  if (!fam.mu) return;
  for (double l : {0.0, 0.25, 1.0, 3.0, 17.0})
    if (std::abs(fam.mu->mu(l) - l) > 1e-12 * (1.0 + l))
      throw ConfigError("build_certificate: family carries a non-identity mu; apply transform_family first");
}

}  // namespace detail

inline Certificate build_certificate(const LyapunovFamily& family, const SlowSystem& sys,
                                     const CertificateOptions& opt = {}) {
  if (!(family.c_b > 0.0)) throw ConfigError("build_certificate: c_b must be positive");
  if (!(family.T > 0.0)) throw ConfigError("build_certificate: T must be positive");
  if (!(sys.alpha > 0.0)) throw ConfigError("build_certificate: alpha must be positive");
  if (family.c_a < 0.0) throw ConfigError("build_certificate: c_a must be nonnegative");
  detail::require_identity_mu(family);

  Certificate c;
  c.family = family;
  c.sys = sys;
  c.alpha = sys.alpha;
  if (opt.p_bar) {
    c.p_bar = *opt.p_bar;
  } else {
    c.p_bar = resolve_p_bar(sys.path, opt.sup_lo - family.T, opt.sup_hi);
  }
  c.sig = make_averaged_signal(family.q, sys.path, family.T, opt.m_bar, opt.sup_lo - family.T, opt.sup_hi);
  c.threshold_ugas = family.c_a == 0.0 ? 0.0 : 2.0 * family.T * family.c_a * c.p_bar / family.c_b;
  c.threshold_iss = 2.0 * c.threshold_ugas;
  c.log_decrease_coeff = std::log(family.c_b / (2.0 * family.T)) - c.gain_envelope_exponent();
  c.decrease_coeff = std::exp(c.log_decrease_coeff);
  c.below_threshold = !(c.alpha > c.threshold_ugas);
  return c;
}

/// V(x, t, p(t/alpha)).
inline double eval_v_hat(const Certificate& c, const Vec& x, double t) {
  return c.family.V(x, t, c.tau_at(t));
}

/// log V#(t, x); -inf at the origin.
inline double eval_certificate_log(const Certificate& c, const Vec& x, double t) {
  if (t < 0.0) throw DomainError("eval_certificate: t must be nonnegative");
  const double v = eval_v_hat(c, x, t);
  if (v < 0.0) throw NumericalError("eval_certificate: V is negative at x=" + detail::format_vec(x));
  if (v == 0.0) return -std::numeric_limits<double>::infinity();
  return exp_gain_log(c.sig, t, c.alpha) + std::log(v);
}

inline double eval_certificate(const Certificate& c, const Vec& x, double t) {
  const double lg = eval_certificate_log(c, x, t);
  if (lg > kMaxExponent)
    throw OverflowError("eval_certificate: log value " + std::to_string(lg) + " overflows", lg);
  return std::exp(lg);
}

/// Pieces of dV#/dt along the (possibly controlled) slow flow. The derivative
/// equals exp(log_gain) * scaled_derivative; comparisons are done on the
/// scaled form so they never overflow.
struct CertificateRate {
  double log_gain = 0.0;
  double v_hat = 0.0;
  double v_hat_dot = 0.0;     // V_t + V_x (f + g u) + V_tau p'(t/alpha)/alpha
  double theta_now = 0.0;     // Theta(t/alpha)
  double window_mean = 0.0;   // (1/T) int_{t/alpha-T}^{t/alpha} Theta
  double scaled_derivative = 0.0;

  double derivative() const {
    if (log_gain > kMaxExponent)
      throw OverflowError("certificate_derivative: gain overflows", log_gain);
    return std::exp(log_gain) * scaled_derivative;
  }
};

inline CertificateRate certificate_rate(const Certificate& c, const Vec& x, double t, const Vec& u = Vec()) {
  if (t < 0.0) throw DomainError("certificate_derivative: t must be nonnegative");
  const double s = t / c.alpha;
  const Vec tau = c.sys.path.p(s);
  CertificateRate r;
  r.log_gain = exp_gain_log(c.sig, t, c.alpha);
  r.v_hat = c.family.V(x, t, tau);
  Vec field = c.sys.frozen.f(x, t, tau);
  if (u.size() > 0) {
    if (!c.sys.frozen.g) throw ConfigError("controlled derivative requested but the family has no g");
    field += (*c.sys.frozen.g)(x, t, tau) * u;
  }
  const Vec dtau = c.sys.path.derivative(s) / c.alpha;
  r.v_hat_dot = c.family.partial_t(x, t, tau) + c.family.grad_x(x, t, tau).dot(field) +
                c.family.grad_tau(x, t, tau).dot(dtau);
  r.theta_now = c.sig.theta(s);
  r.window_mean = window_integral(c.sig, s) / c.family.T;
  r.scaled_derivative = r.v_hat_dot + (r.theta_now - r.window_mean) * r.v_hat;
  return r;
}

inline double certificate_derivative(const Certificate& c, const Vec& x, double t) {
  return certificate_rate(c, x, t).derivative();
}

/// rhs - lhs of  dV#/dt <= -decrease_coeff V_hat + abs_tol, divided by the gain.
inline double decrease_margin(const Certificate& c, const CertificateRate& r, double abs_tol) {
  const double bound = -std::exp(c.log_decrease_coeff - r.log_gain) * r.v_hat + abs_tol * std::exp(-r.log_gain);
  return bound - r.scaled_derivative;
}

// ---------------------------------------------------------------------------
// ISS
// ---------------------------------------------------------------------------

/// chi(s) = c_b sqrt(alpha_1(s)) / (2 T c_a^2 (1 + alpha_1(s)^(1/4))).
inline double iss_gate(const Certificate& c, double s) {
  if (!(c.family.c_a > 0.0))
    throw ConfigError("iss_gate: the growth conditions on V_x and g need a positive c_a; got c_a = 0");
  if (s < 0.0) throw DomainError("iss_gate: s must be nonnegative");
  const double a1 = c.family.alpha1(s);
  return c.family.c_b * std::sqrt(a1) /
         (2.0 * c.family.T * c.family.c_a * c.family.c_a * (1.0 + std::pow(a1, 0.25)));
}

/// Input of norm chi(|x|) along g^T V_x^T, the direction maximising V_x g u.
inline Vec worst_case_input(const Certificate& c, const Vec& x, double t) {
  if (!c.sys.frozen.g) throw ConfigError("worst_case_input: family has no g");
  const Vec tau = c.tau_at(t);
  const Mat g = (*c.sys.frozen.g)(x, t, tau);
  Vec dir = g.transpose() * c.family.grad_x(x, t, tau);
  const double n = dir.norm();
  if (n > 0.0) {
    dir /= n;
  } else {
    dir = Vec::Zero(g.cols());
    dir[0] = 1.0;
  }
  return iss_gate(c, x.norm()) * dir;
}

inline double operator_norm(const Mat& m) {
  if (m.cols() == 1 || m.rows() == 1) return m.norm();
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

struct IssGrowthReport {
  ViolationReport a5;
  ViolationReport a6;
  bool passed() const { return a5.passed() && a6.passed(); }
};

/// Samples |V_x| <= c_a sqrt(alpha_1(|x|)) and |g| <= c_a (1 + alpha_1(|x|)^(1/4))
/// along tau = p(t/alpha). Violations are reported with the measured ratio as lhs/rhs.
inline IssGrowthReport check_iss_growth(const LyapunovFamily& family, const SlowSystem& sys,
                                        const SampleGrid& grid) {
  if (!sys.frozen.g) throw ConfigError("check_iss_growth: family has no g");
  const std::size_t n = sys.frozen.dim_state;
  const double t_max = grid.resolve_t_max(family.T, sys.alpha);
  HaltonSampler hs(n + 1, grid.seed);
  IssGrowthReport out;
  out.a5.condition = "A5";
  out.a6.condition = "A6";
  std::vector<std::pair<ViolationReport::Witness, ViolationReport::Witness>> rows(grid.samples);
  std::vector<std::pair<double, double>> slack(grid.samples);
  parallel_for(grid.samples, [&](std::size_t i) {
    const auto u = hs.point(i);
    Vec x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = scale_unit(u[k], -grid.radius, grid.radius);
    const double t = scale_unit(u[n], 0.0, t_max);
    const Vec tau = sys.path.p(t / sys.alpha);
    const double a1 = family.alpha1(x.norm());
    const double lhs5 = family.grad_x(x, t, tau).norm();
    const double rhs5 = family.c_a * std::sqrt(a1);
    const double lhs6 = operator_norm((*sys.frozen.g)(x, t, tau));
    const double rhs6 = family.c_a * (1.0 + std::pow(a1, 0.25));
    rows[i] = {{x, t, tau, lhs5, rhs5, rhs5 - lhs5}, {x, t, tau, lhs6, rhs6, rhs6 - lhs6}};
    slack[i] = {rhs5 - lhs5, rhs6 - lhs6};
  });
  for (std::size_t i = 0; i < grid.samples; ++i) {
    const auto& [w5, w6] = rows[i];
    out.a5.record(slack[i].first, w5.lhs > w5.rhs + grid.rel_slack * (1.0 + std::abs(w5.rhs)), w5);
    out.a6.record(slack[i].second, w6.lhs > w6.rhs + grid.rel_slack * (1.0 + std::abs(w6.rhs)), w6);
  }
  return out;
}

/// Gated decrease: with u = worst_case_input, dV#/dt <= -(c_b/(4T)) E V_hat.
/// Checked in gain-scaled form; one witness per violating sample.
inline ViolationReport check_iss_decrease(const Certificate& c, const SampleGrid& grid) {
  const std::size_t n = c.sys.frozen.dim_state;
  const double t_max = grid.resolve_t_max(c.family.T, c.alpha);
  HaltonSampler hs(n + 1, grid.seed);
  ViolationReport rep;
  rep.condition = "iss-decrease";
  std::vector<ViolationReport::Witness> rows(grid.samples);
  parallel_for(grid.samples, [&](std::size_t i) {
    const auto u = hs.point(i);
    Vec x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = scale_unit(u[k], -grid.radius, grid.radius);
    const double t = scale_unit(u[n], 0.0, t_max);
    const Vec input = worst_case_input(c, x, t);
    const CertificateRate r = certificate_rate(c, x, t, input);
    const double rhs = -(c.family.c_b / (4.0 * c.family.T)) * r.v_hat;
    rows[i] = {x, t, c.tau_at(t), r.scaled_derivative, rhs, rhs - r.scaled_derivative};
  });
  for (auto& w : rows)
    rep.record(w.slack, w.lhs > w.rhs + grid.rel_slack * (1.0 + std::abs(w.rhs)), w);
  return rep;
}

}  // namespace slowcert
