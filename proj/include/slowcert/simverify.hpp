#pragma once

// Numerical verification: trajectories of the slow system, grid falsification
// of the frozen-family hypotheses, discrete decrease checks along trajectories,
// the empirical alpha boundary, and disturbance simulations.
//
// Every check here samples; an empty report means "no violation found among N
// samples", never "verified".

#include "slowcert/certificate.hpp"
#include "slowcert/core.hpp"
#include "slowcert/ode.hpp"
#include "slowcert/report.hpp"
#include "slowcert/sampling.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace slowcert {

using InputSignal = std::function<Vec(double t, const Vec& x)>;

inline Trajectory integrate(const SlowSystem& sys, const Vec& x0, double t0, double tf,
                            const std::optional<InputSignal>& control = std::nullopt,
                            const IntegratorOptions& opt = {}) {
  if (t0 < 0.0) throw DomainError("integrate: t0 must be nonnegative");
  if (static_cast<std::size_t>(x0.size()) != sys.frozen.dim_state)
    throw ConfigError("integrate: initial state has the wrong dimension");
  if (control) {
    const InputSignal u = *control;
    return integrate_ode([&sys, u](double t, const Vec& x) { return eval_controlled_field(sys, x, t, u(t, x)); },
                         x0, t0, tf, opt);
  }
  return integrate_ode([&sys](double t, const Vec& x) { return eval_slow_field(sys, x, t); }, x0, t0, tf, opt);
}

/// Fills traj.cert_values with V#(t_k, x_k).
inline void attach_certificate(const Certificate& cert, Trajectory& traj) {
  traj.cert_values.resize(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k)
    traj.cert_values[k] = std::exp(eval_certificate_log(cert, traj.states[k], traj.times[k]));
}

// ---------------------------------------------------------------------------
// Grid falsification
// ---------------------------------------------------------------------------

struct FalsifyOptions {
  SampleGrid grid{};
  /// Optional superset box for tau; by default tau is sampled as p(s) over
  /// s in [-T, t_max/alpha], matching the range of the path.
  std::optional<std::pair<Vec, Vec>> tau_box;
};

namespace detail {

/// Shared A1-A4 sampler; `weight` maps V to the right-hand-side weight
/// (identity for the plain hypotheses, mu for the mu-weighted ones).
inline std::vector<ViolationReport> falsify_family(const LyapunovFamily& fam, const SlowSystem& sys,
                                                   const FalsifyOptions& opt, const ScalarFn& weight) {
  const SampleGrid& grid = opt.grid;
  const std::size_t n = sys.frozen.dim_state;
  const std::size_t d = sys.frozen.dim_param;
  const double t_max = grid.resolve_t_max(fam.T, sys.alpha);
  const double s_lo = -fam.T;
  const double s_hi = t_max / sys.alpha;
  const std::size_t dims = n + 1 + (opt.tau_box ? d : 1);
  HaltonSampler hs(dims, grid.seed);

  std::vector<ViolationReport> reports(4);
  reports[0].condition = "A1";
  reports[1].condition = "A2";
  reports[2].condition = "A3";
  reports[3].condition = "A4";

  struct Row {
    ViolationReport::Witness w1, w2, w3;
    double s1 = 0, s2 = 0, s3 = 0;
    bool v1 = false, v2 = false, v3 = false;
  };
  std::vector<Row> rows(grid.samples);
  const double rs = grid.rel_slack;
  parallel_for(grid.samples, [&](std::size_t i) {
    const auto u = hs.point(i);
    Vec x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = scale_unit(u[k], -grid.radius, grid.radius);
    const double t = scale_unit(u[n], 0.0, t_max);
    Vec tau;
    if (opt.tau_box) {
      tau.resize(static_cast<Eigen::Index>(d));
      for (std::size_t k = 0; k < d; ++k)
        tau[k] = scale_unit(u[n + 1 + k], opt.tau_box->first[k], opt.tau_box->second[k]);
    } else {
      tau = sys.path.p(scale_unit(u[n + 1], s_lo, s_hi));
    }
    const double nx = x.norm();
    const double v = fam.V(x, t, tau);
    const double a1 = fam.alpha1(nx);
    const double a2 = fam.alpha2(nx);
    Row& r = rows[i];
    // A1 two-sided: slack is the smaller of the two gaps
    const double low_gap = v - a1;
    const double high_gap = a2 - v;
    r.s1 = std::min(low_gap, high_gap);
    r.v1 = v < a1 - rs * (1.0 + std::abs(a1)) || v > a2 + rs * (1.0 + std::abs(a2));
    r.w1 = {x, t, tau, v, low_gap < high_gap ? a1 : a2, r.s1};

    const double wv = weight(v);
    const double lhs2 = fam.frozen_derivative(sys.frozen, x, t, tau);
    const double rhs2 = -fam.q(tau) * wv;
    r.s2 = rhs2 - lhs2;
    r.v2 = lhs2 > rhs2 + rs * (1.0 + std::abs(rhs2));
    r.w2 = {x, t, tau, lhs2, rhs2, r.s2};

    const double lhs3 = fam.grad_tau(x, t, tau).norm();
    const double rhs3 = fam.c_a * wv;
    r.s3 = rhs3 - lhs3;
    r.v3 = lhs3 > rhs3 + rs * (1.0 + std::abs(rhs3));
    r.w3 = {x, t, tau, lhs3, rhs3, r.s3};
    if (!std::isfinite(v) || !std::isfinite(lhs2) || !std::isfinite(rhs2) || !std::isfinite(lhs3))
      throw NumericalError("falsify: non-finite V, derivative or tau-gradient at x=" + detail::format_vec(x) +
                           ", t=" + std::to_string(t));
  });
  for (auto& r : rows) {
    reports[0].record(r.s1, r.v1, std::move(r.w1));
    reports[1].record(r.s2, r.v2, std::move(r.w2));
    reports[2].record(r.s3, r.v3, std::move(r.w3));
  }

  // A4 on the slow time axis, window starts reaching below zero included
  const std::size_t m = std::max<std::size_t>(grid.a4_samples, 2);
  const ScalarFn theta = [q = fam.q, p = sys.path.p](double l) { return q(p(l)); };
  std::vector<ViolationReport::Witness> a4(m);
  std::vector<double> a4_slack(m);
  HaltonSampler hs4(1, grid.seed ^ 0x9e3779b97f4a7c15ULL);
  parallel_for(m, [&](std::size_t j) {
    const double s = (j == 0) ? 0.0 : scale_unit(hs4.point(j)[0], 0.0, s_hi);
    const double lhs = integrate(theta, s - fam.T, s).value;
    a4[j] = {Vec(), s, sys.path.p(s), lhs, fam.c_b, lhs - fam.c_b};
    a4_slack[j] = lhs - fam.c_b;
  });
  for (std::size_t j = 0; j < m; ++j) {
    const bool viol = a4[j].lhs < fam.c_b - (1e-10 + rs * (1.0 + std::abs(fam.c_b)));
    reports[3].record(a4_slack[j], viol, std::move(a4[j]));
  }
  return reports;
}

}  // namespace detail

/// Samples A1 (sandwich), A2 (frozen decay), A3 (tau sensitivity) and A4
/// (window average of q along p). Returns the four reports in that order.
inline std::vector<ViolationReport> falsify_assumption1(const LyapunovFamily& fam, const SlowSystem& sys,
                                                        const FalsifyOptions& opt = {}) {
  return detail::falsify_family(fam, sys, opt, [](double v) { return v; });
}

/// mu-weighted variant; a family without mu is checked exactly as above.
inline std::vector<ViolationReport> falsify_assumption2(const LyapunovFamily& tilde, const SlowSystem& sys,
                                                        const FalsifyOptions& opt = {}) {
  if (!tilde.mu) return falsify_assumption1(tilde, sys, opt);
  const MuFunction mu = *tilde.mu;
  return detail::falsify_family(tilde, sys, opt, [mu](double v) { return mu(v); });
}

inline bool all_passed(const std::vector<ViolationReport>& reports) {
  for (const auto& r : reports)
    if (!r.passed()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Decrease along trajectories
// ---------------------------------------------------------------------------

/// Discrete decrement test at the trajectory knots:
///   (V#_{k+1} - V#_k) / (E_k dt) <= -decrease_coeff V_hat_k / E_k + margin_tol (1 + V_hat_k),
/// i.e. the gain at t_k is divided out so large gains cannot overflow.
inline ViolationReport check_decrease_along(const Certificate& cert, const Trajectory& traj, double margin_tol) {
  ViolationReport rep;
  rep.condition = "decrease";
  const std::size_t n = traj.size();
  if (n < 2) return rep;
  std::vector<double> log_gain(n), v_hat(n);
  for (std::size_t k = 0; k < n; ++k) {
    log_gain[k] = exp_gain_log(cert.sig, traj.times[k], cert.alpha);
    v_hat[k] = eval_v_hat(cert, traj.states[k], traj.times[k]);
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = traj.times[k + 1] - traj.times[k];
    const double lhs = (std::exp(log_gain[k + 1] - log_gain[k]) * v_hat[k + 1] - v_hat[k]) / dt;
    // the tolerance lives in V_hat units so it survives gains far beyond 1
    const double rhs = -std::exp(cert.log_decrease_coeff - log_gain[k]) * v_hat[k] + margin_tol * (1.0 + v_hat[k]);
    const bool viol = lhs > rhs;
    rep.record(rhs - lhs, viol,
               viol ? ViolationReport::Witness{traj.states[k], traj.times[k], cert.tau_at(traj.times[k]), lhs, rhs,
                                               rhs - lhs}
                    : ViolationReport::Witness{});
  }
  return rep;
}

/// Seeded batch of initial conditions for trajectory checks.
struct TrajectoryBatch {
  std::size_t count = 20;
  double radius = 5.0;     // |x0|_inf <= radius
  std::uint64_t seed = 7;
  double horizon = 20.0;   // integrate over [t0, t0 + horizon]
  double t0_spread = 1.0;  // t0 uniform in [0, t0_spread * alpha * T]
  double margin_tol = 1e-6;
  IntegratorOptions integrator{.stride = 0.05};

  std::vector<std::pair<double, Vec>> initial_conditions(std::size_t n, double alpha, double T) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-radius, radius);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    std::vector<std::pair<double, Vec>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      Vec x(static_cast<Eigen::Index>(n));
      for (std::size_t k = 0; k < n; ++k) x[k] = ux(rng);
      const double t0 = ut(rng) * t0_spread * alpha * T;
      out.emplace_back(t0, std::move(x));
    }
    return out;
  }
};

struct BatchResult {
  std::vector<ViolationReport> reports;  // one per trajectory (empty report on blow-up)
  std::vector<Trajectory> trajectories;
  std::size_t blow_ups = 0;
  bool passed() const {
    if (blow_ups) return false;
    for (const auto& r : reports)
      if (!r.passed()) return false;
    return true;
  }
  double worst_slack() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& r : reports) w = std::min(w, r.worst_slack);
    return w;
  }
};

inline BatchResult check_decrease_batch(const Certificate& cert, const TrajectoryBatch& batch,
                                        bool keep_trajectories = false) {
  const auto ics = batch.initial_conditions(cert.sys.frozen.dim_state, cert.alpha, cert.family.T);
  BatchResult out;
  out.reports.resize(ics.size());
  std::vector<Trajectory> trajs(ics.size());
  std::vector<char> blew(ics.size(), 0);
  parallel_for(ics.size(), [&](std::size_t i) {
    const auto& [t0, x0] = ics[i];
    try {
      trajs[i] = integrate(cert.sys, x0, t0, t0 + batch.horizon, std::nullopt, batch.integrator);
      out.reports[i] = check_decrease_along(cert, trajs[i], batch.margin_tol);
    } catch (const IntegrationError& e) {
      blew[i] = 1;
      out.reports[i].condition = "decrease";
    }
  });
  for (char b : blew) out.blow_ups += static_cast<std::size_t>(b);
  if (keep_trajectories) out.trajectories = std::move(trajs);
  return out;
}

/// Strict decrease of the analytic derivative on a random grid:
///   dV#/dt <= -decrease_coeff V_hat + abs_tol.
inline ViolationReport check_strict_decrease(const Certificate& cert, const SampleGrid& grid, double abs_tol = 1e-9) {
  const std::size_t n = cert.sys.frozen.dim_state;
  const double t_max = grid.resolve_t_max(cert.family.T, cert.alpha);
  HaltonSampler hs(n + 1, grid.seed);
  ViolationReport rep;
  rep.condition = "decrease";
  std::vector<ViolationReport::Witness> rows(grid.samples);
  parallel_for(grid.samples, [&](std::size_t i) {
    const auto u = hs.point(i);
    Vec x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = scale_unit(u[k], -grid.radius, grid.radius);
    const double t = scale_unit(u[n], 0.0, t_max);
    const CertificateRate r = certificate_rate(cert, x, t);
    const double margin = decrease_margin(cert, r, abs_tol);
    rows[i] = {x, t, cert.tau_at(t), r.scaled_derivative, r.scaled_derivative + margin, margin};
  });
  for (auto& w : rows) rep.record(w.slack, w.slack < 0.0, w);
  return rep;
}

// ---------------------------------------------------------------------------
// Empirical alpha boundary
// ---------------------------------------------------------------------------

class NonMonotoneError : public Error {
 public:
  using Error::Error;
};

struct AlphaSearch {
  double alpha_lo = 1e-3;
  double alpha_hi = 100.0;
  int iterations = 20;
  TrajectoryBatch batch{};
  CertificateOptions cert_options{};
};

struct AlphaStarResult {
  double empirical = 0.0;  // smallest tested alpha known to pass
  double bracket_lo = 0.0; // largest tested alpha known to fail (0 if none)
  double analytic = 0.0;   // 2 T c_a p_bar / c_b
  bool passes_at_lo = false;
  int evaluations = 0;
};

/// Geometric bisection on "every trajectory of the seeded batch passes the
/// decrease check". Monotonicity in alpha is not guaranteed, so a search
/// whose lower end passes while the upper end fails raises NonMonotoneError.
inline AlphaStarResult estimate_alpha_star(const LyapunovFamily& fam, const SlowSystem& sys_template,
                                           const AlphaSearch& search) {
  if (!(search.alpha_lo > 0.0) || !(search.alpha_hi > search.alpha_lo))
    throw ConfigError("estimate_alpha_star: need 0 < alpha_lo < alpha_hi");
  AlphaStarResult res;
  CertificateOptions copt = search.cert_options;
  if (!copt.p_bar) copt.p_bar = resolve_p_bar(sys_template.path, copt.sup_lo - fam.T, copt.sup_hi);
  const auto passes = [&](double a) {
    ++res.evaluations;
    const Certificate c = build_certificate(fam, sys_template.with_alpha(a), copt);
    return check_decrease_batch(c, search.batch).passed();
  };
  res.analytic = build_certificate(fam, sys_template.with_alpha(search.alpha_hi), copt).threshold_ugas;
  const bool lo_ok = passes(search.alpha_lo);
  const bool hi_ok = passes(search.alpha_hi);
  if (lo_ok && !hi_ok)
    throw NonMonotoneError("decrease check passes at alpha_lo=" + std::to_string(search.alpha_lo) +
                           " but fails at alpha_hi=" + std::to_string(search.alpha_hi));
  if (!lo_ok && !hi_ok)
    throw ConfigError("estimate_alpha_star: decrease check fails at both ends; raise alpha_hi");
  res.passes_at_lo = lo_ok;
  if (lo_ok) {
    res.empirical = search.alpha_lo;
    return res;
  }
  double lo = search.alpha_lo, hi = search.alpha_hi;
  for (int i = 0; i < search.iterations; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (passes(mid))
      hi = mid;
    else
      lo = mid;
  }
  res.empirical = hi;
  res.bracket_lo = lo;
  return res;
}

// ---------------------------------------------------------------------------
// Disturbance simulation
// ---------------------------------------------------------------------------

struct IssSimulation {
  Trajectory trajectory;
  bool blow_up = false;
  std::size_t gated_segments = 0;    // segments with |u| <= chi(|x|) at both ends
  std::size_t gated_violations = 0;  // of those, segments where V# increased
  double tail_bound = 0.0;           // max |x| over the last third of the horizon
  double max_norm = 0.0;
  double sup_input = 0.0;
  double gate_radius = 0.0;          // chi^{-1}(sup |u|)
  double level_bound = 0.0;          // alpha1_hat^{-1}(alpha2_hat(max(|x0|, gate_radius)))
};

namespace detail {

/// Smallest s in [0, hi] with fn(s) >= level for an increasing fn (bisection).
inline double invert_increasing(const ScalarFn& fn, double level, double hi = 1e12) {
  if (level <= 0.0) return 0.0;
  double lo = 0.0;
  if (fn(hi) < level) return std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (fn(mid) >= level)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace detail

inline IssSimulation simulate_iss(const Certificate& cert, const InputSignal& disturbance, const Vec& x0,
                                  double horizon, const IntegratorOptions& iopt = {.stride = 0.05},
                                  double t0 = 0.0) {
  if (!cert.sys.frozen.g) throw ConfigError("simulate_iss: family has no g");
  IssSimulation out;
  try {
    out.trajectory = integrate(cert.sys, x0, t0, t0 + horizon, disturbance, iopt);
  } catch (const IntegrationError& e) {
    if (!e.blow_up()) throw;
    out.blow_up = true;
    return out;
  }
  const Trajectory& tr = out.trajectory;
  const std::size_t n = tr.size();
  std::vector<double> lv(n), unorm(n), gate(n);
  for (std::size_t k = 0; k < n; ++k) {
    lv[k] = eval_certificate_log(cert, tr.states[k], tr.times[k]);
    unorm[k] = disturbance(tr.times[k], tr.states[k]).norm();
    gate[k] = iss_gate(cert, tr.states[k].norm());
    out.sup_input = std::max(out.sup_input, unorm[k]);
    out.max_norm = std::max(out.max_norm, tr.states[k].norm());
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (unorm[k] <= gate[k] && unorm[k + 1] <= gate[k + 1]) {
      ++out.gated_segments;
      if (lv[k + 1] > lv[k] + 1e-9) ++out.gated_violations;
    }
  }
  const double tail_start = tr.times.front() + horizon * 2.0 / 3.0;
  for (std::size_t k = 0; k < n; ++k)
    if (tr.times[k] >= tail_start) out.tail_bound = std::max(out.tail_bound, tr.states[k].norm());
  out.gate_radius = detail::invert_increasing([&](double s) { return iss_gate(cert, s); }, out.sup_input);
  const double rho = std::max(x0.norm(), out.gate_radius);
  const double env = cert.gain_envelope_exponent();
  const double target = std::exp(2.0 * env) * cert.family.alpha2(rho);
  out.level_bound = detail::invert_increasing(cert.family.alpha1, target);
  return out;
}

}  // namespace slowcert
