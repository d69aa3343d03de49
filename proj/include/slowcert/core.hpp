#pragma once

// Shared domain types: parameter paths, frozen families, Lyapunov families and
// the slow system built from them, plus the error hierarchy used everywhere.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace slowcert {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using ScalarFn = std::function<double(double)>;
using PathFn = std::function<Vec(double)>;
using FieldFn = std::function<Vec(const Vec& x, double t, const Vec& tau)>;
using ControlFn = std::function<Mat(const Vec& x, double t, const Vec& tau)>;
using ValueFn = std::function<double(const Vec& x, double t, const Vec& tau)>;
using GradFn = std::function<Vec(const Vec& x, double t, const Vec& tau)>;
using ParamFn = std::function<double(const Vec& tau)>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad constants, failed hypotheses).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A callable produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double error_estimate)
      : Error(what), error_estimate_(error_estimate) {}
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double error_estimate_;
};

class OverflowError : public Error {
 public:
  OverflowError(const std::string& what, double exponent)
      : Error(what), exponent_(exponent) {}
  double exponent() const noexcept { return exponent_; }

 private:
  double exponent_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string format_vec(const Vec& v) {
  std::ostringstream os;
  os.precision(6);
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  os << ')';
  return os.str();
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

/// Central-difference step used for every finite-difference fallback.
inline double fd_step(double arg) { return std::max(1e-6, 1e-8 * std::abs(arg)); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Grid specification for sup-estimates over a real interval
// ---------------------------------------------------------------------------

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t points = 100000;
  double safety = 1.05;

  std::vector<double> nodes() const {
    std::vector<double> out;
    if (points == 0) return out;
    if (points == 1) return {lo};
    out.reserve(points);
    const double h = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) out.push_back(lo + h * static_cast<double>(i));
    out.back() = hi;
    return out;
  }
};

// ---------------------------------------------------------------------------
// ParameterPath
// ---------------------------------------------------------------------------

/// The slow signal p: R -> R^d. It must be evaluable on all of R because the
/// certificate window reaches back to t/alpha - T.
struct ParameterPath {
  std::size_t dim = 1;
  PathFn p;
  std::optional<PathFn> p_prime;
  std::optional<double> p_bar;   // declared sup |p'|; estimated when absent
  std::optional<double> period;
  bool globally_defined = true;
  bool fd_derivative = true;     // allow central differences when p_prime is absent

  Vec operator()(double r) const { return p(r); }

  Vec derivative(double r) const {
    if (p_prime) return (*p_prime)(r);
    if (!fd_derivative)
      throw ConfigError("parameter path has no derivative and finite differences are disabled");
    const double h = detail::fd_step(r);
    return (p(r + h) - p(r - h)) / (2.0 * h);
  }
};

/// Grid maximum of |p'(r)| times the grid's safety factor (never below any
/// sampled value since safety >= 1).
inline double estimate_p_bar(const ParameterPath& path, const GridSpec& grid) {
  if (grid.points == 0) throw ConfigError("estimate_p_bar: empty grid");
  if (grid.safety < 1.0) throw ConfigError("estimate_p_bar: safety factor must be >= 1");
  double best = 0.0;
  for (double r : grid.nodes()) {
    const Vec d = path.derivative(r);
    if (!d.allFinite()) throw NumericalError("estimate_p_bar: non-finite p' at r=" + std::to_string(r));
    best = std::max(best, d.norm());
  }
  return best * grid.safety;
}

/// The default sup-grid for a path: one period when periodic, else [lo, hi].
inline GridSpec default_path_grid(const ParameterPath& path, double lo, double hi) {
  GridSpec g;
  if (path.period) {
    g.lo = 0.0;
    g.hi = *path.period;
  } else {
    g.lo = lo;
    g.hi = hi;
  }
  return g;
}

/// Declared p_bar when present, otherwise the default grid estimate.
inline double resolve_p_bar(const ParameterPath& path, double lo, double hi) {
  if (path.p_bar) return *path.p_bar;
  return estimate_p_bar(path, default_path_grid(path, lo, hi));
}

// ---------------------------------------------------------------------------
// FrozenFamily and SlowSystem
// ---------------------------------------------------------------------------

struct FrozenFamily {
  std::size_t dim_state = 1;
  std::size_t dim_param = 1;
  FieldFn f;
  std::optional<ControlFn> g;
  std::size_t dim_control = 0;
  std::optional<ScalarFn> state_bound;  // class-K-infinity envelope of |f|
};

struct SlowSystem {
  FrozenFamily frozen;
  ParameterPath path;
  double alpha = 1.0;

  Vec tau_at(double t) const { return path.p(t / alpha); }

  SlowSystem with_alpha(double a) const {
    SlowSystem out = *this;
    out.alpha = a;
    return out;
  }
};

/// f(x, t, p(t/alpha)).
inline Vec eval_slow_field(const SlowSystem& sys, const Vec& x, double t) {
  if (t < 0.0) throw DomainError("eval_slow_field: t must be nonnegative");
  if (!x.allFinite()) throw NumericalError("eval_slow_field: non-finite state " + detail::format_vec(x));
  Vec out = sys.frozen.f(x, t, sys.path.p(t / sys.alpha));
  if (!out.allFinite())
    throw NumericalError("eval_slow_field: non-finite field at x=" + detail::format_vec(x) +
                         ", t=" + std::to_string(t));
  return out;
}

/// f(x,t,p(t/alpha)) + g(x,t,p(t/alpha)) u.
inline Vec eval_controlled_field(const SlowSystem& sys, const Vec& x, double t, const Vec& u) {
  Vec out = eval_slow_field(sys, x, t);
  if (u.size() == 0) return out;
  if (!sys.frozen.g) throw ConfigError("controlled field requested but the family has no g");
  out += (*sys.frozen.g)(x, t, sys.path.p(t / sys.alpha)) * u;
  if (!out.allFinite())
    throw NumericalError("eval_controlled_field: non-finite field at x=" + detail::format_vec(x));
  return out;
}

// ---------------------------------------------------------------------------
// MuFunction (Assumption-2 weighting) and LyapunovFamily
// ---------------------------------------------------------------------------

struct MuFunction {
  ScalarFn mu;
  std::optional<ScalarFn> mu_prime;
  std::optional<double> B;   // declared sup of mu' on [0,1]
  std::optional<double> c3;  // declared constant with mu(r) <= c3 r on [0,1]
  /// Set when the caller can prove int_1^inf 1/mu = inf analytically
  /// (e.g. mu(l) <= C l for large l); bypasses the numeric growth test.
  bool divergence_declared = false;

  double operator()(double r) const { return mu(r); }

  double derivative(double r) const {
    if (mu_prime) return (*mu_prime)(r);
    const double h = detail::fd_step(r);
    if (r - h < 0.0) return (mu(r + h) - mu(r)) / h;  // one-sided at the origin
    return (mu(r + h) - mu(r - h)) / (2.0 * h);
  }
};

inline MuFunction identity_mu() {
  MuFunction m;
  m.mu = [](double l) { return l; };
  m.mu_prime = [](double) { return 1.0; };
  m.B = 1.0;
  m.c3 = 1.0;
  m.divergence_declared = true;
  return m;
}

/// A family V(x,t,tau) of frozen Lyapunov functions with the averaging data.
/// When `mu` is set the family is read under the mu-weighted hypotheses and
/// must go through transform_family before a certificate can be built.
struct LyapunovFamily {
  ValueFn V;
  std::optional<ValueFn> V_t;
  std::optional<GradFn> V_x;
  std::optional<GradFn> V_tau;
  ScalarFn alpha1;
  ScalarFn alpha2;
  ParamFn q;
  double c_a = 0.0;
  double c_b = 1.0;
  double T = 1.0;
  std::optional<MuFunction> mu;

  double value(const Vec& x, double t, const Vec& tau) const { return V(x, t, tau); }

  double partial_t(const Vec& x, double t, const Vec& tau) const {
    if (V_t) return (*V_t)(x, t, tau);
    const double h = detail::fd_step(t);
    return (V(x, t + h, tau) - V(x, t - h, tau)) / (2.0 * h);
  }

  Vec grad_x(const Vec& x, double t, const Vec& tau) const {
    if (V_x) return (*V_x)(x, t, tau);
    Vec g(x.size());
    Vec xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = detail::fd_step(x[i]);
      xp[i] = x[i] + h;
      const double up = V(xp, t, tau);
      xp[i] = x[i] - h;
      const double dn = V(xp, t, tau);
      xp[i] = x[i];
      g[i] = (up - dn) / (2.0 * h);
    }
    return g;
  }

  Vec grad_tau(const Vec& x, double t, const Vec& tau) const {
    if (V_tau) return (*V_tau)(x, t, tau);
    Vec g(tau.size());
    Vec tp = tau;
    for (Eigen::Index i = 0; i < tau.size(); ++i) {
      const double h = detail::fd_step(tau[i]);
      tp[i] = tau[i] + h;
      const double up = V(x, t, tp);
      tp[i] = tau[i] - h;
      const double dn = V(x, t, tp);
      tp[i] = tau[i];
      g[i] = (up - dn) / (2.0 * h);
    }
    return g;
  }

  /// V_t + V_x f along the frozen dynamics.
  double frozen_derivative(const FrozenFamily& fam, const Vec& x, double t, const Vec& tau) const {
    return partial_t(x, t, tau) + grad_x(x, t, tau).dot(fam.f(x, t, tau));
  }

  bool has_mu_weighting() const { return mu.has_value(); }
};

// ---------------------------------------------------------------------------
// Validation helpers
// ---------------------------------------------------------------------------

/// Class-K-infinity sanity on a sampled increasing sequence: vanishes at 0
/// (within 1e-12) and strictly increasing. Returns an empty string on success.
inline std::string check_class_kinf(const ScalarFn& fn, const std::vector<double>& increasing_samples) {
  if (std::abs(fn(0.0)) > 1e-12) return "value at 0 is " + std::to_string(fn(0.0));
  double prev = fn(0.0);
  double prev_s = 0.0;
  for (double s : increasing_samples) {
    if (s <= prev_s) continue;
    const double v = fn(s);
    if (!std::isfinite(v)) return "non-finite value at s=" + std::to_string(s);
    if (!(v > prev)) return "not strictly increasing at s=" + std::to_string(s);
    prev = v;
    prev_s = s;
  }
  return {};
}

/// f(0, t, tau) = 0 on sampled (t, tau = p(s)); returns the worst |f(0,.)|.
inline double equilibrium_residual(const FrozenFamily& fam, const ParameterPath& path,
                                   const std::vector<double>& times,
                                   const std::vector<double>& slow_times) {
  const Vec zero = Vec::Zero(static_cast<Eigen::Index>(fam.dim_state));
  double worst = 0.0;
  for (double t : times)
    for (double s : slow_times) worst = std::max(worst, fam.f(zero, t, path.p(s)).norm());
  return worst;
}

}  // namespace slowcert
