#pragma once

// Window averages of Theta = q o p: the double integral
//   D(t) = int_{t-T}^t int_s^t Theta(l) dl ds = int_{t-T}^t (r - t + T) Theta(r) dr,
// its time derivative T Theta(t) - int_{t-T}^t Theta, the envelope |D| <= T^2 M/2,
// and the exponential gain E(t, alpha) = exp((alpha/T) D(t/alpha)).

#include "slowcert/core.hpp"
#include "slowcert/quadrature.hpp"

#include <cmath>
#include <limits>

namespace slowcert {

struct AveragedSignal {
  ScalarFn theta;
  double m_bar = 0.0;     // |theta| <= m_bar
  double window_T = 1.0;
  QuadratureOptions quad{};
};

/// Grid max of |theta| times the safety factor.
inline double estimate_m_bar(const ScalarFn& theta, const GridSpec& grid) {
  if (grid.points == 0) throw ConfigError("estimate_m_bar: empty grid");
  double best = 0.0;
  for (double l : grid.nodes()) {
    const double v = theta(l);
    if (!std::isfinite(v)) throw NumericalError("estimate_m_bar: non-finite theta at " + std::to_string(l));
    best = std::max(best, std::abs(v));
  }
  return best * grid.safety;
}

/// Theta = q o p for a family and a path.
inline ScalarFn make_theta(const ParamFn& q, const ParameterPath& path) {
  return [q, p = path.p](double l) { return q(p(l)); };
}

/// Builds the averaged signal, estimating M over one period of the path (or
/// over [lo, hi] for aperiodic paths) unless `declared_m_bar` is given.
inline AveragedSignal make_averaged_signal(const ParamFn& q, const ParameterPath& path, double T,
                                           std::optional<double> declared_m_bar = std::nullopt,
                                           double lo = -1.0, double hi = 100.0) {
  if (!(T > 0.0)) throw ConfigError("averaging window T must be positive");
  AveragedSignal sig;
  sig.theta = make_theta(q, path);
  sig.window_T = T;
  if (declared_m_bar) {
    sig.m_bar = *declared_m_bar;
  } else {
    GridSpec g = default_path_grid(path, lo, hi);
    sig.m_bar = estimate_m_bar(sig.theta, g);
  }
  return sig;
}

/// Single-integral (Fubini) form of the double window integral at t.
inline double double_avg_integral(const AveragedSignal& sig, double t) {
  const double T = sig.window_T;
  const auto integrand = [&](double r) { return (r - t + T) * sig.theta(r); };
  return integrate(integrand, t - T, t, sig.quad).value;
}

/// int_{t-T}^t Theta(r) dr.
inline double window_integral(const AveragedSignal& sig, double t) {
  return integrate(sig.theta, t - sig.window_T, t, sig.quad).value;
}

/// d/dt of double_avg_integral: T Theta(t) - int_{t-T}^t Theta.
inline double double_avg_time_derivative(const AveragedSignal& sig, double t) {
  return sig.window_T * sig.theta(t) - window_integral(sig, t);
}

inline double envelope_bound(const AveragedSignal& sig) {
  return sig.window_T * sig.window_T * sig.m_bar / 2.0;
}

/// Exponent of E(t, alpha); never overflows for finite inputs.
inline double exp_gain_log(const AveragedSignal& sig, double t, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("exp_gain_log: alpha must be positive");
  return alpha / sig.window_T * double_avg_integral(sig, t / alpha);
}

inline constexpr double kMaxExponent = 709.0;  // just below log(DBL_MAX)

inline double exp_gain(const AveragedSignal& sig, double t, double alpha) {
  const double e = exp_gain_log(sig, t, alpha);
  if (e > kMaxExponent)
    throw OverflowError("exp_gain: exponent " + std::to_string(e) + " overflows; use exp_gain_log", e);
  return std::exp(e);
}

}  // namespace slowcert
