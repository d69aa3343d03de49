#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta integrator with step-size control.
// Steps are clipped so that every sampling instant is hit exactly.

#include "slowcert/core.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace slowcert {

using OdeRhs = std::function<Vec(double t, const Vec& x)>;

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double stride = 0.01;      // sampling interval of the stored trajectory
  double initial_step = 0.0; // 0: pick from the rhs scale
  double blowup_norm = 1e6;
  std::size_t max_steps = 50'000'000;
};

struct IntegratorStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double max_error_estimate = 0.0;  // largest accepted scaled error norm
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<double> cert_values;  // optional, aligned with times
  IntegratorStats stats;

  std::size_t size() const { return times.size(); }
};

class IntegrationError : public Error {
 public:
  enum class Kind { StepCollapse, BlowUp, NonFinite, TooManySteps };

  IntegrationError(Kind kind, const std::string& what, double t, Vec last_state)
      : Error(what), kind_(kind), t_(t), last_(std::move(last_state)) {}

  Kind kind() const noexcept { return kind_; }
  double time() const noexcept { return t_; }
  const Vec& last_state() const noexcept { return last_; }
  bool blow_up() const noexcept { return kind_ == Kind::BlowUp; }

 private:
  Kind kind_;
  double t_;
  Vec last_;
};

namespace detail {

struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // b - b_hat (error weights of the embedded 4th-order solution)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  /// One step; returns the 5th-order solution, writes the error vector. FSAL:
  /// k1 is the derivative at (t, y) and is replaced by the derivative at the new point.
  static Vec step(const OdeRhs& f, double t, const Vec& y, double h, Vec& k1, Vec& err) {
    const Vec k2 = f(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vec y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = f(t + h, y_new);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    k1 = k7;
    return y_new;
  }
};

}  // namespace detail

/// Adaptive integration of x' = rhs(t, x) on [t0, tf], sampled every `stride`.
inline Trajectory integrate_ode(const OdeRhs& rhs, const Vec& x0, double t0, double tf,
                                const IntegratorOptions& opt = {}) {
  if (!(tf > t0)) throw DomainError("integrate: need tf > t0");
  if (!(opt.stride > 0.0)) throw ConfigError("integrate: stride must be positive");
  if (!x0.allFinite()) throw NumericalError("integrate: non-finite initial state");

  Trajectory traj;
  const double span = tf - t0;
  const double h_min = 1e-14 * span;
  const std::size_t n_samples = static_cast<std::size_t>(std::ceil(span / opt.stride - 1e-9));
  traj.times.reserve(n_samples + 1);
  traj.states.reserve(n_samples + 1);
  traj.times.push_back(t0);
  traj.states.push_back(x0);

  double t = t0;
  Vec y = x0;
  Vec k1 = rhs(t, y);
  Vec k1_next;
  Vec err(y.size());
  double h = opt.initial_step;
  if (!(h > 0.0)) {
    const double scale = opt.atol + opt.rtol * y.norm();
    const double dn = k1.norm();
    h = dn > 0.0 ? 0.01 * std::max(scale, 1e-6) / dn : 1e-3;
    h = std::clamp(h, 1e-8 * span, opt.stride);
  }

  for (std::size_t k = 1; k <= n_samples; ++k) {
    const double target = (k == n_samples) ? tf : t0 + static_cast<double>(k) * opt.stride;
    while (t < target) {
      if (traj.stats.steps + traj.stats.rejected > opt.max_steps)
        throw IntegrationError(IntegrationError::Kind::TooManySteps, "integrate: step budget exhausted", t, y);
      bool last = false;
      double step = h;
      if (t + step >= target) {
        step = target - t;
        last = true;
      }
      k1_next = k1;  // FSAL derivative is committed only on acceptance
      const Vec y_new = detail::DormandPrince::step(rhs, t, y, step, k1_next, err);
      double norm = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        norm += (err[i] / sc) * (err[i] / sc);
      }
      norm = std::sqrt(norm / static_cast<double>(std::max<Eigen::Index>(y.size(), 1)));
      if (!y_new.allFinite() || !std::isfinite(norm)) norm = 1e10;

      if (norm <= 1.0) {
        t = last ? target : t + step;
        y = y_new;
        k1 = k1_next;
        ++traj.stats.steps;
        traj.stats.max_error_estimate = std::max(traj.stats.max_error_estimate, norm);
        if (!y.allFinite())
          throw IntegrationError(IntegrationError::Kind::NonFinite, "integrate: non-finite state", t, y);
        if (y.norm() > opt.blowup_norm)
          throw IntegrationError(IntegrationError::Kind::BlowUp,
                                 "integrate: BlowUp, |x| exceeded " + std::to_string(opt.blowup_norm) +
                                     " at t=" + std::to_string(t),
                                 t, y);
        const double fac = norm > 0.0 ? 0.9 * std::pow(norm, -0.2) : 5.0;
        const double grown = step * std::clamp(fac, 0.2, 5.0);
        // a clipped step says nothing about the admissible size; keep the larger one
        h = last ? std::max(h, grown) : grown;
      } else {
        ++traj.stats.rejected;
        h = step * std::clamp(0.9 * std::pow(norm, -0.2), 0.1, 0.5);
        if (h < h_min)
          throw IntegrationError(IntegrationError::Kind::StepCollapse,
                                 "integrate: step size collapsed below " + std::to_string(h_min) +
                                     " at t=" + std::to_string(t),
                                 t, y);
      }
    }
    traj.times.push_back(t);
    traj.states.push_back(y);
  }
  return traj;
}

/// Fixed-step Dormand-Prince (5th-order solution), used to measure the
/// convergence order.
inline Vec integrate_fixed_step(const OdeRhs& rhs, const Vec& x0, double t0, double tf, std::size_t steps) {
  const double h = (tf - t0) / static_cast<double>(steps);
  Vec y = x0;
  Vec k1 = rhs(t0, y);
  Vec err(y.size());
  for (std::size_t i = 0; i < steps; ++i) y = detail::DormandPrince::step(rhs, t0 + h * i, y, h, k1, err);
  return y;
}

}  // namespace slowcert
