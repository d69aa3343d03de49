#pragma once

// Reduction of a mu-weighted family (V~, mu, q~, c~_a, c~_b) to an ordinary
// family through V = k(V~), where
//   k(r) = exp(xi int_1^r dl / mu(l)) for r > 0,  k(0) = 0,  xi = 2B,
//   B = sup { mu'(s) : 0 <= s <= 1 }.
// Then k'(r) mu(r) = 2B k(r), so q = 2B q~, c_a = 2B c~_a, c_b = 2B c~_b.

#include "slowcert/core.hpp"
#include "slowcert/quadrature.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace slowcert {

struct MuValidationOptions {
  std::size_t grid_points = 100001;
  double growth_R = 1e6;
  double growth_floor = 2.0;  // int_1^R 1/mu must exceed this unless divergence is declared
  double ratio_safety = 1.05;
};

/// Grid sup of mu' on [0, 1] (endpoints included), times `safety`.
inline double stiffness_B(const MuFunction& mu, std::size_t points = 100001, double safety = 1.0) {
  if (points < 2) throw ConfigError("stiffness_B: need at least two grid points");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(points - 1);
    best = std::max(best, mu.derivative(s));
  }
  if (!(best > 0.0))
    throw ConfigError("stiffness_B: sup of mu' on [0,1] is " + std::to_string(best) +
                      "; mu is not positive definite as declared");
  return best * safety;
}

/// Smallest c3 with mu(r) <= c3 r on the (0, 1] grid, times `safety`.
inline double estimate_c3(const MuFunction& mu, std::size_t points = 100001, double safety = 1.05) {
  double best = 0.0;
  for (std::size_t i = 1; i < points; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(points - 1);
    best = std::max(best, mu(r) / r);
  }
  return best * safety;
}

/// int_1^r dl / mu(l), integrated in u = ln l to tame the 1/mu blow-up at 0.
inline double inv_mu_integral(const MuFunction& mu, double r, const QuadratureOptions& quad = {}) {
  if (!(r > 0.0)) throw DomainError("inv_mu_integral: r must be positive");
  if (r == 1.0) return 0.0;
  const auto integrand = [&](double u) {
    const double l = std::exp(u);
    return l / mu(l);
  };
  return integrate(integrand, 0.0, std::log(r), quad).value;
}

/// Throws ConfigError when mu fails positive definiteness, the linear bound
/// near 0, or the divergence of int_1^inf 1/mu (checked up to R as a heuristic).
inline void validate_mu(const MuFunction& mu, const MuValidationOptions& opt = {}) {
  if (std::abs(mu(0.0)) > 1e-12) throw ConfigError("mu(0) must be 0");
  const std::size_t pts = std::max<std::size_t>(opt.grid_points, 3);
  for (std::size_t i = 1; i < pts; ++i) {
    const double s = 10.0 * static_cast<double>(i) / static_cast<double>(pts - 1);
    if (!(mu(s) > 0.0)) throw ConfigError("mu is not positive at s=" + std::to_string(s));
  }
  const double c3 = mu.c3 ? *mu.c3 : estimate_c3(mu, pts, opt.ratio_safety);
  for (std::size_t i = 1; i < pts; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(pts - 1);
    if (mu(r) > c3 * r + 1e-12)
      throw ConfigError("mu(r) <= c3 r fails at r=" + std::to_string(r));
  }
  if (!mu.divergence_declared) {
    const double grown = inv_mu_integral(mu, opt.growth_R);
    if (!(grown > opt.growth_floor))
      throw ConfigError("int_1^R 1/mu = " + std::to_string(grown) + " at R=" + std::to_string(opt.growth_R) +
                        " does not exceed the growth floor " + std::to_string(opt.growth_floor) +
                        "; mu does not appear to satisfy the divergence condition");
  }
}

/// k and k' for a validated mu with xi = 2B.
class KFunction {
 public:
  explicit KFunction(MuFunction mu, QuadratureOptions quad = {})
      : mu_(std::move(mu)), quad_(quad) {
    B_ = mu_.B ? *mu_.B : stiffness_B(mu_);
    if (!(B_ > 0.0)) throw ConfigError("KFunction: B must be positive");
    xi_ = 2.0 * B_;
  }

  double B() const { return B_; }
  double xi() const { return xi_; }
  const MuFunction& mu() const { return mu_; }

  /// Exponents below this flush k to exactly 0.
  static double underflow_knee() { return std::log(std::numeric_limits<double>::min()) + 20.0; }

  /// xi int_1^r 1/mu; -inf at r = 0.
  double log_k(double r) const {
    if (r < 0.0) throw DomainError("k: r must be nonnegative");
    if (r == 0.0) return -std::numeric_limits<double>::infinity();
    return xi_ * inv_mu_integral(mu_, r, quad_);
  }

  double operator()(double r) const {
    const double e = log_k(r);
    if (e < underflow_knee()) return 0.0;
    return std::exp(e);
  }

  /// k'(r) = (xi / mu(r)) exp(-xi int_r^1 1/mu); 0 at r = 0 by convention.
  double prime(double r) const {
    if (r < 0.0) throw DomainError("k': r must be nonnegative");
    if (r == 0.0) return 0.0;
    const double e = log_k(r);
    if (e < underflow_knee()) return 0.0;
    return xi_ * std::exp(e - std::log(mu_(r)));
  }

  /// Upper power bound on k' over (0, 1]: xi mu(1)^(-xi/B) mu(r)^(xi/B - 1).
  double prime_power_bound(double r) const {
    return xi_ * std::pow(mu_(1.0), -xi_ / B_) * std::pow(mu_(r), xi_ / B_ - 1.0);
  }

 private:
  MuFunction mu_;
  QuadratureOptions quad_;
  double B_ = 1.0;
  double xi_ = 2.0;
};

inline double k_eval(const MuFunction& mu, double r) { return KFunction(mu)(r); }
inline double k_prime_eval(const MuFunction& mu, double r) {
  if (r < 0.0) throw DomainError("k_prime_eval: r must be nonnegative");
  return KFunction(mu).prime(r);
}

/// V = k(V~), alpha_i = k o alpha~_i, q = 2B q~, c_a = 2B c~_a, c_b = 2B c~_b.
/// Gradients follow from the chain rule with k'.
inline LyapunovFamily transform_family(const LyapunovFamily& tilde, const MuValidationOptions& vopt = {}) {
  if (!tilde.mu) throw ConfigError("transform_family: family has no mu weighting");
  validate_mu(*tilde.mu, vopt);
  auto k = std::make_shared<const KFunction>(*tilde.mu);
  const double twoB = k->xi();
  const auto base = std::make_shared<const LyapunovFamily>(tilde);

  LyapunovFamily out;
  out.V = [k, base](const Vec& x, double t, const Vec& tau) { return (*k)(base->V(x, t, tau)); };
  out.V_t = [k, base](const Vec& x, double t, const Vec& tau) {
    return k->prime(base->V(x, t, tau)) * base->partial_t(x, t, tau);
  };
  out.V_x = [k, base](const Vec& x, double t, const Vec& tau) -> Vec {
    return k->prime(base->V(x, t, tau)) * base->grad_x(x, t, tau);
  };
  out.V_tau = [k, base](const Vec& x, double t, const Vec& tau) -> Vec {
    return k->prime(base->V(x, t, tau)) * base->grad_tau(x, t, tau);
  };
  out.alpha1 = [k, a = tilde.alpha1](double s) { return (*k)(a(s)); };
  out.alpha2 = [k, a = tilde.alpha2](double s) { return (*k)(a(s)); };
  out.q = [twoB, q = tilde.q](const Vec& tau) { return twoB * q(tau); };
  out.c_a = twoB * tilde.c_a;
  out.c_b = twoB * tilde.c_b;
  out.T = tilde.T;
  out.mu.reset();
  return out;
}

}  // namespace slowcert
