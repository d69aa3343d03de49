#pragma once

// The four worked systems with their frozen Lyapunov families and constants:
//   scalar          x' = x/sqrt(1+x^2) (1 - 90 cos^2(t/alpha))
//   pendulum        x1' = x2, x2' = -x1 - (1 + b2(t/alpha) m(x,t)) x2
//   friction        mass-spring with slowly varying friction coefficients
//   identification  x' = h(t/alpha) m(t) m(t)^T x
// Where the model leaves a function free, a default is shipped and checked
// against the model's hypotheses when the bundle is built.

#include "slowcert/averaging.hpp"
#include "slowcert/core.hpp"
#include "slowcert/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace slowcert {

using ClosedFormFn = std::function<double(const Vec& x, double t, double alpha)>;

struct ExampleExpectations {
  bool ugas_all_alpha = false;
  std::map<std::string, double> constants;
  std::string notes;
};

struct ExampleBundle {
  std::string name;
  SlowSystem sys;  // alpha = 1; use sys.with_alpha(a)
  LyapunovFamily family;
  std::optional<ClosedFormFn> closed_form_certificate;
  ExampleExpectations expected;
  double sample_radius = 10.0;  // default falsification box |x|_inf <= radius
};

namespace examples {

inline constexpr double kPi = std::numbers::pi;

/// 2 e^{sqrt 2} / (e - 1).
inline double scalar_sandwich_constant() { return 2.0 * std::exp(std::sqrt(2.0)) / (std::numbers::e - 1.0); }

/// e^{sqrt(1+x^2)} - e, written to stay accurate near 0.
inline double scalar_vbar(double x) {
  const double r = std::sqrt(1.0 + x * x);
  return std::numbers::e * std::expm1(x * x / (r + 1.0));
}

inline Vec vec1(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

/// Samples fn on [lo, hi] and returns (min, max).
inline std::pair<double, double> sampled_range(const ScalarFn& fn, double lo, double hi, std::size_t n = 20001) {
  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = fn(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  return {mn, mx};
}

}  // namespace examples

// ---------------------------------------------------------------------------
// scalar
// ---------------------------------------------------------------------------

inline ExampleBundle scalar_example() {
  using examples::kPi;
  const double C = examples::scalar_sandwich_constant();
  ExampleBundle b;
  b.name = "scalar";

  ParameterPath path;
  path.dim = 1;
  path.p = [](double s) { return examples::vec1(std::cos(s) * std::cos(s)); };
  path.p_prime = [](double s) { return examples::vec1(-std::sin(2.0 * s)); };
  path.period = kPi;
  b.sys.path = path;

  FrozenFamily fam;
  fam.dim_state = 1;
  fam.dim_param = 1;
  fam.f = [](const Vec& x, double, const Vec& tau) {
    return examples::vec1(x[0] / std::sqrt(1.0 + x[0] * x[0]) * (1.0 - 90.0 * tau[0]));
  };
  b.sys.frozen = fam;

  LyapunovFamily L;
  L.V = [](const Vec& x, double, const Vec&) { return examples::scalar_vbar(x[0]); };
  L.V_t = [](const Vec&, double, const Vec&) { return 0.0; };
  L.V_x = [](const Vec& x, double, const Vec&) {
    const double r = std::sqrt(1.0 + x[0] * x[0]);
    return examples::vec1(std::exp(r) * x[0] / r);
  };
  L.V_tau = [](const Vec&, double, const Vec&) { return examples::vec1(0.0); };
  L.alpha1 = [](double s) { return examples::scalar_vbar(s); };
  L.alpha2 = L.alpha1;
  L.q = [C](const Vec& tau) { return 45.0 * tau[0] - C; };
  L.c_a = 0.0;
  L.T = kPi;
  L.c_b = kPi * (45.0 / 2.0 - C);
  b.family = L;

  b.closed_form_certificate = [C](const Vec& x, double t, double alpha) {
    const double expo = 45.0 * alpha / 4.0 *
                        (std::sin(2.0 * t / alpha) + kPi - 4.0 * kPi * std::exp(std::sqrt(2.0)) /
                                                               (45.0 * (std::numbers::e - 1.0)));
    (void)C;
    return std::exp(expo) * examples::scalar_vbar(x[0]);
  };
  b.expected.ugas_all_alpha = true;
  b.expected.constants = {{"C", C},
                          {"c_b", L.c_b},
                          {"T", kPi},
                          {"M_bar_exact", 45.0 - C},
                          {"field_bound", 91.0}};
  b.expected.notes =
      "V does not depend on tau (c_a = 0): the certificate decreases for every alpha > 0. "
      "Not globally exponentially stable: the vector field is bounded by 91.";
  b.sample_radius = 10.0;
  return b;
}

// ---------------------------------------------------------------------------
// pendulum
// ---------------------------------------------------------------------------

struct PendulumOptions {
  ScalarFn b2 = [](double s) { return -0.1 * (1.0 + std::sin(s)); };
  std::optional<ScalarFn> b2_prime = [](double s) { return -0.1 * std::cos(s); };
  std::optional<double> b2_period = 2.0 * examples::kPi;
  std::function<double(const Vec&, double)> m = [](const Vec& x, double t) {
    return 0.5 * (1.0 + std::sin(x[0] + t));
  };
  double T = 2.0 * examples::kPi;
  double c_b = examples::kPi;
  /// Closed-form double integral of b2 over the window, when known.
  std::optional<ScalarFn> b2_double_window = [](double u) {
    const double T = 2.0 * examples::kPi;
    return -0.1 * (T * T / 2.0 - T * std::cos(u) + std::sin(u) - std::sin(u - T));
  };
};

enum class PendulumWindowForm {
  Averaging,  // T + 5 int b2 >= c_b: the window average of q = 1 + 5 tau
  AsPrinted   // 5 + T int b2 >= c_b
};

/// Minimum over sampled t of the chosen window condition minus c_b.
inline double pendulum_window_margin(const PendulumOptions& o, PendulumWindowForm form, double t_lo = 0.0,
                                     double t_hi = 4.0 * examples::kPi, std::size_t n = 2001) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t_lo + (t_hi - t_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    const double ib = integrate(o.b2, t - o.T, t).value;
    const double lhs = form == PendulumWindowForm::Averaging ? o.T + 5.0 * ib : 5.0 + o.T * ib;
    worst = std::min(worst, lhs - o.c_b);
  }
  return worst;
}

/// Frozen pendulum field with the friction modulation m given as a value.
inline Vec pendulum_field(const Vec& x, double tau, double m_value) {
  Vec out(2);
  out[0] = x[1];
  out[1] = -x[0] - (1.0 + tau * m_value) * x[1];
  return out;
}

inline double pendulum_v(const Vec& x) { return x[0] * x[0] + x[1] * x[1] + x[0] * x[1]; }

inline Vec pendulum_grad(const Vec& x) {
  Vec g(2);
  g[0] = 2.0 * x[0] + x[1];
  g[1] = 2.0 * x[1] + x[0];
  return g;
}

inline ExampleBundle pendulum_example(const PendulumOptions& o = {}) {
  const double lo = -o.T, hi = o.b2_period ? *o.b2_period : 10.0 * o.T;
  const auto [bmin, bmax] = examples::sampled_range(o.b2, lo, hi);
  if (bmax > 0.0) throw ConfigError("pendulum: b2 must be nonpositive; sampled max " + std::to_string(bmax));
  if (!(o.T > 0.0) || !(o.c_b > 0.0)) throw ConfigError("pendulum: T and c_b must be positive");
  for (int i = 0; i < 2000; ++i) {
    Vec x(2);
    x << std::sin(1.3 * i) * 10.0, std::cos(0.7 * i) * 10.0;
    const double mv = o.m(x, 0.37 * i);
    if (mv < 0.0 || mv > 1.0) throw ConfigError("pendulum: m must take values in [0, 1]");
  }
  (void)bmin;

  ExampleBundle b;
  b.name = "pendulum";
  ParameterPath path;
  path.dim = 1;
  path.p = [b2 = o.b2](double s) { return examples::vec1(b2(s)); };
  if (o.b2_prime) path.p_prime = [bp = *o.b2_prime](double s) { return examples::vec1(bp(s)); };
  path.period = o.b2_period;
  b.sys.path = path;

  FrozenFamily fam;
  fam.dim_state = 2;
  fam.dim_param = 1;
  fam.f = [m = o.m](const Vec& x, double t, const Vec& tau) { return pendulum_field(x, tau[0], m(x, t)); };
  b.sys.frozen = fam;

  LyapunovFamily L;
  L.V = [](const Vec& x, double, const Vec&) { return pendulum_v(x); };
  L.V_t = [](const Vec&, double, const Vec&) { return 0.0; };
  L.V_x = [](const Vec& x, double, const Vec&) { return pendulum_grad(x); };
  L.V_tau = [](const Vec&, double, const Vec&) { return examples::vec1(0.0); };
  L.alpha1 = [](double s) { return 0.5 * s * s; };
  L.alpha2 = [](double s) { return 1.5 * s * s; };
  L.q = [](const Vec& tau) { return 1.0 + 5.0 * tau[0]; };
  L.c_a = 0.0;
  L.T = o.T;
  L.c_b = o.c_b;
  b.family = L;

  // The closed form keeps only the 5 tau part of q in the exponent, so it is
  // the constructed certificate divided by exp(alpha T / 2).
  ScalarFn dbl = o.b2_double_window ? *o.b2_double_window : ScalarFn([b2 = o.b2, T = o.T](double u) {
    return integrate([&](double r) { return (r - u + T) * b2(r); }, u - T, u).value;
  });
  b.closed_form_certificate = [dbl, T = o.T](const Vec& x, double t, double alpha) {
    return std::exp(5.0 * alpha / T * dbl(t / alpha)) * pendulum_v(x);
  };
  b.expected.ugas_all_alpha = true;
  b.expected.constants = {{"T", o.T}, {"c_b", o.c_b},
                          {"window_margin_averaging", pendulum_window_margin(o, PendulumWindowForm::Averaging)},
                          {"window_margin_as_printed", pendulum_window_margin(o, PendulumWindowForm::AsPrinted)}};
  b.expected.notes =
      "V = x1^2 + x2^2 + x1 x2 is tau-independent: decrease for every alpha > 0. The closed-form certificate "
      "uses only the 5 tau part of q; constructed / closed form = exp(alpha T / 2).";
  b.sample_radius = 10.0;
  return b;
}

// ---------------------------------------------------------------------------
// friction
// ---------------------------------------------------------------------------

struct FrictionOptions {
  ScalarFn k = [](double t) { return 1.0 + std::exp(-t); };
  ScalarFn k_prime = [](double t) { return -std::exp(-t); };
  double k_o = 1.0;
  double k_bar = 2.0;
  std::array<ScalarFn, 3> sigmas{[](double s) { return (1.0 + 0.5 * std::sin(s)) / 2.0; },
                                 [](double s) { return (1.0 + 0.5 * std::sin(s)) / 2.0; },
                                 [](double s) { return (1.0 + 0.5 * std::sin(s)) / 2.0; }};
  std::optional<std::array<ScalarFn, 3>> sigma_primes = std::array<ScalarFn, 3>{
      [](double s) { return 0.25 * std::cos(s); }, [](double s) { return 0.25 * std::cos(s); },
      [](double s) { return 0.25 * std::cos(s); }};
  std::optional<double> sigma_period = 2.0 * examples::kPi;
  double beta1 = 1.0;
  double beta2 = 1.0;
  ScalarFn stribeck = [](double s) { return s * s / (1.0 + s * s); };
  double T = 2.0 * examples::kPi;
  double sigma1_window = examples::kPi;  // lower bound on int_{t-T}^t sigma_1
  /// Closed-form double window integral of sigma_1, when known.
  std::optional<ScalarFn> sigma1_double_window = [](double u) {
    const double T = 2.0 * examples::kPi;
    return T * T / 4.0 + 0.25 * (-T * std::cos(u) + std::sin(u) - std::sin(u - T));
  };
};

inline double friction_A(double k_o, double beta2) {
  return 1.0 + k_o / 2.0 + (1.0 + 2.0 * beta2) * (1.0 + 2.0 * beta2) / k_o;
}

inline double friction_v(const Vec& x, double kt, double tau1, double A) {
  return A * (kt * x[0] * x[0] + x[1] * x[1]) + tau1 * x[0] * x[1];
}

inline ExampleBundle friction_example(const FrictionOptions& o = {}) {
  const double span_hi = o.sigma_period ? *o.sigma_period : 10.0 * o.T;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto [mn, mx] = examples::sampled_range(o.sigmas[i], -o.T, span_hi);
    if (!(mn > 0.0) || mx > 1.0) throw ConfigError("friction: sigma_" + std::to_string(i + 1) + " must map into (0, 1]");
  }
  {
    const auto [kmn, kmx] = examples::sampled_range(o.k, 0.0, 50.0);
    if (kmn < o.k_o - 1e-12 || kmx > o.k_bar + 1e-12) throw ConfigError("friction: k must lie in [k_o, k_bar]");
    const auto [dmn, dmx] = examples::sampled_range(o.k_prime, 0.0, 50.0);
    (void)dmn;
    if (dmx > 0.0) throw ConfigError("friction: spring stiffness is nonincreasing, but k' > 0 was sampled");
  }
  const double win = examples::sampled_range(
                         [&](double t) { return integrate(o.sigmas[0], t - o.T, t).value; }, 0.0, span_hi, 401)
                         .first;
  if (win < o.sigma1_window - 1e-9)
    throw ConfigError("friction: window integral of sigma_1 falls below the declared bound");

  const double A = friction_A(o.k_o, o.beta2);
  const double b_bar = o.k_o / (4.0 * A * A * o.k_bar);

  ExampleBundle b;
  b.name = "friction";
  ParameterPath path;
  path.dim = 3;
  path.p = [s = o.sigmas](double r) {
    Vec v(3);
    v << s[0](r), s[1](r), s[2](r);
    return v;
  };
  if (o.sigma_primes)
    path.p_prime = [s = *o.sigma_primes](double r) {
      Vec v(3);
      v << s[0](r), s[1](r), s[2](r);
      return v;
    };
  path.period = o.sigma_period;
  b.sys.path = path;

  FrozenFamily fam;
  fam.dim_state = 2;
  fam.dim_param = 3;
  fam.f = [k = o.k, beta1 = o.beta1, beta2 = o.beta2, mu = o.stribeck](const Vec& x, double t, const Vec& tau) {
    Vec out(2);
    out[0] = x[1];
    out[1] = -tau[0] * x[1] - k(t) * x[0] -
             (tau[1] + tau[2] * std::exp(-beta1 * mu(x[1]))) * std::tanh(beta2 * x[1]);
    return out;
  };
  b.sys.frozen = fam;

  LyapunovFamily L;
  L.V = [k = o.k, A](const Vec& x, double t, const Vec& tau) { return friction_v(x, k(t), tau[0], A); };
  L.V_t = [kp = o.k_prime, A](const Vec& x, double t, const Vec&) { return A * kp(t) * x[0] * x[0]; };
  L.V_x = [k = o.k, A](const Vec& x, double t, const Vec& tau) {
    Vec g(2);
    g[0] = 2.0 * A * k(t) * x[0] + tau[0] * x[1];
    g[1] = 2.0 * A * x[1] + tau[0] * x[0];
    return g;
  };
  L.V_tau = [](const Vec& x, double, const Vec&) {
    Vec g(3);
    g << x[0] * x[1], 0.0, 0.0;
    return g;
  };
  L.alpha1 = [](double s) { return 0.5 * s * s; };
  L.alpha2 = [A, kb = o.k_bar](double s) { return 2.0 * A * A * kb * s * s; };
  L.q = [b_bar](const Vec& tau) { return b_bar * tau[0]; };
  L.c_a = 1.0;
  L.T = o.T;
  L.c_b = b_bar * o.sigma1_window;
  b.family = L;

  ScalarFn dbl = o.sigma1_double_window ? *o.sigma1_double_window : ScalarFn([s1 = o.sigmas[0], T = o.T](double u) {
    return integrate([&](double r) { return (r - u + T) * s1(r); }, u - T, u).value;
  });
  b.closed_form_certificate = [dbl, b_bar, T = o.T, k = o.k, A, s = o.sigmas](const Vec& x, double t, double alpha) {
    const double u = t / alpha;
    return friction_v(x, k(t), s[0](u), A) * std::exp(alpha * b_bar / T * dbl(u));
  };
  b.expected.ugas_all_alpha = false;
  b.expected.constants = {{"A", A},           {"b_bar", b_bar}, {"k_o", o.k_o},
                          {"k_bar", o.k_bar}, {"T", o.T},       {"sigma1_window", o.sigma1_window},
                          {"c_b", L.c_b}};
  b.expected.notes =
      "q(tau) = tau_1 b_bar with b_bar = k_o/(4 A^2 k_bar) and c_a = 1; the averaging constant is "
      "c_b = b_bar * (lower bound of the sigma_1 window integral).";
  b.sample_radius = 10.0;
  return b;
}

/// c_a large enough for |V_x| <= c_a sqrt(|x|^2/2) and |g| <= c_a when g is
/// a unit column: sqrt(2) (2 A max(k_bar, 1) + 1).
inline double friction_iss_c_a(const FrictionOptions& o = {}) {
  const double A = friction_A(o.k_o, o.beta2);
  return std::max(1.0, std::sqrt(2.0) * (2.0 * A * std::max(o.k_bar, 1.0) + 1.0));
}

/// Controlled friction: the input enters the velocity equation through the
/// unit column g = (0, 1)^T; the family's c_a is raised to satisfy the
/// growth conditions on V_x and g.
inline ExampleBundle controlled_friction_example(const FrictionOptions& o = {}) {
  ExampleBundle b = friction_example(o);
  b.name = "friction";
  b.sys.frozen.g = [](const Vec&, double, const Vec&) {
    Mat g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  b.sys.frozen.dim_control = 1;
  b.family.c_a = friction_iss_c_a(o);
  b.expected.constants["c_a_iss"] = b.family.c_a;
  return b;
}

// ---------------------------------------------------------------------------
// identification
// ---------------------------------------------------------------------------

/// Tabulated window integrals of m m^T over [t - c, t]:
///   S(t) = int_{t-c}^t m m^T,   D(t) = int_{t-c}^t (r - t + c) m m^T(r) dr,
/// with cubic Hermite interpolation from exact nodal derivatives
///   S' = m m^T(t) - m m^T(t - c),   D' = c m m^T(t) - S(t).
/// Outside the table (aperiodic m) values come from direct quadrature.
class WindowMatrixTable {
 public:
  using MFn = std::function<Vec(double)>;

  WindowMatrixTable(MFn m, std::size_t n, double c, std::optional<double> period, double lo, double hi,
                    std::size_t nodes)
      : m_(std::move(m)), n_(n), c_(c), period_(period) {
    if (period_) {
      lo_ = 0.0;
      hi_ = *period_;
    } else {
      lo_ = lo;
      hi_ = hi;
    }
    h_ = (hi_ - lo_) / static_cast<double>(nodes - 1);
    S_.resize(nodes);
    D_.resize(nodes);
    dS_.resize(nodes);
    dD_.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      const double t = lo_ + h_ * static_cast<double>(i);
      S_[i] = direct_S(t);
      D_[i] = direct_D(t);
      dS_[i] = outer(t) - outer(t - c_);
      dD_[i] = c_ * outer(t) - S_[i];
    }
  }

  Mat outer(double t) const {
    const Vec v = m_(t);
    return v * v.transpose();
  }

  Mat direct_S(double t) const { return entrywise(t, false); }
  Mat direct_D(double t) const { return entrywise(t, true); }

  Mat S(double t) const { return interp(t, S_, dS_, false); }
  Mat D(double t) const { return interp(t, D_, dD_, true); }
  Mat D_prime(double t) const { return c_ * outer(t) - S(t); }

  double window() const { return c_; }

 private:
  Mat entrywise(double t, bool weighted) const {
    Mat out(n_, n_);
    QuadratureOptions q;
    q.abs_tol = 1e-12;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) {
        const auto fn = [&](double r) {
          const Vec v = m_(r);
          return (weighted ? (r - t + c_) : 1.0) * v[i] * v[j];
        };
        out(i, j) = out(j, i) = integrate(fn, t - c_, t, q).value;
      }
    return out;
  }

  Mat interp(double t, const std::vector<Mat>& val, const std::vector<Mat>& der, bool weighted) const {
    double u = t;
    if (period_) {
      u = std::fmod(t - lo_, *period_);
      if (u < 0.0) u += *period_;
      u += lo_;
    } else if (t < lo_ || t > hi_) {
      return weighted ? direct_D(t) : direct_S(t);
    }
    std::size_t i = static_cast<std::size_t>(std::floor((u - lo_) / h_));
    if (i + 1 >= val.size()) i = val.size() - 2;
    const double s = (u - (lo_ + h_ * static_cast<double>(i))) / h_;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * val[i] + h10 * h_ * der[i] + h01 * val[i + 1] + h11 * h_ * der[i + 1];
  }

  MFn m_;
  std::size_t n_;
  double c_;
  std::optional<double> period_;
  double lo_ = 0.0, hi_ = 1.0, h_ = 1.0;
  std::vector<Mat> S_, D_, dS_, dD_;
};

struct IdentificationOptions {
  ScalarFn h = [](double) { return -1.0; };
  ScalarFn h_prime = [](double) { return 0.0; };
  std::optional<double> h_period = 2.0 * examples::kPi;
  std::size_t dim = 2;
  std::function<Vec(double)> m = [](double t) {
    Vec v(2);
    v << std::cos(t), std::sin(t);
    return v;
  };
  std::optional<double> m_period = 2.0 * examples::kPi;
  double T = examples::kPi;
  double c_tilde = 2.0 * examples::kPi;
  double alpha_lo = examples::kPi;  // lower persistency bound
  double alpha_hi = examples::kPi;  // upper persistency bound (also bounds |h|)
  std::size_t table_nodes = 1024;
  double table_hi = 1000.0;         // table span for aperiodic m
  std::optional<ScalarFn> h_double_window = [](double) {
    return -examples::kPi * examples::kPi / 2.0;  // h = -1, T = pi
  };

  /// Slowly varying h = -1 + 0.5 sin(s) with T = 2 pi: the window integral is
  /// -2 pi <= -alpha_lo and sup |h'| = 1/2, so the alpha bound is nonzero.
  static IdentificationOptions varying() {
    IdentificationOptions o;
    o.h = [](double s) { return -1.0 + 0.5 * std::sin(s); };
    o.h_prime = [](double s) { return 0.5 * std::cos(s); };
    o.T = 2.0 * examples::kPi;
    o.h_double_window = [](double u) {
      const double T = 2.0 * examples::kPi;
      return -T * T / 2.0 + 0.5 * (-T * std::cos(u) + std::sin(u) - std::sin(u - T));
    };
    return o;
  }
};

struct PersistencyBounds {
  double min_eig = 0.0;
  double max_eig = 0.0;
  double worst_t = 0.0;
};

/// Eigenvalue range of int_t^{t+c} m m^T over sampled t.
inline PersistencyBounds persistency_bounds(const std::function<Vec(double)>& m, std::size_t n, double c,
                                            double t_lo, double t_hi, std::size_t samples) {
  PersistencyBounds pb{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), t_lo};
  QuadratureOptions q;
  q.abs_tol = 1e-12;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = samples == 1 ? t_lo : t_lo + (t_hi - t_lo) * static_cast<double>(k) / static_cast<double>(samples - 1);
    Mat W(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        W(i, j) = W(j, i) = integrate([&](double r) { const Vec v = m(r); return v[i] * v[j]; }, t, t + c, q).value;
    Eigen::SelfAdjointEigenSolver<Mat> es(W);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (lo < pb.min_eig) {
      pb.min_eig = lo;
      pb.worst_t = t;
    }
    pb.max_eig = std::max(pb.max_eig, hi);
  }
  return pb;
}

inline double identification_kappa(double c_tilde, double alpha_lo, double alpha_hi) {
  return c_tilde / 2.0 + alpha_hi * alpha_hi * std::pow(c_tilde, 4) / (2.0 * alpha_lo) + c_tilde * c_tilde;
}

inline ExampleBundle identification_example(const IdentificationOptions& o = {}) {
  const double c = o.c_tilde;
  const double span = o.m_period ? *o.m_period : 10.0 * c;
  for (int k = 0; k < 257; ++k) {
    const double t = -c + (span + c) * k / 256.0;
    if (std::abs(o.m(t).norm() - 1.0) > 1e-9) throw ConfigError("identification: |m(t)| must be 1");
  }
  const PersistencyBounds pb = persistency_bounds(o.m, o.dim, c, 0.0, span, 65);
  const double tol = 1e-8;
  if (pb.min_eig < o.alpha_lo - tol || pb.max_eig > o.alpha_hi + tol)
    throw ConfigError("identification: persistency window [" + std::to_string(pb.min_eig) + ", " +
                      std::to_string(pb.max_eig) + "] leaves [alpha_lo, alpha_hi] near t=" +
                      std::to_string(pb.worst_t));
  const double h_span = o.h_period ? *o.h_period : 10.0 * o.T;
  const auto [hmin, hmax] = examples::sampled_range(o.h, -o.T, h_span);
  if (hmax > 1e-12 || hmin < -o.alpha_hi - 1e-12)
    throw ConfigError("identification: h must map into [-alpha_hi, 0]");
  const double hwin = examples::sampled_range([&](double t) { return integrate(o.h, t - o.T, t).value; }, 0.0,
                                              h_span, 401)
                          .second;
  if (hwin > -o.alpha_lo + 1e-9) throw ConfigError("identification: window integral of h exceeds -alpha_lo");

  const double kappa = identification_kappa(c, o.alpha_lo, o.alpha_hi);
  const double top = kappa + c * c * o.alpha_hi;
  auto table = std::make_shared<const WindowMatrixTable>(o.m, o.dim, c, o.m_period, -c - 1.0, o.table_hi,
                                                         o.table_nodes);

  ExampleBundle b;
  b.name = "identification";
  ParameterPath path;
  path.dim = 1;
  path.p = [h = o.h](double s) { return examples::vec1(h(s)); };
  path.p_prime = [hp = o.h_prime](double s) { return examples::vec1(hp(s)); };
  path.period = o.h_period;
  b.sys.path = path;

  FrozenFamily fam;
  fam.dim_state = o.dim;
  fam.dim_param = 1;
  fam.f = [m = o.m](const Vec& x, double t, const Vec& tau) -> Vec {
    const Vec v = m(t);
    return tau[0] * v * v.dot(x);
  };
  b.sys.frozen = fam;

  LyapunovFamily L;
  L.V = [table, kappa](const Vec& x, double t, const Vec& tau) {
    return kappa * x.squaredNorm() - tau[0] * x.dot(table->D(t) * x);
  };
  L.V_t = [table](const Vec& x, double t, const Vec& tau) { return -tau[0] * x.dot(table->D_prime(t) * x); };
  L.V_x = [table, kappa](const Vec& x, double t, const Vec& tau) -> Vec {
    return 2.0 * (kappa * x - tau[0] * (table->D(t) * x));
  };
  L.V_tau = [table](const Vec& x, double t, const Vec&) { return examples::vec1(-x.dot(table->D(t) * x)); };
  L.alpha1 = [kappa](double s) { return kappa * s * s; };
  L.alpha2 = [top](double s) { return top * s * s; };
  L.q = [al = o.alpha_lo, top](const Vec& tau) { return -tau[0] * al / (2.0 * top); };
  L.c_a = 1.0;
  L.T = o.T;
  L.c_b = o.alpha_lo * o.alpha_lo / (2.0 * top);
  b.family = L;

  ScalarFn dbl = o.h_double_window ? *o.h_double_window : ScalarFn([h = o.h, T = o.T](double u) {
    return integrate([&](double r) { return (r - u + T) * h(r); }, u - T, u).value;
  });
  b.closed_form_certificate = [dbl, table, kappa, top, al = o.alpha_lo, T = o.T, h = o.h](const Vec& x, double t,
                                                                                          double alpha) {
    const double tau = h(t / alpha);
    const double v = kappa * x.squaredNorm() - tau * x.dot(table->D(t) * x);
    return std::exp(-alpha * al / (2.0 * T * top) * dbl(t / alpha)) * v;
  };
  b.expected.ugas_all_alpha = false;
  b.expected.constants = {{"kappa", kappa},
                          {"alpha_lo", o.alpha_lo},
                          {"alpha_hi", o.alpha_hi},
                          {"persistency_min", pb.min_eig},
                          {"persistency_max", pb.max_eig},
                          {"c_tilde", c},
                          {"T", o.T},
                          {"c_b", L.c_b}};
  b.expected.notes = "V = x^T P(t, tau) x with P = kappa I - tau D(t); alpha bound 2 T sup|h'| / c_b.";
  b.sample_radius = 10.0;
  return b;
}

/// Table access for tests that compare interpolation against quadrature.
inline WindowMatrixTable identification_table(const IdentificationOptions& o = {}) {
  return WindowMatrixTable(o.m, o.dim, o.c_tilde, o.m_period, -o.c_tilde - 1.0, o.table_hi, o.table_nodes);
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

inline std::vector<std::string> example_names() { return {"scalar", "pendulum", "friction", "identification"}; }

inline ExampleBundle example_by_name(const std::string& name) {
  if (name == "scalar") return scalar_example();
  if (name == "pendulum") return pendulum_example();
  if (name == "friction") return friction_example();
  if (name == "identification") return identification_example();
  throw ConfigError("unknown example '" + name + "' (expected scalar, pendulum, friction, identification)");
}

}  // namespace slowcert
