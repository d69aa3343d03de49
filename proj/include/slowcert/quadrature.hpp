#pragma once

// Adaptive Simpson quadrature with Richardson correction.

#include "slowcert/core.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace slowcert {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_depth = 40;
  int panels = 16;  // initial uniform split; keeps periodic integrands from fooling the first estimate
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
};

namespace detail {

struct SimpsonState {
  const std::function<double(double)>* fn;
  int max_depth;
  long evaluations = 0;
  double error = 0.0;
  bool failed = false;
  double worst_unconverged = 0.0;

  double eval(double x) {
    ++evaluations;
    const double v = (*fn)(x);
    if (!std::isfinite(v))
      throw NumericalError("quadrature: non-finite integrand at " + std::to_string(x));
    return v;
  }

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol,
                 int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval(lm);
    const double frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double both = left + right;
    const double diff = both - whole;
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() *
                            (std::abs(left) + std::abs(right) + std::abs(b - a) * (std::abs(fa) + std::abs(fb)));
    if (std::abs(diff) <= 15.0 * tol || std::abs(diff) <= roundoff || m <= a || b <= m) {
      error += std::abs(diff) / 15.0;
      return both + diff / 15.0;
    }
    if (depth >= max_depth) {
      failed = true;
      worst_unconverged = std::max(worst_unconverged, std::abs(diff) / 15.0);
      error += std::abs(diff) / 15.0;
      return both + diff / 15.0;
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace detail

/// Integral of fn over [a, b] (signed; a > b flips the sign).
inline QuadratureResult integrate(const std::function<double(double)>& fn, double a, double b,
                                  const QuadratureOptions& opt = {}) {
  QuadratureResult res;
  if (a == b) return res;
  if (a > b) {
    res = integrate(fn, b, a, opt);
    res.value = -res.value;
    return res;
  }
  detail::SimpsonState st{&fn, opt.max_depth};
  const int panels = std::max(1, opt.panels);
  const double width = (b - a) / panels;
  const double panel_tol = opt.abs_tol / panels;
  double total = 0.0;
  double fa = st.eval(a);
  for (int i = 0; i < panels; ++i) {
    const double lo = a + width * i;
    const double hi = (i + 1 == panels) ? b : a + width * (i + 1);
    const double fm = st.eval(0.5 * (lo + hi));
    const double fb = st.eval(hi);
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += st.recurse(lo, hi, fa, fm, fb, whole, panel_tol, 0);
    fa = fb;
  }
  if (st.failed && st.error > opt.abs_tol)
    throw QuadratureError("quadrature did not converge within max depth " +
                              std::to_string(opt.max_depth) + " on [" + std::to_string(a) + ", " +
                              std::to_string(b) + "]",
                          st.error);
  res.value = total;
  res.error = st.error;
  res.evaluations = st.evaluations;
  return res;
}

inline double integrate_value(const std::function<double(double)>& fn, double a, double b,
                              const QuadratureOptions& opt = {}) {
  return integrate(fn, a, b, opt).value;
}

}  // namespace slowcert
