#pragma once

// Seeded low-discrepancy sampling (Halton sequence with a Cranley-Patterson
// shift drawn from the seed) over boxes used by the falsifiers.

#include "slowcert/core.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace slowcert {

class HaltonSampler {
 public:
  HaltonSampler(std::size_t dim, std::uint64_t seed) : dim_(dim), shift_(dim) {
    if (dim > kPrimes.size()) throw ConfigError("HaltonSampler: dimension too large");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& s : shift_) s = u(rng);
  }

  std::size_t dim() const { return dim_; }

  /// i-th point in [0,1)^dim.
  std::vector<double> point(std::uint64_t i) const {
    std::vector<double> out(dim_);
    for (std::size_t d = 0; d < dim_; ++d) {
      double v = radical_inverse(i + 1, kPrimes[d]) + shift_[d];
      out[d] = v - std::floor(v);
    }
    return out;
  }

 private:
  static constexpr std::array<unsigned, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

  static double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (i > 0) {
      r += f * static_cast<double>(i % base);
      i /= base;
      f *= inv;
    }
    return r;
  }

  std::size_t dim_;
  std::vector<double> shift_;
};

/// Sampling box shared by the grid falsifiers: |x|_inf <= radius,
/// t in [0, t_max]. Reports flag a point when lhs > rhs + rel_slack (1 + |rhs|).
struct SampleGrid {
  double radius = 10.0;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::optional<double> t_max;  // default 20 max(T, 1) alpha
  double rel_slack = 1e-9;
  std::size_t a4_samples = 2000;

  double resolve_t_max(double T, double alpha) const {
    return t_max ? *t_max : 20.0 * std::max(T, 1.0) * alpha;
  }
};

/// Maps u in [0,1) to [lo, hi].
inline double scale_unit(double u, double lo, double hi) { return lo + (hi - lo) * u; }

}  // namespace slowcert
