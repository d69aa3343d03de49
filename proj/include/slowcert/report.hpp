#pragma once

#include "slowcert/core.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace slowcert {

/// Outcome of sampling one inequality lhs <= rhs (or lhs >= rhs for A4).
/// An empty report means no violation was found among `samples_tested`
/// points; it is never a proof.
struct ViolationReport {
  struct Witness {
    Vec x;
    double t = 0.0;
    Vec tau;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // rhs - lhs for "<=" checks, negative when violated
  };

  std::string condition;
  std::vector<Witness> witnesses;
  std::size_t violations = 0;  // may exceed witnesses.size() when capped
  std::size_t samples_tested = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  std::size_t max_witnesses = 1000;

  bool passed() const { return violations == 0; }

  void record(double slack, bool violated, Witness w) {
    ++samples_tested;
    worst_slack = std::min(worst_slack, slack);
    if (violated) {
      ++violations;
      if (witnesses.size() < max_witnesses) witnesses.push_back(std::move(w));
    }
  }

  /// Associative merge; used to combine per-worker partial reports in order.
  void merge(const ViolationReport& other) {
    samples_tested += other.samples_tested;
    violations += other.violations;
    worst_slack = std::min(worst_slack, other.worst_slack);
    for (const auto& w : other.witnesses) {
      if (witnesses.size() >= max_witnesses) break;
      witnesses.push_back(w);
    }
  }
};

/// Worker count: SLOWCERT_THREADS if set, else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SLOWCERT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  return hw;
}

/// Runs body(i) for i in [0, n) on contiguous chunks. Each index must write
/// only its own output slot, so results are independent of scheduling.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), std::max<std::size_t>(n, 1)));
  if (workers <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace slowcert
