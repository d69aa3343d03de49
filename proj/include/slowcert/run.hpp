#pragma once

// Pipeline behind the command-line tool: load a bundle, falsify the
// hypotheses, build certificates, check them along seeded trajectories, and
// write a text report plus CSV files.
//
// Exit codes: 0 all requested checks passed, 1 some check failed,
// 2 configuration or parse error, 3 numerical failure.

#include "slowcert/certificate.hpp"
#include "slowcert/config.hpp"
#include "slowcert/examples.hpp"
#include "slowcert/expression.hpp"
#include "slowcert/simverify.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace slowcert {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitNumeric = 3 };

inline constexpr const char* kCsvHeaderTag = "# slowcert-csv v1";

/// Shortest round-trip decimal form; locale independent.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// custom systems from expressions
// ---------------------------------------------------------------------------

inline ExampleBundle custom_bundle(const CustomSpec& s) {
  const std::size_t n = s.state_dim, d = s.param_dim;
  if (n == 0 || d == 0) throw ConfigError("custom: state_dim and param_dim must be positive");
  if (s.f.size() != n) throw ConfigError("custom.f needs " + std::to_string(n) + " expressions");
  if (s.path.size() != d) throw ConfigError("custom.path needs " + std::to_string(d) + " expressions");
  if (!s.path_prime.empty() && s.path_prime.size() != d) throw ConfigError("custom.path_prime needs d expressions");
  if (!s.g.empty() && s.g.size() != n) throw ConfigError("custom.g needs n expressions");
  if (!s.V_x.empty() && s.V_x.size() != n) throw ConfigError("custom.V_x needs n expressions");
  if (!s.V_tau.empty() && s.V_tau.size() != d) throw ConfigError("custom.V_tau needs d expressions");
  if (s.V.empty() || s.alpha1.empty() || s.alpha2.empty() || s.q.empty())
    throw ConfigError("custom: V, alpha1, alpha2 and q are required");

  const ExpressionScope full{n, d, true, false};
  const ExpressionScope in_s{0, 0, false, true};
  const ExpressionScope in_tau{0, d, false, false};
  const auto many = [](const std::vector<std::string>& src, const ExpressionScope& sc, const std::string& what) {
    std::vector<Expression> out;
    for (std::size_t i = 0; i < src.size(); ++i) {
      try {
        out.push_back(parse_expression(src[i], sc));
      } catch (const ParseError& e) {
        throw ConfigError(what + "[" + std::to_string(i + 1) + "]: " + e.what());
      }
    }
    return out;
  };
  const auto one = [](const std::string& src, const ExpressionScope& sc, const std::string& what) {
    try {
      return parse_expression(src, sc);
    } catch (const ParseError& e) {
      throw ConfigError(what + ": " + e.what());
    }
  };

  const auto f = many(s.f, full, "custom.f");
  const auto path = many(s.path, in_s, "custom.path");
  const auto vec_of = [](const std::vector<Expression>& es) {
    return [es](const Vec& x, double t, const Vec& tau) {
      Vec out(static_cast<Eigen::Index>(es.size()));
      for (std::size_t i = 0; i < es.size(); ++i) out[static_cast<Eigen::Index>(i)] = es[i](x, t, tau);
      return out;
    };
  };
  const auto vec_of_s = [](const std::vector<Expression>& es) {
    return [es](double r) {
      Vec out(static_cast<Eigen::Index>(es.size()));
      for (std::size_t i = 0; i < es.size(); ++i) out[static_cast<Eigen::Index>(i)] = es[i].of_s(r);
      return out;
    };
  };

  ExampleBundle b;
  b.name = "custom";
  b.sys.frozen.dim_state = n;
  b.sys.frozen.dim_param = d;
  b.sys.frozen.f = vec_of(f);
  if (!s.g.empty()) {
    const auto g = many(s.g, full, "custom.g");
    b.sys.frozen.g = [g, n](const Vec& x, double t, const Vec& tau) {
      Mat out(static_cast<Eigen::Index>(n), 1);
      for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), 0) = g[i](x, t, tau);
      return out;
    };
    b.sys.frozen.dim_control = 1;
  }
  b.sys.path.dim = d;
  b.sys.path.p = vec_of_s(path);
  if (!s.path_prime.empty()) b.sys.path.p_prime = vec_of_s(many(s.path_prime, in_s, "custom.path_prime"));
  b.sys.path.period = s.path_period;

  LyapunovFamily L;
  L.V = one(s.V, full, "custom.V");
  if (!s.V_t.empty()) L.V_t = one(s.V_t, full, "custom.V_t");
  if (!s.V_x.empty()) L.V_x = vec_of(many(s.V_x, full, "custom.V_x"));
  if (!s.V_tau.empty()) L.V_tau = vec_of(many(s.V_tau, full, "custom.V_tau"));
  const auto a1 = one(s.alpha1, in_s, "custom.alpha1");
  const auto a2 = one(s.alpha2, in_s, "custom.alpha2");
  L.alpha1 = [a1](double r) { return a1.of_s(r); };
  L.alpha2 = [a2](double r) { return a2.of_s(r); };
  const auto q = one(s.q, in_tau, "custom.q");
  L.q = [q](const Vec& tau) { return q(ExprArgs{nullptr, 0.0, &tau, 0.0}); };
  L.c_a = s.c_a;
  L.c_b = s.c_b;
  L.T = s.T;
  b.family = L;
  return b;
}

inline ExampleBundle resolve_bundle(const RunConfig& cfg) {
  if (cfg.example == "custom") {
    if (!cfg.custom) throw ConfigError("example = \"custom\" needs a [custom] section");
    return custom_bundle(*cfg.custom);
  }
  if (cfg.mode == RunMode::Iss && cfg.example == "friction") return controlled_friction_example();
  return example_by_name(cfg.example);
}

// ---------------------------------------------------------------------------
// outputs
// ---------------------------------------------------------------------------

/// Trajectory CSV: t, x1..xn, V_hat, V_sharp, dV_sharp_dt, decrease_bound.
inline void write_trajectory_csv(const std::filesystem::path& file, const Certificate& cert, const Trajectory& tr,
                                 const std::string& comment) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write '" + file.string() + "'");
  out << kCsvHeaderTag << ' ' << comment << '\n';
  out << 't';
  for (std::size_t i = 1; i <= cert.sys.frozen.dim_state; ++i) out << ",x" << i;
  out << ",V_hat,V_sharp,dV_sharp_dt,decrease_bound\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double t = tr.times[k];
    const Vec& x = tr.states[k];
    const CertificateRate r = certificate_rate(cert, x, t);
    const double gain = std::exp(r.log_gain);
    out << fmt_num(t);
    for (Eigen::Index i = 0; i < x.size(); ++i) out << ',' << fmt_num(x[i]);
    out << ',' << fmt_num(r.v_hat) << ',' << fmt_num(gain * r.v_hat) << ',' << fmt_num(gain * r.scaled_derivative)
        << ',' << fmt_num(-cert.decrease_coeff * r.v_hat) << '\n';
  }
}

inline std::string describe(const ViolationReport& r) {
  std::ostringstream o;
  o << r.condition << ": " << r.violations << " violations / " << r.samples_tested << " samples, worst slack "
    << fmt_num(r.worst_slack);
  if (!r.witnesses.empty()) {
    const auto& w = r.witnesses.front();
    o << " (first witness t=" << fmt_num(w.t) << " |x|=" << fmt_num(w.x.norm()) << " lhs=" << fmt_num(w.lhs)
      << " rhs=" << fmt_num(w.rhs) << ")";
  }
  return o.str();
}

struct RunOutcome {
  int exit_code = kExitPass;
  std::string report;
  std::vector<std::filesystem::path> files;
};

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

namespace detail {

inline SampleGrid grid_from(const RunConfig& cfg) {
  SampleGrid g;
  g.radius = cfg.radius;
  g.samples = cfg.samples;
  g.seed = cfg.seed;
  g.t_max = cfg.t_max;
  g.a4_samples = cfg.a4_samples;
  return g;
}

inline TrajectoryBatch batch_from(const RunConfig& cfg) {
  TrajectoryBatch b;
  b.count = cfg.batch_count;
  b.radius = cfg.batch_radius;
  b.seed = cfg.seed;
  b.horizon = cfg.batch_horizon;
  b.margin_tol = cfg.margin_tol;
  b.integrator.stride = cfg.batch_stride;
  return b;
}

inline FalsifyOptions falsify_from(const RunConfig& cfg, std::size_t d) {
  FalsifyOptions f;
  f.grid = grid_from(cfg);
  if (!cfg.tau_lo.empty()) {
    if (cfg.tau_lo.size() != d) throw ConfigError("grid.tau_lo must have one entry per parameter");
    Vec lo(static_cast<Eigen::Index>(d)), hi(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      lo[static_cast<Eigen::Index>(i)] = cfg.tau_lo[i];
      hi[static_cast<Eigen::Index>(i)] = cfg.tau_hi[i];
    }
    f.tau_box = std::make_pair(lo, hi);
  }
  return f;
}

class Runner {
 public:
  Runner(const RunConfig& cfg, ExampleBundle bundle) : cfg_(cfg), b_(std::move(bundle)) {}

  RunOutcome run() {
    log_ << "slowcert " << mode_name(cfg_.mode) << "\n";
    log_ << "example: " << b_.name << "\n";
    log_ << "seed: " << cfg_.seed << "\n";
    log_ << "threads: " << worker_count() << "\n";
    if (!b_.expected.notes.empty()) log_ << "notes: " << b_.expected.notes << "\n";
    log_ << "\n";
    if (cfg_.write_csv || cfg_.write_report) std::filesystem::create_directories(cfg_.out_dir);

    switch (cfg_.mode) {
      case RunMode::Validate: validate(); break;
      case RunMode::Certify:
        validate();
        certify(true);
        break;
      case RunMode::Sweep: certify(false); break;
      case RunMode::Iss: iss(); break;
      case RunMode::AlphaStar: alpha_star(); break;
    }
    log_ << "\nresult: " << (ok_ ? "PASS" : "FAIL") << "\n";
    RunOutcome out;
    out.exit_code = ok_ ? kExitPass : kExitFail;
    out.report = log_.str();
    if (cfg_.write_report) {
      const auto p = std::filesystem::path(cfg_.out_dir) / "report.txt";
      std::ofstream f(p);
      f << out.report;
      files_.push_back(p);
    }
    out.files = files_;
    return out;
  }

 private:
  double first_alpha() const { return cfg_.alpha_list.empty() ? 1.0 : cfg_.alpha_list.front(); }

  void validate() {
    const SlowSystem sys = b_.sys.with_alpha(first_alpha());
    log_ << "[assumptions] alpha=" << fmt_num(sys.alpha) << "\n";
    const auto reps = falsify_assumption1(b_.family, sys, falsify_from(cfg_, sys.frozen.dim_param));
    for (const auto& r : reps) {
      log_ << "  " << describe(r) << "\n";
      if (!r.passed()) ok_ = false;
    }
  }

  std::string alpha_tag(std::size_t i) const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "a%02zu", i);
    return buf;
  }

  void certify(bool strict_grid) {
    const TrajectoryBatch batch = batch_from(cfg_);
    std::ofstream summary;
    if (cfg_.write_csv) {
      const auto p = std::filesystem::path(cfg_.out_dir) / "alpha_summary.csv";
      summary.open(p);
      summary << kCsvHeaderTag << " seed=" << cfg_.seed << '\n'
              << "alpha,threshold_ugas,decrease_coeff_log,guaranteed,trajectories,blow_ups,passed,worst_slack\n";
      files_.push_back(p);
    }
    for (std::size_t ai = 0; ai < cfg_.alpha_list.size(); ++ai) {
      const double a = cfg_.alpha_list[ai];
      const Certificate cert = build_certificate(b_.family, b_.sys.with_alpha(a));
      const bool guaranteed = !cert.below_threshold;
      log_ << "[certificate] alpha=" << fmt_num(a) << " p_bar=" << fmt_num(cert.p_bar)
           << " M_bar=" << fmt_num(cert.m_bar()) << " threshold_ugas=" << fmt_num(cert.threshold_ugas)
           << " threshold_iss=" << fmt_num(cert.threshold_iss) << " log(decrease_coeff)="
           << fmt_num(cert.log_decrease_coeff) << (guaranteed ? "" : "  [below threshold: no guarantee]") << "\n";
      const BatchResult br = check_decrease_batch(cert, batch, cfg_.write_csv);
      const bool pass = br.passed();
      log_ << "  trajectories: " << batch.count << ", blow-ups: " << br.blow_ups
           << ", decrease " << (pass ? "passed" : "FAILED") << ", worst slack " << fmt_num(br.worst_slack()) << "\n";
      if (guaranteed && !pass) ok_ = false;
      if (strict_grid) {
        SampleGrid g = grid_from(cfg_);
        const ViolationReport sr = check_strict_decrease(cert, g);
        log_ << "  grid " << describe(sr) << "\n";
        if (guaranteed && !sr.passed()) ok_ = false;
      }
      if (cfg_.write_csv) {
        summary << fmt_num(a) << ',' << fmt_num(cert.threshold_ugas) << ',' << fmt_num(cert.log_decrease_coeff)
                << ',' << (guaranteed ? 1 : 0) << ',' << batch.count << ',' << br.blow_ups << ','
                << (pass ? 1 : 0) << ',' << fmt_num(br.worst_slack()) << '\n';
        const std::size_t keep = std::min(cfg_.csv_trajectories, br.trajectories.size());
        for (std::size_t k = 0; k < keep; ++k) {
          if (br.trajectories[k].size() == 0) continue;
          const auto p = std::filesystem::path(cfg_.out_dir) /
                         ("traj_" + alpha_tag(ai) + "_" + std::to_string(k) + ".csv");
          write_trajectory_csv(p, cert, br.trajectories[k],
                               "example=" + b_.name + " alpha=" + fmt_num(a) + " seed=" + std::to_string(cfg_.seed));
          files_.push_back(p);
        }
      }
    }
  }

  void iss() {
    if (!b_.sys.frozen.g) throw ConfigError("iss mode needs a control-affine system (g); example '" + b_.name + "' has none");
    const std::size_t n = b_.sys.frozen.dim_state;
    const std::size_t m = b_.sys.frozen.dim_control;
    if (cfg_.disturbance.size() != m)
      throw ConfigError("iss.disturbance needs " + std::to_string(m) + " expression(s)");
    std::vector<Expression> dist;
    for (const auto& e : cfg_.disturbance) dist.push_back(parse_expression(e, {n, 0, true, false}));
    const Vec none;
    const InputSignal u = [dist, none](double t, const Vec& x) {
      Vec out(static_cast<Eigen::Index>(dist.size()));
      for (std::size_t i = 0; i < dist.size(); ++i) out[static_cast<Eigen::Index>(i)] = dist[i](x, t, none);
      return out;
    };
    Vec x0 = Vec::Zero(static_cast<Eigen::Index>(n));
    if (cfg_.iss_x0.empty()) {
      x0[0] = 1.0;
    } else {
      if (cfg_.iss_x0.size() != n) throw ConfigError("iss.x0 must have " + std::to_string(n) + " entries");
      for (std::size_t i = 0; i < n; ++i) x0[static_cast<Eigen::Index>(i)] = cfg_.iss_x0[i];
    }

    for (std::size_t ai = 0; ai < cfg_.alpha_list.size(); ++ai) {
      const double a = cfg_.alpha_list[ai];
      const SlowSystem sys = b_.sys.with_alpha(a);
      const Certificate cert = build_certificate(b_.family, sys);
      const bool guaranteed = a > cert.threshold_iss;
      log_ << "[iss] alpha=" << fmt_num(a) << " c_a=" << fmt_num(b_.family.c_a)
           << " threshold_iss=" << fmt_num(cert.threshold_iss) << (guaranteed ? "" : "  [below threshold: no guarantee]")
           << "\n";
      SampleGrid g = grid_from(cfg_);
      const IssGrowthReport gr = check_iss_growth(b_.family, sys, g);
      log_ << "  " << describe(gr.a5) << "\n  " << describe(gr.a6) << "\n";
      if (!gr.passed()) ok_ = false;
      g.samples = cfg_.iss_samples;
      const ViolationReport dr = check_iss_decrease(cert, g);
      log_ << "  gated " << describe(dr) << "\n";
      if (guaranteed && !dr.passed()) ok_ = false;

      IntegratorOptions io;
      io.stride = cfg_.batch_stride;
      const IssSimulation sim = simulate_iss(cert, u, x0, cfg_.iss_horizon, io);
      log_ << "  simulation: horizon " << fmt_num(cfg_.iss_horizon) << ", "
           << (sim.blow_up ? "BlowUp" : "bounded") << ", max |x| " << fmt_num(sim.max_norm) << ", tail max |x| "
           << fmt_num(sim.tail_bound) << ", sup |u| " << fmt_num(sim.sup_input) << ", level bound "
           << fmt_num(sim.level_bound) << "\n";
      if (sim.blow_up) ok_ = false;
      if (cfg_.write_csv && !sim.blow_up) {
        const auto p = std::filesystem::path(cfg_.out_dir) / ("iss_" + alpha_tag(ai) + ".csv");
        write_trajectory_csv(p, cert, sim.trajectory,
                             "example=" + b_.name + " alpha=" + fmt_num(a) + " seed=" + std::to_string(cfg_.seed));
        files_.push_back(p);
      }
    }
  }

  void alpha_star() {
    AlphaSearch s;
    s.alpha_lo = cfg_.alpha_lo;
    s.iterations = cfg_.alpha_iterations;
    s.batch = batch_from(cfg_);
    const double analytic = build_certificate(b_.family, b_.sys.with_alpha(1.0)).threshold_ugas;
    s.alpha_hi = cfg_.alpha_hi ? *cfg_.alpha_hi : std::max(100.0, 4.0 * analytic);
    log_ << "[alpha-star] search [" << fmt_num(s.alpha_lo) << ", " << fmt_num(s.alpha_hi) << "], "
         << s.iterations << " geometric bisection steps, " << s.batch.count << " trajectories each\n";
    const AlphaStarResult r = estimate_alpha_star(b_.family, b_.sys, s);
    log_ << "  analytic bound 2 T c_a p_bar / c_b = " << fmt_num(r.analytic) << "\n";
    if (r.passes_at_lo)
      log_ << "  empirical boundary: below alpha_lo (decrease already holds at " << fmt_num(r.empirical) << ")\n";
    else
      log_ << "  empirical boundary in (" << fmt_num(r.bracket_lo) << ", " << fmt_num(r.empirical) << "]\n";
    log_ << "  evaluations: " << r.evaluations << "\n";
    // the bound is sufficient: no failing alpha may lie above it
    if (r.bracket_lo > r.analytic * (1.0 + 1e-12)) {
      log_ << "  decrease failed above the analytic bound\n";
      ok_ = false;
    }
    if (cfg_.write_csv) {
      const auto p = std::filesystem::path(cfg_.out_dir) / "alpha_star.csv";
      std::ofstream f(p);
      f << kCsvHeaderTag << " seed=" << cfg_.seed << '\n'
        << "analytic,empirical,bracket_lo,passes_at_lo,evaluations\n"
        << fmt_num(r.analytic) << ',' << fmt_num(r.empirical) << ',' << fmt_num(r.bracket_lo) << ','
        << (r.passes_at_lo ? 1 : 0) << ',' << r.evaluations << '\n';
      files_.push_back(p);
    }
  }

  const RunConfig& cfg_;
  ExampleBundle b_;
  std::ostringstream log_;
  std::vector<std::filesystem::path> files_;
  bool ok_ = true;
};

}  // namespace detail

/// Runs the configured pipeline. Errors are mapped to exit codes and the
/// message is appended to the report.
inline RunOutcome run(const RunConfig& cfg) {
  try {
    return detail::Runner(cfg, resolve_bundle(cfg)).run();
  } catch (const NonMonotoneError& e) {
    return {kExitFail, std::string("check failed: ") + e.what() + "\n", {}};
  } catch (const ConfigError& e) {
    return {kExitConfig, std::string("config error: ") + e.what() + "\n", {}};
  } catch (const Error& e) {
    return {kExitNumeric, std::string("numerical error: ") + e.what() + "\n", {}};
  } catch (const std::filesystem::filesystem_error& e) {
    return {kExitConfig, std::string("output error: ") + e.what() + "\n", {}};
  }
}

}  // namespace slowcert
