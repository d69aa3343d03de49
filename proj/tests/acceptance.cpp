// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include "slowcert/slowcert.hpp"

#include "oracles.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace slowcert;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string report_line(const ViolationReport& r) {
  std::ostringstream s;
  s << r.condition << " " << r.violations << "/" << r.samples_tested << " worst " << r.worst_slack;
  return s.str();
}

bool batch_passes(const ExampleBundle& b, double alpha, Outcome& o, const std::string& tag,
                  std::size_t count = 20) {
  const Certificate c = build_certificate(b.family, b.sys.with_alpha(alpha));
  TrajectoryBatch batch;
  batch.count = count;
  batch.radius = 5.0;
  const BatchResult r = check_decrease_batch(c, batch);
  o.require(r.passed(), tag + " decrease at alpha=" + std::to_string(alpha) + " (blow-ups " +
                            std::to_string(r.blow_ups) + ", worst slack " + std::to_string(r.worst_slack()) + ")");
  return r.passed();
}

void criterion1(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uT(0.3, 7.0), ut(-20.0, 60.0);
  double worst_fubini = 0.0, worst_fd = 0.0;
  bool envelope = true;
  for (int i = 0; i < 100; ++i) {
    const oracle::TrigPoly p = oracle::random_trig_poly(rng);
    const double T = uT(rng);
    ParameterPath path;
    path.p = [p](double s) { return examples::vec1(p(s)); };
    const AveragedSignal sig =
        make_averaged_signal([](const Vec& tau) { return tau[0]; }, path, T, p.sup_bound());
    const double t = ut(rng);
    const double single = double_avg_integral(sig, t);
    worst_fubini = std::max(worst_fubini, std::abs(single - oracle::nested_double_window(p, t, T)));
    const double h = 1e-4;
    const double fd = (double_avg_integral(sig, t + h) - double_avg_integral(sig, t - h)) / (2 * h);
    const double formula = double_avg_time_derivative(sig, t);
    worst_fd = std::max(worst_fd, std::abs(fd - formula) / std::max(1.0, std::abs(formula)));
    envelope = envelope && std::abs(single) <= envelope_bound(sig);
  }
  o.detail << "nested vs single " << worst_fubini << ", derivative rel " << worst_fd;
  o.require(worst_fubini <= 1e-8, "nested vs single-form integral");
  o.require(worst_fd <= 1e-4, "derivative formula");
  o.require(envelope, "envelope T^2 M/2");
}

void criterion2(Outcome& o) {
  const ExampleBundle b = scalar_example();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-5.0, 5.0), ut(0.0, 50.0);
  const double alphas[] = {0.1, 1.0, 10.0};
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = alphas[i % 3];
    const Certificate c = build_certificate(b.family, b.sys.with_alpha(a));
    const Vec x = examples::vec1(ux(rng));
    const double t = ut(rng);
    const double built = eval_certificate(c, x, t);
    const double closed = (*b.closed_form_certificate)(x, t, a);
    if (closed != 0.0) worst = std::max(worst, std::abs(built - closed) / std::abs(closed));
  }
  o.detail << "closed form rel " << worst;
  o.require(worst <= 1e-8, "closed form");
  for (double a : alphas) batch_passes(b, a, o, "scalar");

  FalsifyOptions fo;
  fo.grid.samples = 1;
  fo.grid.a4_samples = 2000;
  const ViolationReport a4 = falsify_assumption1(b.family, b.sys.with_alpha(1.0), fo)[3];
  // window integral of 45 cos^2 - C over one period is exactly c_b
  const double margin = a4.worst_slack + b.family.c_b;
  o.detail << ", A4 window " << margin << " vs " << oracle::scalar_c_b();
  o.require(a4.passed(), "A4");
  o.require(std::abs(margin - oracle::scalar_c_b()) <= 1e-8 * oracle::scalar_c_b(), "A4 margin");
}

void criterion3(Outcome& o) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ux(-10.0, 10.0), utau(-5.0, 0.0), um(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100000; ++i) {
    Vec x(2);
    x << ux(rng), ux(rng);
    if (x.norm() > 10.0) x *= 10.0 / x.norm();
    const double tau = utau(rng);
    const double lhs = pendulum_grad(x).dot(pendulum_field(x, tau, um(rng)));
    const double rhs = -(1.0 + 5.0 * tau) * pendulum_v(x);
    worst = std::min(worst, rhs - lhs);
  }
  o.detail << "decay inequality worst slack " << worst;
  o.require(worst >= -1e-9, "decay inequality");
  const ExampleBundle b = pendulum_example();
  for (double a : {0.01, 1.0, 100.0}) batch_passes(b, a, o, "pendulum");
}

void criterion4(Outcome& o) {
  const MuFunction mu = identity_mu();
  const KFunction k(mu);
  double worst_k = 0.0, worst_chain = 0.0;
  for (int i = 0; i <= 800; ++i) {
    const double r = std::pow(10.0, -6.0 + 8.0 * i / 800.0);
    worst_k = std::max(worst_k, std::abs(k(r) - r * r) / (r * r));
    const double lhs = k.prime(r) * mu(r), rhs = 2.0 * k.B() * k(r);
    worst_chain = std::max(worst_chain, std::abs(lhs - rhs) / rhs);
  }
  const double kp = k.prime(1e-8);
  o.detail << "k rel " << worst_k << ", chain rel " << worst_chain << ", k'(1e-8) " << kp;
  o.require(worst_k <= 1e-6, "k(r) = r^2");
  o.require(worst_chain <= 1e-8, "chain identity");
  o.require(kp < 1e-6, "k' at the origin");

  // scalar x' = -tau x with V~ = x^2 (1 + 0.1 tau), q = tau, c_a = 0.1
  LyapunovFamily tilde;
  tilde.V = [](const Vec& x, double, const Vec& tau) { return x[0] * x[0] * (1.0 + 0.1 * tau[0]); };
  tilde.alpha1 = [](double s) { return s * s; };
  tilde.alpha2 = [](double s) { return 1.2 * s * s; };
  tilde.q = [](const Vec& tau) { return tau[0]; };
  tilde.c_a = 0.1;
  tilde.c_b = 2.0 * oracle::pi * 0.99;
  tilde.T = 2.0 * oracle::pi;
  tilde.mu = identity_mu();
  SlowSystem sys;
  sys.frozen.f = [](const Vec& x, double, const Vec& tau) { return examples::vec1(-tau[0] * x[0]); };
  sys.path.p = [](double s) { return examples::vec1(1.0 + 0.5 * std::sin(s)); };
  sys.path.p_prime = [](double s) { return examples::vec1(0.5 * std::cos(s)); };
  sys.path.period = 2.0 * oracle::pi;
  const Certificate c = build_certificate(transform_family(tilde), sys.with_alpha(1.0));
  const double expected = 2.0 * tilde.T * tilde.c_a * c.p_bar / tilde.c_b;
  o.detail << ", threshold " << c.threshold_ugas << " vs " << expected;
  o.require(std::abs(c.threshold_ugas - expected) <= 1e-12 * expected, "transformed threshold");
}

void criterion5(Outcome& o) {
  const ExampleBundle b = friction_example();
  FalsifyOptions fo;
  fo.grid.samples = 100000;
  fo.grid.a4_samples = 200;
  const auto reps = falsify_assumption1(b.family, b.sys.with_alpha(1.0), fo);
  o.detail << report_line(reps[0]) << ", " << report_line(reps[1]);
  o.require(reps[0].passed(), "sandwich");
  o.require(reps[1].passed(), "chain endpoint");
  const Certificate c = build_certificate(b.family, b.sys);
  const double alpha = 2.0 * c.threshold_ugas;
  o.detail << ", alpha " << alpha;
  batch_passes(b, alpha, o, "friction");
}

void criterion6(Outcome& o) {
  const IdentificationOptions opt;
  const PersistencyBounds pb = persistency_bounds(opt.m, 2, opt.c_tilde, 0.0, 2.0 * oracle::pi, 257);
  const double kappa = identification_kappa(opt.c_tilde, pb.min_eig, pb.max_eig);
  o.detail << "persistency [" << pb.min_eig << ", " << pb.max_eig << "], kappa " << kappa;
  o.require(std::abs(pb.min_eig - oracle::pi) <= 1e-10 && std::abs(pb.max_eig - oracle::pi) <= 1e-10,
            "persistency bounds");
  o.require(std::abs(kappa - oracle::ident_kappa()) <= 1e-9 * oracle::ident_kappa(), "kappa");

  const ExampleBundle b = identification_example();
  FalsifyOptions fo;
  fo.grid.samples = 100000;
  fo.grid.a4_samples = 200;
  const auto reps = falsify_assumption1(b.family, b.sys.with_alpha(1.0), fo);
  o.detail << ", " << report_line(reps[0]) << ", " << report_line(reps[2]);
  o.require(reps[0].passed(), "sandwich");
  o.require(reps[2].passed(), "|V_tau| <= V");

  // the default h is constant, so its bound is 0; the varying h has a nonzero one
  const ExampleBundle v = identification_example(IdentificationOptions::varying());
  const Certificate c = build_certificate(v.family, v.sys);
  o.detail << ", varying-h alpha " << 2.0 * c.threshold_ugas;
  batch_passes(v, 2.0 * c.threshold_ugas, o, "identification");
  batch_passes(b, 1.0, o, "identification default");
}

void criterion7(Outcome& o) {
  const ExampleBundle b = controlled_friction_example();
  const Certificate probe = build_certificate(b.family, b.sys);
  const double alpha = 2.0 * probe.threshold_iss;
  const Certificate c = build_certificate(b.family, b.sys.with_alpha(alpha));
  SampleGrid g;
  g.samples = 10000;
  const ViolationReport r = check_iss_decrease(c, g);
  o.detail << "alpha " << alpha << ", " << report_line(r);
  o.require(r.passed(), "gated decrease");
  const InputSignal u = [](double, const Vec&) { return examples::vec1(10.0); };
  const IssSimulation sim = simulate_iss(c, u, Vec::Ones(2), 200.0);
  o.detail << ", max |x| " << sim.max_norm;
  o.require(!sim.blow_up && std::isfinite(sim.max_norm), "bounded under u = 10");
}

void criterion8(Outcome& o) {
  struct Case {
    ExampleBundle b;
    std::vector<double> multiples;  // of the threshold, or absolute alphas when it is 0
  };
  std::vector<Case> cases;
  for (const auto& n : example_names()) cases.push_back({example_by_name(n), {}});
  cases.push_back({identification_example(IdentificationOptions::varying()), {}});
  cases.back().b.name = "identification-varying";
  FalsifyOptions fo;
  fo.grid.samples = 20000;
  fo.grid.a4_samples = 500;
  std::size_t checked = 0;
  for (auto& cs : cases) {
    const auto reps = falsify_assumption1(cs.b.family, cs.b.sys.with_alpha(1.0), fo);
    o.require(all_passed(reps), cs.b.name + " assumptions");
    const Certificate probe = build_certificate(cs.b.family, cs.b.sys);
    std::vector<double> alphas;
    if (probe.threshold_ugas == 0.0)
      alphas = {0.1, 1.0, 10.0};
    else
      alphas = {1.2 * probe.threshold_ugas, 3.0 * probe.threshold_ugas};
    for (double a : alphas) {
      batch_passes(cs.b, a, o, cs.b.name);
      ++checked;
    }
  }
  o.detail << checked << " (bundle, alpha) pairs";
}

int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string(SLOWCERT_CLI_PATH) + " " + args + " > " + (dir / "out.txt").string() +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void criterion9(Outcome& o) {
  const fs::path dir = fs::temp_directory_path() / ("slowcert_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "run.toml";
  std::ofstream(cfg) << "mode = \"certify\"\nexample = \"pendulum\"\nalpha_list = [0.5, 4.0]\nseed = 11\n"
                        "[grid]\nsamples = 5000\na4_samples = 200\n"
                        "[batch]\ncount = 6\nhorizon = 10.0\ncsv_trajectories = 3\n";
  const int rc1 = run_cli("certify --config " + cfg.string() + " --out " + (dir / "a").string(), dir);
  const int rc2 = run_cli("certify --config " + cfg.string() + " --out " + (dir / "b").string(), dir);
  o.require(rc1 == 0 && rc2 == 0, "both runs exit 0");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    const fs::path twin = dir / "b" / e.path().filename();
    o.require(fs::exists(twin) && slurp(e.path()) == slurp(twin), e.path().filename().string() + " identical");
  }
  o.detail << files << " CSV files compared";
  o.require(files >= 4, "CSV files written");
  fs::remove_all(dir);
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void(Outcome&)>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
  bool all = true;
  for (const auto& [id, fn] : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s  %s  (%.1fs)\n", id, o.ok ? "PASS" : "FAIL", o.detail.str().c_str(), secs);
    std::fflush(stdout);
    all = all && o.ok;
  }
  return all ? 0 : 1;
}
