// slowcert validate|certify|sweep|iss|alpha-star --config PATH [--seed N] [--out DIR]
// slowcert init [--out FILE]

#include "slowcert/slowcert.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Strict Lyapunov certificates for slowly time-varying systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;

  const std::vector<std::string> modes = {"validate", "certify", "sweep", "iss", "alpha-star"};
  for (const auto& m : modes) {
    auto* sub = app.add_subcommand(m, "run the " + m + " pipeline");
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--seed", seed, "override the configured seed")->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--out", out_dir, "override the output directory");
  }
  std::string init_out;
  auto* init = app.add_subcommand("init", "print a commented configuration template");
  init->add_option("--out", init_out, "write the template to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : slowcert::kExitConfig;
  }

  if (init->parsed()) {
    if (init_out.empty()) {
      std::cout << slowcert::config_template();
    } else {
      std::ofstream f(init_out);
      if (!f) {
        std::cerr << "cannot write " << init_out << "\n";
        return slowcert::kExitConfig;
      }
      f << slowcert::config_template();
    }
    return slowcert::kExitPass;
  }

  slowcert::RunConfig cfg;
  try {
    cfg = slowcert::load_run_config(config_path);
    for (const auto& m : modes)
      if (app.got_subcommand(m)) cfg.mode = slowcert::parse_mode(m);
    if (seed_given) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
  } catch (const slowcert::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return slowcert::kExitConfig;
  }

  const slowcert::RunOutcome r = slowcert::run(cfg);
  (r.exit_code == slowcert::kExitPass || r.exit_code == slowcert::kExitFail ? std::cout : std::cerr) << r.report;
  return r.exit_code;
}
