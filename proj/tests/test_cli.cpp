#include "slowcert/config.hpp"

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("slowcert_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SLOWCERT_CLI_PATH) + " " + args + " > " + (scratch() / "stdout.txt").string() +
                          " 2> " + (scratch() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << body;
  return p;
}

const char* kSmall =
    "[grid]\nsamples = 2000\na4_samples = 100\n[batch]\ncount = 4\nhorizon = 5.0\ncsv_trajectories = 2\n";

}  // namespace

TEST_CASE("init writes a template that loads") {
  const fs::path out = scratch() / "template.toml";
  REQUIRE(run_cli("init --out " + out.string()) == 0);
  CHECK_NOTHROW(slowcert::load_run_config(out.string()));
}

TEST_CASE("validate on the scalar example passes") {
  const fs::path cfg = write_config("v.toml", std::string("example = \"scalar\"\n") + kSmall);
  CHECK(run_cli("validate --config " + cfg.string() + " --out " + (scratch() / "v").string()) == 0);
  const std::string report = slurp(scratch() / "v" / "report.txt");
  CHECK(report.find("A1: 0 violations / 2000 samples") != std::string::npos);
  CHECK(report.find("A4: 0 violations / 100 samples") != std::string::npos);
  CHECK(report.find("seed: 1") != std::string::npos);
}

TEST_CASE("certify writes versioned CSVs") {
  const fs::path cfg =
      write_config("c.toml", std::string("example = \"pendulum\"\nalpha_list = [0.5, 2.0]\n") + kSmall);
  REQUIRE(run_cli("certify --config " + cfg.string() + " --out " + (scratch() / "c").string()) == 0);
  const std::string csv = slurp(scratch() / "c" / "traj_a00_0.csv");
  CHECK(csv.rfind("# slowcert-csv v1", 0) == 0);
  CHECK(csv.find("\nt,x1,x2,V_hat,V_sharp,dV_sharp_dt,decrease_bound\n") != std::string::npos);
  CHECK(fs::exists(scratch() / "c" / "traj_a01_1.csv"));
  CHECK(fs::exists(scratch() / "c" / "alpha_summary.csv"));
}

TEST_CASE("same config and seed give byte-identical CSVs") {
  const fs::path cfg = write_config("d.toml", std::string("example = \"friction\"\nalpha_list = [3.0]\n") + kSmall);
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --seed 5 --out " + (scratch() / "d1").string()) <= 1);
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --seed 5 --out " + (scratch() / "d2").string()) <= 1);
  for (const char* f : {"traj_a00_0.csv", "traj_a00_1.csv", "alpha_summary.csv"}) {
    const std::string a = slurp(scratch() / "d1" / f);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(scratch() / "d2" / f));
  }
  CHECK(slurp(scratch() / "d1" / "alpha_summary.csv").find("seed=5") != std::string::npos);
}

TEST_CASE("parse errors exit with 2 and a location") {
  const fs::path cfg = write_config("bad.toml", "mode = \"validate\"\nexample = [\n");
  CHECK(run_cli("validate --config " + cfg.string()) == 2);
  CHECK(slurp(scratch() / "stderr.txt").find("line 2") != std::string::npos);
  CHECK(run_cli("validate --config " + (scratch() / "missing.toml").string()) == 2);
  CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("failing checks exit with 1") {
  const fs::path cfg = write_config("f.toml", std::string(R"toml(example = "custom"
[custom]
state_dim = 1
param_dim = 1
f = ["-x1"]
path = ["1 + 0*s"]
V = "x1^2"
alpha1 = "s^2"
alpha2 = "s^2"
q = "3*tau1"
c_a = 0.0
c_b = 1.0
T = 1.0
)toml") + kSmall);
  CHECK(run_cli("validate --config " + cfg.string() + " --out " + (scratch() / "f").string()) == 1);
  CHECK(slurp(scratch() / "stdout.txt").find("A2: ") != std::string::npos);
}

TEST_CASE("numerical failures exit with 3") {
  const fs::path cfg = write_config("n.toml", std::string(R"toml(example = "custom"
[custom]
f = ["sqrt(-1 - x1^2)"]
path = ["1 + 0*s"]
V = "x1^2"
alpha1 = "s^2"
alpha2 = "s^2"
q = "tau1"
c_b = 1.0
)toml") + kSmall);
  CHECK(run_cli("validate --config " + cfg.string() + " --out " + (scratch() / "n").string()) == 3);
}

TEST_CASE("bad expressions in a custom system are config errors") {
  const fs::path cfg = write_config("e.toml", R"toml(example = "custom"
[custom]
f = ["x1 +* 2"]
path = ["1"]
V = "x1^2"
alpha1 = "s^2"
alpha2 = "s^2"
q = "tau1"
c_b = 1.0
)toml");
  CHECK(run_cli("validate --config " + cfg.string()) == 2);
  CHECK(slurp(scratch() / "stderr.txt").find("column") != std::string::npos);
}
