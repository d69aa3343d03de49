#pragma once

// Run configuration. The file format is a TOML subset:
//   # comment
//   key = value
//   [section]
// with values: numbers, true/false, "strings", and one-line arrays of
// numbers or strings. Unknown keys are rejected with their line number.

#include "slowcert/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace slowcert {

class ConfigParseError : public ConfigError {
 public:
  ConfigParseError(const std::string& what, std::size_t line, std::size_t col)
      : ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what),
        line_(line), col_(col) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return col_; }

 private:
  std::size_t line_, col_;
};

using ConfigValue = std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;

struct ConfigEntry {
  ConfigValue value;
  std::size_t line = 0;
  std::size_t col = 0;
};

/// Flat "section.key" -> value map in file order.
class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text) {
    ConfigDocument doc;
    std::istringstream in(text);
    std::string raw, section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      Cursor c{raw, 0, line_no};
      c.skip_ws();
      if (c.done() || c.peek() == '#') continue;
      if (c.peek() == '[') {
        c.advance();
        c.skip_ws();
        const std::size_t start = c.pos;
        section = c.bare_key();
        if (section.empty()) throw ConfigParseError("empty section name", line_no, start + 1);
        c.skip_ws();
        if (!c.eat(']')) throw ConfigParseError("expected ']'", line_no, c.pos + 1);
        c.expect_end();
        continue;
      }
      const std::size_t key_col = c.pos + 1;
      const std::string key = c.bare_key();
      if (key.empty()) throw ConfigParseError("expected a key", line_no, key_col);
      c.skip_ws();
      if (!c.eat('=')) throw ConfigParseError("expected '=' after key '" + key + "'", line_no, c.pos + 1);
      c.skip_ws();
      const std::size_t val_col = c.pos + 1;
      ConfigValue v = c.value();
      c.expect_end();
      const std::string full = section.empty() ? key : section + "." + key;
      if (doc.entries_.count(full)) throw ConfigParseError("duplicate key '" + full + "'", line_no, key_col);
      doc.entries_[full] = ConfigEntry{std::move(v), line_no, val_col};
      doc.order_.push_back(full);
    }
    return doc;
  }

  static ConfigDocument load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const ConfigEntry& entry(const std::string& key) const { return entries_.at(key); }
  const std::vector<std::string>& keys() const { return order_; }

  double number(const std::string& key, double fallback) const { return get<double>(key, "a number").value_or(fallback); }
  bool flag(const std::string& key, bool fallback) const { return get<bool>(key, "true or false").value_or(fallback); }
  std::string string(const std::string& key, const std::string& fallback) const {
    return get<std::string>(key, "a string").value_or(fallback);
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    return get<std::vector<double>>(key, "an array of numbers").value_or(std::move(fallback));
  }
  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) const {
    // a lone string is accepted as a one-element array
    if (has(key) && std::holds_alternative<std::string>(entry(key).value))
      return {std::get<std::string>(entry(key).value)};
    return get<std::vector<std::string>>(key, "an array of strings").value_or(std::move(fallback));
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
    const auto v = get<double>(key, "a nonnegative integer");
    if (!v) return fallback;
    if (*v < 0 || *v != static_cast<double>(static_cast<std::uint64_t>(*v))) {
      const auto& e = entry(key);
      throw ConfigParseError("'" + key + "' must be a nonnegative integer", e.line, e.col);
    }
    return static_cast<std::uint64_t>(*v);
  }

 private:
  struct Cursor {
    const std::string& s;
    std::size_t pos;
    std::size_t line;

    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }
    void advance() { ++pos; }
    bool eat(char ch) {
      if (!done() && s[pos] == ch) {
        ++pos;
        return true;
      }
      return false;
    }
    void skip_ws() {
      while (!done() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\r')) ++pos;
    }
    void expect_end() {
      skip_ws();
      if (!done() && s[pos] != '#') throw ConfigParseError(std::string("unexpected '") + s[pos] + "'", line, pos + 1);
    }
    std::string bare_key() {
      const std::size_t start = pos;
      while (!done() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_' || s[pos] == '-' ||
                         s[pos] == '.'))
        ++pos;
      return s.substr(start, pos - start);
    }
    std::string quoted() {
      const std::size_t start = pos;
      if (!eat('"')) throw ConfigParseError("expected '\"'", line, pos + 1);
      std::string out;
      while (!done() && s[pos] != '"') {
        if (s[pos] == '\\' && pos + 1 < s.size()) {
          ++pos;
          const char e = s[pos];
          out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
        } else {
          out += s[pos];
        }
        ++pos;
      }
      if (!eat('"')) throw ConfigParseError("unterminated string", line, start + 1);
      return out;
    }
    double num() {
      const std::size_t start = pos;
      while (!done() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '.' || s[pos] == '+' ||
                         s[pos] == '-' || s[pos] == '_'))
        ++pos;
      std::string tok = s.substr(start, pos - start);
      std::erase(tok, '_');
      if (tok.empty()) throw ConfigParseError("expected a value", line, start + 1);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ConfigParseError("malformed value '" + tok + "'", line, start + 1);
      return v;
    }
    ConfigValue value() {
      if (done()) throw ConfigParseError("missing value", line, pos + 1);
      if (peek() == '"') return quoted();
      if (peek() == '[') return array();
      if (s.compare(pos, 4, "true") == 0) {
        pos += 4;
        return true;
      }
      if (s.compare(pos, 5, "false") == 0) {
        pos += 5;
        return false;
      }
      return num();
    }
    ConfigValue array() {
      const std::size_t start = pos;
      eat('[');
      std::vector<double> nums;
      std::vector<std::string> strs;
      skip_ws();
      if (eat(']')) return nums;
      for (;;) {
        skip_ws();
        if (done()) throw ConfigParseError("unterminated array", line, start + 1);
        if (peek() == '"') {
          if (!nums.empty()) throw ConfigParseError("mixed array element types", line, pos + 1);
          strs.push_back(quoted());
        } else {
          if (!strs.empty()) throw ConfigParseError("mixed array element types", line, pos + 1);
          nums.push_back(num());
        }
        skip_ws();
        if (eat(']')) break;
        if (!eat(',')) throw ConfigParseError("expected ',' or ']' in array", line, pos + 1);
        skip_ws();
        if (eat(']')) break;  // trailing comma
      }
      if (!strs.empty()) return strs;
      return nums;
    }
  };

  template <class T>
  std::optional<T> get(const std::string& key, const char* expected) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    if (const T* v = std::get_if<T>(&it->second.value)) return *v;
    // an empty [] parses as a number array; accept it for string arrays too
    if constexpr (std::is_same_v<T, std::vector<std::string>>)
      if (const auto* e = std::get_if<std::vector<double>>(&it->second.value); e && e->empty()) return T{};
    throw ConfigParseError("'" + key + "' must be " + std::string(expected), it->second.line, it->second.col);
  }

  std::map<std::string, ConfigEntry> entries_;
  std::vector<std::string> order_;
};

enum class RunMode { Validate, Certify, Sweep, Iss, AlphaStar };

inline RunMode parse_mode(const std::string& s) {
  if (s == "validate") return RunMode::Validate;
  if (s == "certify") return RunMode::Certify;
  if (s == "sweep") return RunMode::Sweep;
  if (s == "iss") return RunMode::Iss;
  if (s == "alpha-star") return RunMode::AlphaStar;
  throw ConfigError("unknown mode '" + s + "' (expected validate, certify, sweep, iss, alpha-star)");
}

inline std::string mode_name(RunMode m) {
  switch (m) {
    case RunMode::Validate: return "validate";
    case RunMode::Certify: return "certify";
    case RunMode::Sweep: return "sweep";
    case RunMode::Iss: return "iss";
    case RunMode::AlphaStar: return "alpha-star";
  }
  return "?";
}

/// User-defined system given as expressions (example = "custom").
struct CustomSpec {
  std::size_t state_dim = 1;
  std::size_t param_dim = 1;
  std::vector<std::string> f;           // n expressions in x, t, tau
  std::vector<std::string> g;           // optional n expressions (single input column)
  std::vector<std::string> path;        // d expressions in s
  std::vector<std::string> path_prime;  // optional, d expressions in s
  std::optional<double> path_period;
  std::string V;
  std::string V_t;                      // optional
  std::vector<std::string> V_x;         // optional, n expressions
  std::vector<std::string> V_tau;       // optional, d expressions
  std::string alpha1, alpha2;           // expressions in s
  std::string q;                        // expression in tau
  double c_a = 0.0;
  double c_b = 0.0;
  double T = 1.0;
};

struct RunConfig {
  RunMode mode = RunMode::Validate;
  std::string example = "scalar";
  std::vector<double> alpha_list{1.0};
  std::uint64_t seed = 1;

  // [grid]
  double radius = 10.0;
  std::size_t samples = 100000;
  std::optional<double> t_max;
  std::size_t a4_samples = 2000;
  std::vector<double> tau_lo, tau_hi;

  // [batch]
  std::size_t batch_count = 20;
  double batch_radius = 5.0;
  double batch_horizon = 20.0;
  double batch_stride = 0.05;
  double margin_tol = 1e-6;
  std::size_t csv_trajectories = 3;

  // [alpha_star]
  double alpha_lo = 1e-3;
  std::optional<double> alpha_hi;  // default: max(100, 4 x analytic bound)
  int alpha_iterations = 20;

  // [iss]
  std::vector<std::string> disturbance{"10"};  // expressions in t and x
  double iss_horizon = 200.0;
  std::vector<double> iss_x0;                  // empty: (1, 0, ..., 0)
  std::size_t iss_samples = 10000;

  // [output]
  std::string out_dir = "slowcert-out";
  bool write_csv = true;
  bool write_report = true;

  std::optional<CustomSpec> custom;
};

namespace detail {

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "mode", "example", "alpha_list", "seed",
      "grid.radius", "grid.samples", "grid.t_max", "grid.a4_samples", "grid.tau_lo", "grid.tau_hi",
      "batch.count", "batch.radius", "batch.horizon", "batch.stride", "batch.margin_tol", "batch.csv_trajectories",
      "alpha_star.lo", "alpha_star.hi", "alpha_star.iterations",
      "iss.disturbance", "iss.horizon", "iss.x0", "iss.samples",
      "output.dir", "output.csv", "output.report",
      "custom.state_dim", "custom.param_dim", "custom.f", "custom.g", "custom.path", "custom.path_prime",
      "custom.path_period", "custom.V", "custom.V_t", "custom.V_x", "custom.V_tau", "custom.alpha1",
      "custom.alpha2", "custom.q", "custom.c_a", "custom.c_b", "custom.T"};
  return keys;
}

}  // namespace detail

inline RunConfig run_config_from(const ConfigDocument& doc) {
  const auto& known = detail::known_config_keys();
  for (const auto& k : doc.keys())
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      const auto& e = doc.entry(k);
      throw ConfigParseError("unknown key '" + k + "'", e.line, 1);
    }

  RunConfig c;
  c.mode = parse_mode(doc.string("mode", "validate"));
  c.example = doc.string("example", c.example);
  c.alpha_list = doc.numbers("alpha_list", c.alpha_list);
  c.seed = doc.integer("seed", c.seed);

  c.radius = doc.number("grid.radius", c.radius);
  c.samples = doc.integer("grid.samples", c.samples);
  if (doc.has("grid.t_max")) c.t_max = doc.number("grid.t_max", 0.0);
  c.a4_samples = doc.integer("grid.a4_samples", c.a4_samples);
  c.tau_lo = doc.numbers("grid.tau_lo", {});
  c.tau_hi = doc.numbers("grid.tau_hi", {});

  c.batch_count = doc.integer("batch.count", c.batch_count);
  c.batch_radius = doc.number("batch.radius", c.batch_radius);
  c.batch_horizon = doc.number("batch.horizon", c.batch_horizon);
  c.batch_stride = doc.number("batch.stride", c.batch_stride);
  c.margin_tol = doc.number("batch.margin_tol", c.margin_tol);
  c.csv_trajectories = doc.integer("batch.csv_trajectories", c.csv_trajectories);

  c.alpha_lo = doc.number("alpha_star.lo", c.alpha_lo);
  if (doc.has("alpha_star.hi")) c.alpha_hi = doc.number("alpha_star.hi", 0.0);
  c.alpha_iterations = static_cast<int>(doc.integer("alpha_star.iterations", c.alpha_iterations));

  c.disturbance = doc.strings("iss.disturbance", c.disturbance);
  c.iss_horizon = doc.number("iss.horizon", c.iss_horizon);
  c.iss_x0 = doc.numbers("iss.x0", {});
  c.iss_samples = doc.integer("iss.samples", c.iss_samples);

  c.out_dir = doc.string("output.dir", c.out_dir);
  c.write_csv = doc.flag("output.csv", c.write_csv);
  c.write_report = doc.flag("output.report", c.write_report);

  if (c.example == "custom") {
    CustomSpec s;
    s.state_dim = doc.integer("custom.state_dim", s.state_dim);
    s.param_dim = doc.integer("custom.param_dim", s.param_dim);
    s.f = doc.strings("custom.f", {});
    s.g = doc.strings("custom.g", {});
    s.path = doc.strings("custom.path", {});
    s.path_prime = doc.strings("custom.path_prime", {});
    if (doc.has("custom.path_period")) s.path_period = doc.number("custom.path_period", 0.0);
    s.V = doc.string("custom.V", "");
    s.V_t = doc.string("custom.V_t", "");
    s.V_x = doc.strings("custom.V_x", {});
    s.V_tau = doc.strings("custom.V_tau", {});
    s.alpha1 = doc.string("custom.alpha1", "");
    s.alpha2 = doc.string("custom.alpha2", "");
    s.q = doc.string("custom.q", "");
    s.c_a = doc.number("custom.c_a", s.c_a);
    s.c_b = doc.number("custom.c_b", s.c_b);
    s.T = doc.number("custom.T", s.T);
    c.custom = std::move(s);
  }

  for (double a : c.alpha_list)
    if (!(a > 0.0)) throw ConfigError("alpha_list entries must be positive");
  if (c.alpha_list.empty() && (c.mode == RunMode::Certify || c.mode == RunMode::Sweep))
    throw ConfigError("alpha_list must be nonempty for certify and sweep");
  if (!(c.radius > 0.0) || c.samples == 0) throw ConfigError("grid: radius and samples must be positive");
  if (c.tau_lo.size() != c.tau_hi.size()) throw ConfigError("grid: tau_lo and tau_hi must have equal length");
  if (!(c.batch_stride > 0.0) || !(c.batch_horizon > 0.0)) throw ConfigError("batch: stride and horizon must be positive");
  return c;
}

inline RunConfig load_run_config(const std::string& path) { return run_config_from(ConfigDocument::load(path)); }

/// Commented template with every key at its default.
inline std::string config_template() {
  return R"cfg(# slowcert run configuration

# validate | certify | sweep | iss | alpha-star
mode = "certify"
# scalar | pendulum | friction | identification | custom
example = "pendulum"
# slow-time scale factors; certify and sweep need at least one
alpha_list = [0.01, 1.0, 100.0]
# seeds every sampler and initial-condition batch; recorded in all outputs
seed = 1

[grid]
# falsification box |x|_inf <= radius
radius = 10.0
samples = 100000
# sampled time range [0, t_max]; omit for 20 * max(T, 1) * alpha
# t_max = 100.0
# slow times at which the window-integral condition is checked
a4_samples = 2000
# optional box for tau; when empty, tau is sampled along the path
tau_lo = []
tau_hi = []

[batch]
# seeded trajectories per alpha for the decrease check
count = 20
radius = 5.0
horizon = 20.0
stride = 0.05
# slack allowed in the discrete decrease test, scaled by (1 + V_hat)
margin_tol = 1e-6
# how many trajectories per alpha are written as CSV
csv_trajectories = 3

[alpha_star]
lo = 0.001
# upper end of the search; omit for max(100, 4 x the analytic bound)
# hi = 100.0
iterations = 20

[iss]
# input signal, one expression per input channel, in t and x1..xn
disturbance = ["10"]
horizon = 200.0
# initial state; empty for (1, 0, ..., 0)
x0 = []
# samples for the gated derivative check
samples = 10000

[output]
dir = "slowcert-out"
csv = true
report = true

# Used when example = "custom". Expressions may use x1..xn, t, tau1..taud,
# pi, e and sin cos tan exp log sqrt tanh abs. Path entries and alpha1/alpha2
# are expressions in s.
[custom]
state_dim = 1
param_dim = 1
f = ["x1/sqrt(1+x1^2)*(1-90*tau1)"]
path = ["cos(s)^2"]
path_prime = ["-sin(2*s)"]
path_period = 3.141592653589793
V = "exp(sqrt(1+x1^2)) - e"
V_t = "0"
V_x = ["exp(sqrt(1+x1^2))*x1/sqrt(1+x1^2)"]
V_tau = ["0"]
alpha1 = "exp(sqrt(1+s^2)) - e"
alpha2 = "exp(sqrt(1+s^2)) - e"
q = "45*tau1 - 2*exp(sqrt(2))/(e-1)"
c_a = 0.0
c_b = 55.645
T = 3.141592653589793
)cfg";
}

}  // namespace slowcert
