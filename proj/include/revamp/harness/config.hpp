#ifndef REVAMP_HARNESS_CONFIG_HPP
#define REVAMP_HARNESS_CONFIG_HPP

// Experiment configuration: a flat `key = value` text file, one entry per
// line, `#` starts a comment, vectors are comma separated.
//
//   scenario          sparse | bpsk | custom
//   M, N              measurement and signal dimensions
//   snr_grid_db       e.g. 0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50
//   instances_per_snr problem instances per SNR level
//   strategies        comma list of strategy names, plus the `lmmse` baseline
//   master_seed       unsigned 64-bit seed
//   max_sweeps, tol   engine stopping rule
//   output_path       directory for runs.csv / summary.csv / nmse.svg
//   emit_svg          true | false
//   prior_weights, prior_means, prior_vars
//                     i.i.d. mixture prior, custom scenario only

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "revamp/errors.hpp"
#include "revamp/priors.hpp"
#include "revamp/strategies.hpp"

namespace revamp::harness {

class ConfigError : public Error {
public:
  using Error::Error;
};

enum class Scenario { sparse, bpsk, custom };

inline const char *to_string(Scenario s) {
  switch (s) {
  case Scenario::sparse:
    return "sparse";
  case Scenario::bpsk:
    return "bpsk";
  case Scenario::custom:
    return "custom";
  }
  return "?";
}

inline const std::string kLmmseBaseline = "lmmse";

struct ExperimentConfig {
  Scenario scenario = Scenario::sparse;
  int m = 8;
  int n = 10;
  std::vector<double> snr_grid_db{0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  int instances_per_snr = 500;
  std::vector<std::string> strategies{"lmmse",
                                      "ideal",
                                      "clip",
                                      "persistent-strict",
                                      "persistent-relaxed",
                                      "nonpersistent-strict",
                                      "nonpersistent-relaxed",
                                      "acrevamp"};
  std::uint64_t master_seed = 1;
  int max_sweeps = 200;
  double tol = 1e-8;
  std::string output_path = "out";
  bool emit_svg = true;
  std::vector<double> prior_weights;
  std::vector<double> prior_means;
  std::vector<double> prior_vars;

  /// Per-symbol priors implied by the scenario.
  [[nodiscard]] std::vector<MixturePrior> priors() const {
    std::vector<MixturePrior> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
      switch (scenario) {
      case Scenario::sparse:
        out.push_back(sparse_prior(i));
        break;
      case Scenario::bpsk:
        out.push_back(bpsk_prior());
        break;
      case Scenario::custom:
        out.emplace_back(prior_weights, prior_means, prior_vars);
        break;
      }
    }
    return out;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
    ++b;
  }
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
    --e;
  }
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_list(const std::string &v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(trim(item));
  }
  return out;
}

inline double parse_double(const std::string &key, const std::string &v) {
  double out = 0.0;
  const auto *end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end || !std::isfinite(out)) {
    throw ConfigError("config field '" + key + "': expected a finite number, got '" + v + "'");
  }
  return out;
}

template <typename Int>
Int parse_int(const std::string &key, const std::string &v) {
  Int out{};
  const auto *end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config field '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

inline std::vector<double> parse_doubles(const std::string &key, const std::string &v) {
  std::vector<double> out;
  for (const std::string &item : split_list(v)) {
    out.push_back(parse_double(key, item));
  }
  return out;
}

} // namespace detail

/// Checks invariants; throws ConfigError naming the offending field.
inline void validate(const ExperimentConfig &c) {
  if (c.m < 1) {
    throw ConfigError("config field 'M': must be >= 1");
  }
  if (c.n < 1) {
    throw ConfigError("config field 'N': must be >= 1");
  }
  if (c.instances_per_snr < 1) {
    throw ConfigError("config field 'instances_per_snr': must be >= 1");
  }
  if (c.snr_grid_db.empty()) {
    throw ConfigError("config field 'snr_grid_db': must list at least one level");
  }
  if (c.max_sweeps < 1) {
    throw ConfigError("config field 'max_sweeps': must be >= 1");
  }
  if (!(c.tol > 0.0)) {
    throw ConfigError("config field 'tol': must be positive");
  }
  if (c.strategies.empty()) {
    throw ConfigError("config field 'strategies': must name at least one strategy");
  }
  std::set<std::string> seen;
  for (const std::string &s : c.strategies) {
    if (s != kLmmseBaseline) {
      try {
        (void)Strategy::parse(s);
      } catch (const InvalidParameterError &) {
        throw ConfigError("config field 'strategies': unknown strategy '" + s + "'");
      }
    }
    if (!seen.insert(s).second) {
      throw ConfigError("config field 'strategies': duplicate strategy '" + s + "'");
    }
  }
  if (c.scenario == Scenario::custom) {
    try {
      (void)MixturePrior(c.prior_weights, c.prior_means, c.prior_vars);
    } catch (const InvalidParameterError &e) {
      throw ConfigError(std::string("config field 'prior_weights/prior_means/prior_vars': ") + e.what());
    }
  }
}

inline std::vector<std::string> parse_strategy_list(const std::string &v) {
  std::vector<std::string> out;
  for (const std::string &s : detail::split_list(v)) {
    if (!s.empty()) {
      out.push_back(s);
    }
  }
  return out;
}

/// Parses a config stream. The scenario key, when present, resets M and N to
/// that scenario's defaults before the remaining keys apply, whatever the order.
inline ExperimentConfig parse_config(std::istream &in) {
  struct Entry {
    std::string key, value;
  };
  std::vector<Entry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string t = detail::trim(line);
    if (t.empty()) {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    entries.push_back({detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1))});
  }

  ExperimentConfig c;
  std::set<std::string> seen;
  for (const Entry &e : entries) {
    if (!seen.insert(e.key).second) {
      throw ConfigError("config field '" + e.key + "': given more than once");
    }
    if (e.key == "scenario") {
      if (e.value == "sparse") {
        c.scenario = Scenario::sparse;
        c.m = 8;
        c.n = 10;
      } else if (e.value == "bpsk") {
        c.scenario = Scenario::bpsk;
        c.m = 20;
        c.n = 10;
      } else if (e.value == "custom") {
        c.scenario = Scenario::custom;
      } else {
        throw ConfigError("config field 'scenario': expected sparse | bpsk | custom, got '" + e.value + "'");
      }
    }
  }
  for (const Entry &e : entries) {
    const std::string &k = e.key;
    const std::string &v = e.value;
    if (k == "scenario") {
      continue;
    } else if (k == "M") {
      c.m = detail::parse_int<int>(k, v);
    } else if (k == "N") {
      c.n = detail::parse_int<int>(k, v);
    } else if (k == "snr_grid_db") {
      c.snr_grid_db = detail::parse_doubles(k, v);
    } else if (k == "instances_per_snr") {
      c.instances_per_snr = detail::parse_int<int>(k, v);
    } else if (k == "strategies") {
      c.strategies = parse_strategy_list(v);
    } else if (k == "master_seed") {
      c.master_seed = detail::parse_int<std::uint64_t>(k, v);
    } else if (k == "max_sweeps") {
      c.max_sweeps = detail::parse_int<int>(k, v);
    } else if (k == "tol") {
      c.tol = detail::parse_double(k, v);
    } else if (k == "output_path") {
      c.output_path = v;
    } else if (k == "emit_svg") {
      if (v != "true" && v != "false") {
        throw ConfigError("config field 'emit_svg': expected true | false, got '" + v + "'");
      }
      c.emit_svg = v == "true";
    } else if (k == "prior_weights") {
      c.prior_weights = detail::parse_doubles(k, v);
    } else if (k == "prior_means") {
      c.prior_means = detail::parse_doubles(k, v);
    } else if (k == "prior_vars") {
      c.prior_vars = detail::parse_doubles(k, v);
    } else {
      throw ConfigError("config field '" + k + "': unknown key");
    }
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  return parse_config(in);
}

} // namespace revamp::harness

#endif // REVAMP_HARNESS_CONFIG_HPP
