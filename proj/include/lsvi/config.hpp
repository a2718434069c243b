#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lsvi {

// Flat `key = value` pairs plus one level of named blocks:
//
//   algorithm = generic
//   stepsize {
//     mode = linear
//     l = 1
//   }
//
// `#` starts a comment. Values keep their raw text; typed access below.
struct ConfigNode {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::optional<double> get_number(const std::string& key) const;
  std::optional<std::int64_t> get_int(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<Eigen::VectorXd> get_vector(const std::string& key) const;
};

struct ConfigDoc {
  ConfigNode top;
  std::map<std::string, ConfigNode> blocks;

  const ConfigNode* block(const std::string& name) const;
};

ConfigDoc parse_config_text(const std::string& text);
ConfigDoc parse_config_file(const std::string& path);

// Validated run description. `errors` collects every problem at once; a run
// may start only when it is empty.
struct RunConfig {
  std::string algorithm;  // generic | mf | fc
  std::string family;     // full_cov | mean_field | truncated_mf | bernoulli
  std::int64_t n = 0;
  std::int64_t t = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string kl_mode = "fresh";  // fresh | reuse | off
  int kl_every = 1;

  ConfigNode target;
  ConfigNode stepsize;
  ConfigNode init;
  ConfigNode family_block;
};

struct ValidationReport {
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
  std::string to_string() const;
};

const std::vector<std::string>& known_targets();
std::string describe_targets();

ValidationReport validate_config(const ConfigDoc& doc, RunConfig* out = nullptr);

}  // namespace lsvi
