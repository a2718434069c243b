#pragma once

#include <memory>
#include <string>

#include "lsvi/config.hpp"
#include "lsvi/expfam.hpp"
#include "lsvi/lsvi.hpp"
#include "lsvi/target.hpp"

namespace lsvi {

inline constexpr const char* kVersion = "0.1.0";

// Instantiated experiment: family, target and initial parameter built from a
// validated RunConfig. Throws ConfigError on inconsistencies that the static
// validation cannot see (e.g. CSV dimensions).
struct Experiment {
  std::unique_ptr<Family> family;
  std::unique_ptr<Target> target;
  Eigen::VectorXd eta0;
  StepsizePolicy policy;
  RunOptions options;
};

Experiment build_experiment(const RunConfig& cfg);

// Dispatches the configured algorithm on a built experiment.
RunResult execute_run(const RunConfig& cfg, Experiment& exp);
// Convenience: build + execute.
RunResult execute_run(const RunConfig& cfg);

// Subcommand entry points; return process exit codes (0 ok, 2 config error,
// 3 runtime error).
int command_run(const std::string& config_path);
int command_validate(const std::string& config_path);
int command_targets();

}  // namespace lsvi
