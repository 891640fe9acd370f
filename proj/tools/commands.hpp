#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "experiment_config.hpp"
#include "kocl/check/suites.hpp"

namespace kocl::cli {

/// Regression mode. On the built-in series with learn_gamma set, writes
/// <out>.learned.jsonl and <out>.fixed.jsonl (gamma = 1 on the same series);
/// otherwise a single <out>.jsonl. Returns the summary records.
nlohmann::json run_regression(ExperimentConfig config);

/// Classification mode; writes <out>.jsonl and returns its summary record.
nlohmann::json run_classification(ExperimentConfig config);

nlohmann::json run_experiment(const ExperimentConfig& config);

struct SelfcheckOptions {
  std::uint64_t seed = 20240611;
  check::Fault fault = check::Fault::None;
};

/// Prints one line per check and a final JSON summary line. Returns true
/// when every check passed.
bool run_selfcheck(const SelfcheckOptions& options, std::ostream& out);

}  // namespace kocl::cli
