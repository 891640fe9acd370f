#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "kocl/experiments.hpp"

namespace kocl::cli {

inline constexpr int kFormatVersion = 1;

enum class Mode { Regression, Classification };

/// Everything needed to reproduce one run. Unset optionals are filled in by
/// resolve() once the data shape is known; the resolved form is what gets
/// embedded in output files.
struct ExperimentConfig {
  Mode mode = Mode::Classification;
  std::string data;  ///< empty: synthetic source for the mode
  std::string out = "kocl_run";
  std::uint64_t seed = 1;

  // synthetic class-incremental stream
  std::size_t tasks = 10;
  std::size_t classes_per_task = 10;
  std::size_t dim = 32;
  std::size_t points_per_task = 500;
  double center_scale = 2.0;
  double noise_scale = 0.5;

  // feature preprocessing
  bool normalize = false;
  std::optional<bool> bias;

  // filter
  std::optional<double> sigma2;
  std::optional<double> sigmaw2;
  bool learn_gamma = true;
  double gamma_init = 1.0;
  std::optional<double> delta_lr;
  double alpha_init = 1.0;
  std::optional<bool> learn_alpha;
  double alpha_lr = 0.1;
  std::size_t mc_samples = 32;
  std::optional<std::string> mean_transition;  ///< "shrinking" | "nonshrinking"

  // protocol
  std::optional<std::size_t> chunk_size;
  std::string transition = "always";       ///< "always" | "last"
  std::string alpha_schedule = "chunk";    ///< "chunk" | "point"
  std::size_t replay_capacity = 100;
  std::size_t replay_sample = 0;           ///< 0 disables replay
  bool point_trace = false;

  bool synthetic() const { return data.empty(); }
  /// Fills defaults that depend on the mode and on the data shape (m, K).
  void resolve(Eigen::Index m, Eigen::Index k);
  /// Throws ConfigError naming the offending field.
  void validate() const;

  ClassifierOptions classifier_options() const;
  RegressionOptions regression_options() const;
  RunConfig run_config() const;
  FeatureTransform transform() const;
  SyntheticClassSpec class_spec() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Unknown keys and wrongly typed values are configuration errors.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Reads a config either from a plain JSON object or from the header line
/// of a previous run's output.
ExperimentConfig load_config(const std::string& path);

const char* to_string(Mode m);

}  // namespace kocl::cli
