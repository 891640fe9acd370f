#pragma once

// Drivers for the two reference experiments: a piecewise-constant time
// series tracked by a scalar regression filter, and a class-incremental
// synthetic stream run through the prequential classifier.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kocl/regression_filter.hpp"
#include "kocl/stream_runner.hpp"
#include "kocl/synthetic.hpp"

namespace kocl {

struct TimeseriesConfig {
  PiecewiseSeriesSpec series = PiecewiseSeriesSpec::reference();
  std::uint64_t seed = 0;
  double sigma2 = 0.05;
  double sigmaw2 = 0.01;
  double delta_init = 0.0;
  double delta_lr = 1.0;
  MeanTransition mean_transition = MeanTransition::NonShrinking;

  void validate() const;
  /// Filter options for the learned-gamma variant (or gamma = 1 when
  /// `learn` is false).
  RegressionOptions options(bool learn) const;
};

struct SeriesPoint {
  std::size_t n = 0;
  double y = 0.0;
  double pred_mean = 0.0;
  double pred_std = 0.0;
  double gamma2 = 1.0;              ///< gamma^2 used in this step's transition
  double avg_log_predictive = 0.0;  ///< mean log predictive over steps 0..n
};

struct SeriesTrace {
  std::vector<SeriesPoint> points;
  double final_avg_log_predictive() const {
    return points.empty() ? 0.0 : points.back().avg_log_predictive;
  }
};

/// Runs a regression filter with phi = 1 over `ys`, scoring every value
/// before it is learned.
SeriesTrace run_regression_series(const std::vector<double>& ys, const RegressionOptions& options);

struct TimeseriesResult {
  std::vector<double> series;
  SeriesTrace learned;
  SeriesTrace fixed;  ///< gamma = 1 on the same realized series
};

TimeseriesResult run_timeseries_experiment(const TimeseriesConfig& config);

/// Number of change points c for which min gamma^2 over steps [c, c + window]
/// falls below `threshold`.
std::size_t count_gamma_drops(const SeriesTrace& trace, const std::vector<std::size_t>& change_points,
                              std::size_t window, double threshold);

/// Runs the prequential classifier over a whole dataset.
PrequentialRunner run_classification(const Dataset& data, const ClassifierOptions& options,
                                     const RunConfig& config);

/// Desk-scale class-incremental benchmark: 10 tasks of 10 new classes,
/// m = 32, 500 points per task, chunks of 10, bias feature appended.
struct SyntheticBenchmark {
  SyntheticClassSpec spec;
  FeatureTransform transform;
  ClassifierOptions options;
  RunConfig run;

  static SyntheticBenchmark reference(std::uint64_t seed = 1);
  /// Generated stream with the transform applied.
  Dataset data() const;
};

/// Mean of the per-point trace over consecutive blocks of `chunk` points.
std::vector<double> chunk_means(const std::vector<double>& trace, std::size_t chunk);

/// How a dip of the gamma trace at a task boundary is recognised. The trace
/// is first averaged per chunk. Boundary b counts when the chunk-mean trace
/// has a local minimum, i.e. a value below 1 that is the smallest within
/// `neighborhood` points on either side, located within `window` points of b.
struct DipCriterion {
  std::size_t chunk = 10;
  std::size_t window = 50;
  std::size_t neighborhood = 200;
};

std::size_t count_boundary_dips(const std::vector<double>& gamma_trace,
                                const std::vector<std::size_t>& boundaries,
                                const DipCriterion& criterion = {});

}  // namespace kocl
