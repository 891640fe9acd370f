#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kocl/stream_chunk.hpp"

namespace kocl {

/// Piecewise-constant scalar series with Gaussian noise. Segment k covers
/// 0-based steps [change_points[k-1], change_points[k]).
struct PiecewiseSeriesSpec {
  std::vector<double> segment_means;
  std::vector<std::size_t> change_points;
  double noise_var = 0.01;
  std::size_t length = 0;

  /// Throws ConfigError on an inconsistent spec. noise_var = 0 is allowed.
  void validate() const;

  /// Eight segments, seven change points, 3058 steps, noise variance 0.01.
  static PiecewiseSeriesSpec reference();
};

/// y_n = segment mean + N(0, noise_var). The feature for every step is phi = 1.
std::vector<double> gen_piecewise_series(const PiecewiseSeriesSpec& spec, std::uint64_t seed);

/// Mean of the segment containing 0-based step n.
double segment_mean_at(const PiecewiseSeriesSpec& spec, std::size_t n);

/// Class-incremental stream: each task draws points only from its own
/// classes, tasks are concatenated in order.
struct SyntheticClassSpec {
  struct Task {
    std::vector<std::size_t> classes;
    std::size_t duration = 0;
  };

  std::size_t num_classes = 10;
  std::size_t dim = 32;
  std::vector<Task> tasks;
  double center_scale = 1.0;  ///< class centres ~ N(0, center_scale^2 I)
  double noise_scale = 1.0;   ///< isotropic feature noise std
  std::uint64_t seed = 0;

  void validate() const;

  /// `num_tasks` tasks of `classes_per_task` consecutive class ids, each
  /// lasting `points_per_task` points.
  static SyntheticClassSpec split(std::size_t num_tasks, std::size_t classes_per_task,
                                  std::size_t dim, std::size_t points_per_task,
                                  std::uint64_t seed);

  /// First stream index of each task after the first.
  std::vector<std::size_t> task_boundaries() const;
};

/// Class centres are fixed per seed. Within a task every class receives
/// duration / |classes| points (remainder spread over the first classes) in
/// shuffled order.
Dataset gen_class_stream(const SyntheticClassSpec& spec);

/// Feature preprocessing options: scale by 1/sqrt(m), then append a
/// constant 1 bias feature.
struct FeatureTransform {
  bool normalize = false;
  bool bias = false;

  Eigen::Index output_dim(Eigen::Index m) const { return m + (bias ? 1 : 0); }
  Matrix apply(const Matrix& features) const;
};

}  // namespace kocl
