#include "kocl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "kocl/errors.hpp"

namespace kocl {

void PiecewiseSeriesSpec::validate() const {
  if (segment_means.empty()) throw ConfigError("series needs at least one segment");
  if (change_points.size() + 1 != segment_means.size()) {
    throw ConfigError("series needs exactly one change point fewer than segments");
  }
  for (std::size_t i = 0; i < change_points.size(); ++i) {
    if (change_points[i] == 0 || change_points[i] >= length) {
      throw ConfigError("change point " + std::to_string(change_points[i]) +
                        " outside (0, length)");
    }
    if (i > 0 && change_points[i] <= change_points[i - 1]) {
      throw ConfigError("change points must be strictly increasing");
    }
  }
  if (!(std::isfinite(noise_var) && noise_var >= 0.0)) {
    throw ConfigError("noise_var must be finite and >= 0");
  }
  for (double m : segment_means) {
    if (!std::isfinite(m)) throw ConfigError("segment means must be finite");
  }
}

PiecewiseSeriesSpec PiecewiseSeriesSpec::reference() {
  PiecewiseSeriesSpec s;
  s.segment_means = {1.3, 1.0, 1.3, 0.95, 0.6, 0.25, 0.8, 0.5};
  s.change_points = {451, 709, 958, 1547, 2147, 2769, 2957};
  s.noise_var = 0.01;
  s.length = 3058;
  return s;
}

double segment_mean_at(const PiecewiseSeriesSpec& spec, std::size_t n) {
  const auto it = std::upper_bound(spec.change_points.begin(), spec.change_points.end(), n);
  return spec.segment_means[static_cast<std::size_t>(it - spec.change_points.begin())];
}

std::vector<double> gen_piecewise_series(const PiecewiseSeriesSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(spec.noise_var);
  std::vector<double> y(spec.length);
  for (std::size_t n = 0; n < spec.length; ++n) {
    const double e = normal(rng);
    y[n] = segment_mean_at(spec, n) + sd * e;
  }
  return y;
}

void SyntheticClassSpec::validate() const {
  if (num_classes < 1 || dim < 1) throw ConfigError("num_classes and dim must be at least 1");
  if (tasks.empty()) throw ConfigError("synthetic stream needs at least one task");
  for (const auto& t : tasks) {
    if (t.classes.empty() || t.duration == 0) {
      throw ConfigError("every task needs classes and a positive duration");
    }
    for (std::size_t c : t.classes) {
      if (c >= num_classes) throw ConfigError("task class id outside [0, num_classes)");
    }
  }
  if (!(std::isfinite(center_scale) && center_scale >= 0.0) ||
      !(std::isfinite(noise_scale) && noise_scale >= 0.0)) {
    throw ConfigError("center_scale and noise_scale must be finite and >= 0");
  }
}

SyntheticClassSpec SyntheticClassSpec::split(std::size_t num_tasks, std::size_t classes_per_task,
                                             std::size_t dim, std::size_t points_per_task,
                                             std::uint64_t seed) {
  SyntheticClassSpec s;
  s.num_classes = num_tasks * classes_per_task;
  s.dim = dim;
  s.seed = seed;
  for (std::size_t t = 0; t < num_tasks; ++t) {
    Task task;
    task.duration = points_per_task;
    for (std::size_t c = 0; c < classes_per_task; ++c) task.classes.push_back(t * classes_per_task + c);
    s.tasks.push_back(std::move(task));
  }
  return s;
}

std::vector<std::size_t> SyntheticClassSpec::task_boundaries() const {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  for (std::size_t t = 0; t + 1 < tasks.size(); ++t) {
    pos += tasks[t].duration;
    out.push_back(pos);
  }
  return out;
}

Dataset gen_class_stream(const SyntheticClassSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(spec.dim);

  Matrix centers(static_cast<Eigen::Index>(spec.num_classes), m);
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (Eigen::Index j = 0; j < m; ++j) centers(c, j) = spec.center_scale * normal(rng);
  }

  std::size_t total = 0;
  for (const auto& t : spec.tasks) total += t.duration;

  Dataset data;
  data.num_classes = static_cast<Eigen::Index>(spec.num_classes);
  data.features.resize(static_cast<Eigen::Index>(total), m);
  data.labels.reserve(total);

  Eigen::Index row = 0;
  for (const auto& t : spec.tasks) {
    std::vector<std::size_t> order;
    order.reserve(t.duration);
    const std::size_t per = t.duration / t.classes.size();
    const std::size_t extra = t.duration % t.classes.size();
    for (std::size_t i = 0; i < t.classes.size(); ++i) {
      order.insert(order.end(), per + (i < extra ? 1 : 0), t.classes[i]);
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t c : order) {
      for (Eigen::Index j = 0; j < m; ++j) {
        data.features(row, j) = centers(static_cast<Eigen::Index>(c), j) + spec.noise_scale * normal(rng);
      }
      data.labels.push_back(static_cast<double>(c));
      ++row;
    }
  }
  return data;
}

Matrix FeatureTransform::apply(const Matrix& features) const {
  Matrix out(features.rows(), output_dim(features.cols()));
  const double scale = normalize ? 1.0 / std::sqrt(static_cast<double>(features.cols())) : 1.0;
  out.leftCols(features.cols()) = scale * features;
  if (bias) out.col(out.cols() - 1).setOnes();
  return out;
}

}  // namespace kocl
