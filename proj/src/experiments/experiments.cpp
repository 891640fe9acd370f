#include "kocl/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "kocl/errors.hpp"

namespace kocl {

void TimeseriesConfig::validate() const {
  series.validate();
  options(true).validate();
}

RegressionOptions TimeseriesConfig::options(bool learn) const {
  RegressionOptions opt;
  opt.hp.sigma2 = sigma2;
  opt.hp.sigmaw2 = sigmaw2;
  opt.delta_init = learn ? delta_init : 0.0;
  opt.delta_lr = delta_lr;
  opt.learn_delta = learn;
  opt.mean_transition = mean_transition;
  return opt;
}

SeriesTrace run_regression_series(const std::vector<double>& ys, const RegressionOptions& options) {
  RegressionFilter filter(1, options);
  const Vector phi = Vector::Ones(1);
  SeriesTrace trace;
  trace.points.reserve(ys.size());
  double total = 0.0;
  for (std::size_t n = 0; n < ys.size(); ++n) {
    const RegressionStep step = filter.observe(phi, ys[n]);
    total += step.log_predictive;
    SeriesPoint p;
    p.n = n;
    p.y = ys[n];
    p.pred_mean = step.prediction.mean;
    p.pred_std = std::sqrt(step.prediction.variance);
    p.gamma2 = step.gamma * step.gamma;
    p.avg_log_predictive = total / static_cast<double>(n + 1);
    trace.points.push_back(p);
  }
  return trace;
}

TimeseriesResult run_timeseries_experiment(const TimeseriesConfig& config) {
  config.validate();
  TimeseriesResult res;
  res.series = gen_piecewise_series(config.series, config.seed);
  res.learned = run_regression_series(res.series, config.options(true));
  res.fixed = run_regression_series(res.series, config.options(false));
  return res;
}

std::size_t count_gamma_drops(const SeriesTrace& trace, const std::vector<std::size_t>& change_points,
                              std::size_t window, double threshold) {
  std::size_t hits = 0;
  for (std::size_t c : change_points) {
    const std::size_t end = std::min(trace.points.size(), c + window + 1);
    for (std::size_t n = c; n < end; ++n) {
      if (trace.points[n].gamma2 < threshold) {
        ++hits;
        break;
      }
    }
  }
  return hits;
}

PrequentialRunner run_classification(const Dataset& data, const ClassifierOptions& options,
                                     const RunConfig& config) {
  config.validate();
  PrequentialRunner runner(
      ClassifierFilter(data.features.cols(), data.num_classes, options), config);
  runner.run_stream(make_chunks(data, config.chunk_size));
  return runner;
}

SyntheticBenchmark SyntheticBenchmark::reference(std::uint64_t seed) {
  SyntheticBenchmark b;
  b.spec = SyntheticClassSpec::split(10, 10, 32, 500, seed);
  b.spec.center_scale = 2.0;
  b.spec.noise_scale = 0.5;
  b.transform.bias = true;
  const Eigen::Index m = b.transform.output_dim(static_cast<Eigen::Index>(b.spec.dim));
  b.options.hp = Hyperparams::defaults_for(m, static_cast<Eigen::Index>(b.spec.num_classes));
  b.options.delta_lr = 0.03;
  b.options.learn_alpha = true;
  b.options.alpha_lr = 0.1;
  b.options.mc_samples = 32;
  b.options.seed = seed;
  b.run.chunk_size = 10;
  return b;
}

Dataset SyntheticBenchmark::data() const {
  Dataset d = gen_class_stream(spec);
  d.features = transform.apply(d.features);
  return d;
}

std::vector<double> chunk_means(const std::vector<double>& trace, std::size_t chunk) {
  if (chunk == 0) throw ConfigError("chunk must be positive");
  std::vector<double> out;
  out.reserve(trace.size() / chunk + 1);
  for (std::size_t i = 0; i < trace.size(); i += chunk) {
    const std::size_t end = std::min(trace.size(), i + chunk);
    double sum = 0.0;
    for (std::size_t j = i; j < end; ++j) sum += trace[j];
    out.push_back(sum / static_cast<double>(end - i));
  }
  return out;
}

std::size_t count_boundary_dips(const std::vector<double>& gamma_trace,
                                const std::vector<std::size_t>& boundaries,
                                const DipCriterion& criterion) {
  const std::vector<double> g = chunk_means(gamma_trace, criterion.chunk);
  const std::size_t window = criterion.window / criterion.chunk;
  const std::size_t reach = criterion.neighborhood / criterion.chunk;
  std::size_t hits = 0;
  for (std::size_t point : boundaries) {
    const std::size_t b = point / criterion.chunk;
    if (b >= g.size()) continue;
    const std::size_t lo = b > reach ? b - reach : 0;
    const std::size_t hi = std::min(g.size(), b + reach + 1);
    const auto lowest = std::min_element(g.begin() + static_cast<std::ptrdiff_t>(lo),
                                         g.begin() + static_cast<std::ptrdiff_t>(hi));
    const std::size_t at = static_cast<std::size_t>(lowest - g.begin());
    if (*lowest < 1.0 && at + window >= b && at <= b + window) ++hits;
  }
  return hits;
}

}  // namespace kocl
