#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "kocl/errors.hpp"
#include "kocl/feature_file.hpp"
#include "log.hpp"

namespace kocl::cli {

using nlohmann::json;

namespace {

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw ConfigError("out: cannot open '" + path + "' for writing");
  }
  void write(const json& record) {
    out_ << record.dump() << '\n';
    if (!out_) throw Error("write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

json header(const ExperimentConfig& c, const std::string& variant) {
  return json{{"record", "header"},        {"format_version", kFormatVersion},
              {"mode", to_string(c.mode)}, {"variant", variant},
              {"seed", c.seed},            {"config", to_json(c)}};
}

bool is_csv(const std::string& path) {
  return std::filesystem::path(path).extension() == ".csv";
}

void write_series(JsonlWriter& w, const SeriesTrace& trace) {
  for (const SeriesPoint& p : trace.points) {
    w.write({{"record", "step"},
             {"n", p.n},
             {"y", p.y},
             {"pred_mean", p.pred_mean},
             {"pred_std", p.pred_std},
             {"gamma2", p.gamma2},
             {"avg_log_predictive", p.avg_log_predictive}});
  }
}

json series_summary(const std::string& variant, const SeriesTrace& trace,
                    const std::vector<std::size_t>* change_points) {
  json s{{"record", "summary"},
         {"variant", variant},
         {"steps", trace.points.size()},
         {"final_avg_log_predictive", trace.final_avg_log_predictive()}};
  if (change_points) {
    s["change_points"] = change_points->size();
    s["gamma2_drops_below_0.9_within_30"] = count_gamma_drops(trace, *change_points, 30, 0.9);
  }
  return s;
}

/// Regression over an external stream of (phi, y) records.
SeriesTrace run_regression_records(const std::function<bool(Vector&, double&)>& next,
                                   Eigen::Index m, const RegressionOptions& options,
                                   const FeatureTransform& transform) {
  RegressionFilter filter(transform.output_dim(m), options);
  SeriesTrace trace;
  Vector raw;
  double y = 0.0;
  double total = 0.0;
  for (std::size_t n = 0; next(raw, y); ++n) {
    const Matrix row = transform.apply(raw.transpose());
    const RegressionStep step = filter.observe(row.row(0).transpose(), y);
    total += step.log_predictive;
    trace.points.push_back({n, y, step.prediction.mean, std::sqrt(step.prediction.variance),
                            step.gamma * step.gamma, total / static_cast<double>(n + 1)});
  }
  return trace;
}

}  // namespace

json run_regression(ExperimentConfig c) {
  c.mode = Mode::Regression;
  c.validate();
  json summaries = json::array();

  if (c.synthetic()) {
    c.resolve(1, 1);
    TimeseriesConfig ts;
    ts.seed = c.seed;
    ts.sigma2 = *c.sigma2;
    ts.sigmaw2 = *c.sigmaw2;
    ts.delta_lr = *c.delta_lr;
    ts.delta_init = delta_from_gamma(c.gamma_init);
    ts.mean_transition = c.regression_options().mean_transition;
    ts.validate();
    const std::vector<double> ys = gen_piecewise_series(ts.series, ts.seed);

    auto emit = [&](const std::string& variant, const RegressionOptions& opt) {
      log(LogLevel::Info, "regression run '" + variant + "' on " + std::to_string(ys.size()) +
                              " points");
      const SeriesTrace trace = run_regression_series(ys, opt);
      JsonlWriter w(c.out + "." + variant + ".jsonl");
      w.write(header(c, variant));
      write_series(w, trace);
      json s = series_summary(variant, trace, &ts.series.change_points);
      w.write(s);
      summaries.push_back(s);
    };
    if (c.learn_gamma) {
      emit("learned", ts.options(true));
      emit("fixed", ts.options(false));
    } else {
      emit("fixed", c.regression_options());
    }
    return summaries;
  }

  SeriesTrace trace;
  if (is_csv(c.data)) {
    const Dataset d = read_csv_dataset(c.data);
    if (d.num_classes != 0) throw DataError("regression needs real labels (csv header K = 0)");
    c.resolve(d.features.cols(), 1);
    c.validate();
    std::size_t i = 0;
    trace = run_regression_records(
        [&](Vector& phi, double& y) {
          if (i >= d.size()) return false;
          phi = d.features.row(static_cast<Eigen::Index>(i)).transpose();
          y = d.labels[i++];
          return true;
        },
        d.features.cols(), c.regression_options(), c.transform());
  } else {
    FeatureFileReader reader(c.data);
    if (reader.header().label_kind != LabelKind::Real) {
      throw DataError("regression needs a feature file with real labels");
    }
    const Eigen::Index m = reader.header().dim;
    c.resolve(m, 1);
    c.validate();
    trace = run_regression_records([&](Vector& phi, double& y) { return reader.next(phi, y); }, m,
                                   c.regression_options(), c.transform());
  }
  const std::string variant = c.learn_gamma ? "learned" : "fixed";
  JsonlWriter w(c.out + ".jsonl");
  w.write(header(c, variant));
  write_series(w, trace);
  json s = series_summary(variant, trace, nullptr);
  w.write(s);
  summaries.push_back(s);
  return summaries;
}

json run_classification(ExperimentConfig c) {
  c.mode = Mode::Classification;
  c.validate();

  std::optional<Dataset> data;
  std::unique_ptr<FeatureFileReader> reader;
  std::vector<std::size_t> boundaries;
  if (c.synthetic()) {
    const SyntheticClassSpec spec = c.class_spec();
    data = gen_class_stream(spec);
    boundaries = spec.task_boundaries();
  } else if (is_csv(c.data)) {
    data = read_csv_dataset(c.data);
    if (data->num_classes < 1) throw DataError("classification needs class labels (csv header K >= 1)");
  } else {
    reader = std::make_unique<FeatureFileReader>(c.data);
    if (reader->header().label_kind != LabelKind::ClassId || reader->header().num_classes < 1) {
      throw DataError("classification needs a feature file with class-id labels and K >= 1");
    }
  }
  const Eigen::Index m = data ? data->features.cols() : reader->header().dim;
  const Eigen::Index k = data ? data->num_classes : reader->header().num_classes;
  c.resolve(m, k);
  c.validate();

  const FeatureTransform transform = c.transform();
  RunConfig run = c.run_config();
  run.keep_point_records = c.point_trace || c.synthetic();
  if (data) data->features = transform.apply(data->features);

  PrequentialRunner runner(ClassifierFilter(transform.output_dim(m), k, c.classifier_options()), run);
  JsonlWriter w(c.out + ".jsonl");
  w.write(header(c, c.learn_gamma ? "learned" : "fixed"));

  std::vector<StreamChunk> chunks;
  std::size_t next = 0;
  if (data) chunks = make_chunks(*data, run.chunk_size);
  auto source = [&]() -> std::optional<StreamChunk> {
    if (data) {
      if (next >= chunks.size()) return std::nullopt;
      return std::move(chunks[next++]);
    }
    std::optional<StreamChunk> chunk = reader->next_chunk(run.chunk_size);
    if (chunk) chunk->features = transform.apply(chunk->features);
    return chunk;
  };

  while (std::optional<StreamChunk> chunk = source()) {
    const ChunkSummary s = runner.run_chunk(*chunk);
    w.write({{"record", "chunk"},
             {"chunk", s.chunk_index},
             {"points", s.points},
             {"trained_points", s.trained_points},
             {"chunk_accuracy", s.chunk_accuracy},
             {"running_accuracy", s.running_accuracy},
             {"cumulative_log_predictive", s.cumulative_log_predictive},
             {"gamma", s.gamma},
             {"alpha", s.alpha}});
    if (s.chunk_index % 100 == 0) {
      std::ostringstream os;
      os << "chunk " << s.chunk_index << " running accuracy " << s.running_accuracy;
      log(LogLevel::Debug, os.str());
    }
  }

  const OnlineMetrics& metrics = runner.metrics();
  if (c.point_trace) {
    for (std::size_t i = 0; i < metrics.correctness().size(); ++i) {
      w.write({{"record", "point"},
               {"i", i},
               {"gamma", runner.gamma_trace()[i]},
               {"correct", static_cast<bool>(metrics.correctness()[i])},
               {"log_predictive", metrics.point_log_predictive()[i]}});
    }
  }

  json summary{{"record", "summary"},
               {"variant", c.learn_gamma ? "learned" : "fixed"},
               {"points", metrics.n_seen()},
               {"accuracy", metrics.running_accuracy()},
               {"cumulative_log_predictive", metrics.cumulative_log_predictive()},
               {"average_log_predictive", metrics.average_log_predictive()},
               {"final_gamma", runner.filter().gamma()},
               {"final_alpha", runner.filter().alpha()}};
  if (!boundaries.empty()) {
    summary["task_boundaries"] = boundaries.size();
    summary["boundary_dips"] = count_boundary_dips(runner.gamma_trace(), boundaries);
  }
  w.write(summary);
  log(LogLevel::Info, "wrote " + c.out + ".jsonl");
  return summary;
}

json run_experiment(const ExperimentConfig& config) {
  if (config.mode == Mode::Regression) return run_regression(config);
  return json::array({run_classification(config)});
}

bool run_selfcheck(const SelfcheckOptions& options, std::ostream& out) {
  const std::uint64_t s = options.seed;
  std::vector<check::CheckResult> results;
  auto run = [&](check::CheckResult r) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " (" << std::fixed
        << std::setprecision(2) << r.seconds << " s)" << std::endl;
    out.unsetf(std::ios::floatfield);
    results.push_back(std::move(r));
  };
  run(check::blr_equivalence(20, 200, s));
  run(check::column_equivalence(20, 100, s + 1));
  run(check::regression_gradients(100, s + 2));
  run(check::classifier_gradients(100, 64, s + 3));
  run(check::covariance_invariants(10000, s + 4, options.fault));

  json failed = json::array();
  for (const auto& r : results) {
    if (!r.passed) failed.push_back(r.name);
  }
  out << json{{"record", "selfcheck"},
              {"format_version", kFormatVersion},
              {"seed", s},
              {"checks", results.size()},
              {"failed", failed},
              {"ok", failed.empty()}}
             .dump()
      << std::endl;
  return failed.empty();
}

}  // namespace kocl::cli
