// kocl: command-line runner for the online Kalman filter experiments.
//
//   kocl timeseries [flags]     regression on the piecewise-constant series
//   kocl classify [flags]       prequential classification
//   kocl run --mode M [flags]   either of the above
//   kocl selfcheck              oracle and gradient check suites
//
// Exit codes: 0 ok, 1 other error, 2 configuration, 3 data, 4 numeric,
// 5 self-check failure.

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "kocl/errors.hpp"
#include "log.hpp"

namespace {

using kocl::cli::ExperimentConfig;
using nlohmann::json;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4, kCheckFailed = 5 };

/// Flag values; each is applied to the config only when given explicitly.
struct Flags {
  std::string mode, data, out, config_path;
  std::uint64_t seed = 0;
  std::size_t chunk_size = 0, mc_samples = 0, replay_capacity = 0, replay_sample = 0;
  std::size_t tasks = 0, classes_per_task = 0, dim = 0, points_per_task = 0;
  double gamma = 1.0, gamma_init = 1.0, alpha_init = 1.0;
  double sigma2 = 0, sigmaw2 = 0, delta_lr = 0, alpha_lr = 0;
  double center_scale = 0, noise_scale = 0;
  bool learn_gamma = true, learn_alpha = false, normalize = false, bias = false;
  bool point_trace = false;
  std::string transition, alpha_schedule, mean_transition;
  std::vector<std::string> sweep;
  std::size_t jobs = 0;
};

void add_run_flags(CLI::App* app, Flags& f, bool with_mode) {
  if (with_mode) {
    app->add_option("--mode", f.mode, "regression | classification")
        ->check(CLI::IsMember({"regression", "classification"}))
        ->required();
  }
  app->add_option("--config", f.config_path,
                  "Re-run from a JSON config or a previous output file; other flags override it");
  app->add_option("--data", f.data, "Feature file (.kocl) or CSV; omit for the synthetic source");
  app->add_option("--out", f.out, "Output path prefix");
  app->add_option("--seed", f.seed, "Seed for data generation, MC noise and replay");
  app->add_option("--chunk-size", f.chunk_size, "Points per chunk (default 10 synthetic, 128 file)");
  app->add_option("--gamma", f.gamma, "Fixed forgetting coefficient; disables learning");
  app->add_flag("--learn-gamma,!--no-learn-gamma", f.learn_gamma, "Learn gamma online (default on)");
  app->add_option("--gamma-init", f.gamma_init, "Initial gamma for the learned run");
  app->add_option("--alpha-init", f.alpha_init, "Initial calibration scale");
  app->add_flag("--learn-alpha,!--no-learn-alpha", f.learn_alpha, "Learn the calibration scale");
  app->add_option("--alpha-schedule", f.alpha_schedule, "chunk | point")
      ->check(CLI::IsMember({"chunk", "point"}));
  app->add_option("--mc-samples", f.mc_samples, "Monte-Carlo samples per prediction");
  app->add_option("--transition", f.transition, "always | last")
      ->check(CLI::IsMember({"always", "last"}));
  app->add_option("--mean-transition", f.mean_transition, "shrinking | nonshrinking")
      ->check(CLI::IsMember({"shrinking", "nonshrinking"}));
  app->add_option("--replay-capacity", f.replay_capacity, "Replay buffer capacity");
  app->add_option("--replay-sample", f.replay_sample, "Replayed points per chunk (0 = off)");
  app->add_option("--sigma2", f.sigma2, "Observation noise variance (default 1/K)");
  app->add_option("--sigmaw2", f.sigmaw2, "Prior weight variance (default 1/m)");
  app->add_option("--delta-lr", f.delta_lr, "Learning rate for delta");
  app->add_option("--alpha-lr", f.alpha_lr, "Learning rate for alpha");
  app->add_flag("--normalize", f.normalize, "Scale features by 1/sqrt(m)");
  app->add_flag("--bias,!--no-bias", f.bias, "Append a constant feature");
  app->add_option("--tasks", f.tasks, "Synthetic stream: number of tasks");
  app->add_option("--classes-per-task", f.classes_per_task, "Synthetic stream: classes per task");
  app->add_option("--dim", f.dim, "Synthetic stream: feature dimension");
  app->add_option("--points-per-task", f.points_per_task, "Synthetic stream: points per task");
  app->add_option("--center-scale", f.center_scale, "Synthetic stream: class centre scale");
  app->add_option("--noise-scale", f.noise_scale, "Synthetic stream: feature noise scale");
  app->add_flag("--point-trace", f.point_trace, "Also write one record per stream point");
  app->add_option("--sweep", f.sweep,
                  "field=v1,v2,... (repeatable); runs the grid in parallel, one output per job");
  app->add_option("--jobs", f.jobs, "Parallel jobs for --sweep (default: hardware threads)");
}

ExperimentConfig build_config(const CLI::App* app, const Flags& f, kocl::cli::Mode mode) {
  ExperimentConfig c;
  const bool from_file = app->count("--config") > 0;
  if (from_file) {
    c = kocl::cli::load_config(f.config_path);
  } else {
    c.mode = mode;
  }
  auto given = [&](const char* name) { return app->count(name) > 0; };
  if (given("--data")) c.data = f.data;
  if (given("--out")) c.out = f.out;
  if (given("--seed")) c.seed = f.seed;
  if (given("--chunk-size")) c.chunk_size = f.chunk_size;
  if (given("--learn-gamma") || given("--no-learn-gamma")) c.learn_gamma = f.learn_gamma;
  if (given("--gamma")) {
    if (given("--learn-gamma")) throw kocl::ConfigError("--gamma fixes gamma; drop --learn-gamma");
    c.learn_gamma = false;
    c.gamma_init = f.gamma;
  }
  if (given("--gamma-init")) c.gamma_init = f.gamma_init;
  if (given("--alpha-init")) c.alpha_init = f.alpha_init;
  if (given("--learn-alpha") || given("--no-learn-alpha")) c.learn_alpha = f.learn_alpha;
  if (given("--alpha-schedule")) c.alpha_schedule = f.alpha_schedule;
  if (given("--mc-samples")) c.mc_samples = f.mc_samples;
  if (given("--transition")) c.transition = f.transition;
  if (given("--mean-transition")) c.mean_transition = f.mean_transition;
  if (given("--replay-capacity")) c.replay_capacity = f.replay_capacity;
  if (given("--replay-sample")) c.replay_sample = f.replay_sample;
  if (given("--replay-capacity") && !given("--replay-sample") && c.replay_sample == 0) {
    c.replay_sample = 10;
  }
  if (given("--sigma2")) c.sigma2 = f.sigma2;
  if (given("--sigmaw2")) c.sigmaw2 = f.sigmaw2;
  if (given("--delta-lr")) c.delta_lr = f.delta_lr;
  if (given("--alpha-lr")) c.alpha_lr = f.alpha_lr;
  if (given("--normalize")) c.normalize = f.normalize;
  if (given("--bias") || given("--no-bias")) c.bias = f.bias;
  if (given("--tasks")) c.tasks = f.tasks;
  if (given("--classes-per-task")) c.classes_per_task = f.classes_per_task;
  if (given("--dim")) c.dim = f.dim;
  if (given("--points-per-task")) c.points_per_task = f.points_per_task;
  if (given("--center-scale")) c.center_scale = f.center_scale;
  if (given("--noise-scale")) c.noise_scale = f.noise_scale;
  if (given("--point-trace")) c.point_trace = f.point_trace;
  c.validate();
  return c;
}

/// Parses one sweep value as JSON (numbers, booleans), else as a string.
json sweep_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base,
                                           const std::vector<std::string>& specs) {
  std::vector<json> grid{kocl::cli::to_json(base)};
  for (const std::string& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw kocl::ConfigError("sweep: expected field=v1,v2,... but got '" + spec + "'");
    }
    std::string field = spec.substr(0, eq);
    std::replace(field.begin(), field.end(), '-', '_');
    std::vector<json> values;
    std::stringstream ss(spec.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');) values.push_back(sweep_value(v));
    if (values.empty()) throw kocl::ConfigError("sweep: no values for '" + field + "'");
    std::vector<json> next;
    for (const json& g : grid) {
      if (!g.contains(field)) throw kocl::ConfigError("sweep: unknown config field '" + field + "'");
      for (const json& v : values) {
        json j = g;
        j[field] = v;
        next.push_back(std::move(j));
      }
    }
    grid = std::move(next);
  }
  std::vector<ExperimentConfig> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ExperimentConfig c = kocl::cli::config_from_json(grid[i]);
    c.out = base.out + ".sweep" + std::to_string(i);
    out.push_back(std::move(c));
  }
  return out;
}

/// Independent runs on a pool of threads; nothing mutable is shared except
/// the job counter and the output stream lock.
int run_sweep(const std::vector<ExperimentConfig>& configs, std::size_t jobs) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, configs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{kOk};
  std::mutex out_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < configs.size();) {
      json line{{"record", "sweep_job"}, {"job", i}, {"out", configs[i].out},
                {"config", kocl::cli::to_json(configs[i])}};
      try {
        line["summary"] = kocl::cli::run_experiment(configs[i]);
      } catch (const std::exception& e) {
        line["error"] = e.what();
        worst = kOther;
      }
      std::lock_guard lock(out_mu);
      std::cout << line.dump() << std::endl;
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return worst;
}

int run_command(const CLI::App* app, const Flags& f, kocl::cli::Mode mode) {
  const ExperimentConfig config = build_config(app, f, mode);
  if (!f.sweep.empty()) return run_sweep(expand_sweep(config, f.sweep), f.jobs);
  const json summaries = kocl::cli::run_experiment(config);
  for (const json& s : summaries) std::cout << s.dump() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online continual learning with a Kalman filter"};
  app.require_subcommand(1);
  Flags flags;

  CLI::App* timeseries = app.add_subcommand(
      "timeseries", "Regression: learned gamma and gamma = 1 on the piecewise-constant series");
  add_run_flags(timeseries, flags, false);
  CLI::App* classify = app.add_subcommand("classify", "Prequential classification");
  add_run_flags(classify, flags, false);
  CLI::App* run = app.add_subcommand("run", "Run either mode");
  add_run_flags(run, flags, true);

  CLI::App* selfcheck = app.add_subcommand("selfcheck", "Oracle and gradient check suites");
  kocl::cli::SelfcheckOptions check_opts;
  std::string fault;
  selfcheck->add_option("--seed", check_opts.seed, "Seed for the randomized checks");
  selfcheck->add_option("--inject-fault", fault)
      ->check(CLI::IsMember({"asymmetry"}))
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (selfcheck->parsed()) {
      if (fault == "asymmetry") check_opts.fault = kocl::check::Fault::Asymmetry;
      return kocl::cli::run_selfcheck(check_opts, std::cout) ? kOk : kCheckFailed;
    }
    if (timeseries->parsed()) return run_command(timeseries, flags, kocl::cli::Mode::Regression);
    if (classify->parsed()) return run_command(classify, flags, kocl::cli::Mode::Classification);
    const auto mode = flags.mode == "regression" ? kocl::cli::Mode::Regression
                                                 : kocl::cli::Mode::Classification;
    return run_command(run, flags, mode);
  } catch (const kocl::ConfigError& e) {
    kocl::cli::log(kocl::cli::LogLevel::Error, std::string("configuration error: ") + e.what());
    return kConfig;
  } catch (const kocl::DataError& e) {
    kocl::cli::log(kocl::cli::LogLevel::Error, std::string("data error: ") + e.what());
    return kData;
  } catch (const kocl::DomainError& e) {
    kocl::cli::log(kocl::cli::LogLevel::Error, std::string("data error: ") + e.what());
    return kData;
  } catch (const kocl::NumericError& e) {
    kocl::cli::log(kocl::cli::LogLevel::Error, std::string("numeric failure: ") + e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    kocl::cli::log(kocl::cli::LogLevel::Error, e.what());
    return kOther;
  }
}
