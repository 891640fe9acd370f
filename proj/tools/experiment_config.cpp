#include "experiment_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "kocl/errors.hpp"

namespace kocl::cli {

using nlohmann::json;

const char* to_string(Mode m) {
  return m == Mode::Regression ? "regression" : "classification";
}

namespace {

Mode parse_mode(const std::string& s) {
  if (s == "regression") return Mode::Regression;
  if (s == "classification") return Mode::Classification;
  throw ConfigError("mode: expected 'regression' or 'classification', got '" + s + "'");
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
T get_as(const json& v, const std::string& field) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field + ": wrong type (" + std::string(v.type_name()) + ")");
  }
}

template <class T>
std::optional<T> get_opt(const json& v, const std::string& field) {
  if (v.is_null()) return std::nullopt;
  return get_as<T>(v, field);
}

}  // namespace

void ExperimentConfig::resolve(Eigen::Index m, Eigen::Index k) {
  const bool regression = mode == Mode::Regression;
  const bool series = regression && synthetic();
  if (!bias) bias = synthetic() && !regression;
  const Eigen::Index m_out = transform().output_dim(m);
  if (!sigma2) sigma2 = series ? 0.05 : 1.0 / static_cast<double>(std::max<Eigen::Index>(k, 1));
  if (!sigmaw2) sigmaw2 = series ? 0.01 : 1.0 / static_cast<double>(std::max<Eigen::Index>(m_out, 1));
  if (!delta_lr) delta_lr = regression ? 1.0 : 0.03;
  if (!learn_alpha) learn_alpha = !regression;
  if (!mean_transition) mean_transition = series ? "nonshrinking" : "shrinking";
  if (!chunk_size) chunk_size = synthetic() ? 10 : 128;
}

void ExperimentConfig::validate() const {
  require(seed <= (std::uint64_t{1} << 53), "seed", "must be at most 2^53");
  require(tasks >= 1, "tasks", "must be at least 1");
  require(classes_per_task >= 1, "classes_per_task", "must be at least 1");
  require(dim >= 1, "dim", "must be at least 1");
  require(points_per_task >= 1, "points_per_task", "must be at least 1");
  require(std::isfinite(center_scale) && center_scale >= 0, "center_scale", "must be >= 0");
  require(std::isfinite(noise_scale) && noise_scale >= 0, "noise_scale", "must be >= 0");
  require(!sigma2 || (std::isfinite(*sigma2) && *sigma2 > 0), "sigma2", "must be > 0");
  require(!sigmaw2 || (std::isfinite(*sigmaw2) && *sigmaw2 > 0), "sigmaw2", "must be > 0");
  require(std::isfinite(gamma_init) && gamma_init > 0 && gamma_init <= 1, "gamma_init",
          "must lie in (0, 1]");
  require(!delta_lr || (std::isfinite(*delta_lr) && *delta_lr >= 0), "delta_lr", "must be >= 0");
  require(std::isfinite(alpha_init) && alpha_init > 0, "alpha_init", "must be > 0");
  require(std::isfinite(alpha_lr) && alpha_lr >= 0, "alpha_lr", "must be >= 0");
  require(mc_samples >= 1, "mc_samples", "must be at least 1");
  require(!mean_transition || *mean_transition == "shrinking" || *mean_transition == "nonshrinking",
          "mean_transition", "expected 'shrinking' or 'nonshrinking'");
  require(!chunk_size || *chunk_size >= 1, "chunk_size", "must be at least 1");
  require(transition == "always" || transition == "last", "transition",
          "expected 'always' or 'last'");
  require(alpha_schedule == "chunk" || alpha_schedule == "point", "alpha_schedule",
          "expected 'chunk' or 'point'");
  require(replay_sample == 0 || replay_capacity >= 1, "replay_capacity", "must be at least 1");
}

ClassifierOptions ExperimentConfig::classifier_options() const {
  ClassifierOptions o;
  o.hp.sigma2 = sigma2.value();
  o.hp.sigmaw2 = sigmaw2.value();
  o.delta_init = delta_from_gamma(gamma_init);
  o.delta_lr = delta_lr.value();
  o.learn_delta = learn_gamma;
  o.alpha_init = alpha_init;
  o.alpha_lr = alpha_lr;
  o.learn_alpha = learn_alpha.value();
  o.mc_samples = mc_samples;
  o.seed = seed;
  o.mean_transition = mean_transition.value() == "shrinking" ? MeanTransition::Shrinking
                                                             : MeanTransition::NonShrinking;
  return o;
}

RegressionOptions ExperimentConfig::regression_options() const {
  RegressionOptions o;
  o.hp.sigma2 = sigma2.value();
  o.hp.sigmaw2 = sigmaw2.value();
  o.delta_init = delta_from_gamma(gamma_init);
  o.delta_lr = delta_lr.value();
  o.learn_delta = learn_gamma;
  o.mean_transition = mean_transition.value() == "shrinking" ? MeanTransition::Shrinking
                                                             : MeanTransition::NonShrinking;
  return o;
}

RunConfig ExperimentConfig::run_config() const {
  RunConfig r;
  r.chunk_size = chunk_size.value();
  r.transition = transition == "last" ? TransitionMode::LastStepMarkov : TransitionMode::AlwaysMarkov;
  r.alpha_schedule = alpha_schedule == "point" ? AlphaSchedule::PerPoint : AlphaSchedule::PerChunk;
  if (replay_sample > 0) r.replay = ReplayConfig{replay_capacity, replay_sample};
  r.replay_seed = seed;
  r.keep_point_records = point_trace;
  return r;
}

FeatureTransform ExperimentConfig::transform() const {
  FeatureTransform t;
  t.normalize = normalize;
  t.bias = bias.value_or(false);
  return t;
}

SyntheticClassSpec ExperimentConfig::class_spec() const {
  SyntheticClassSpec s = SyntheticClassSpec::split(tasks, classes_per_task, dim, points_per_task, seed);
  s.center_scale = center_scale;
  s.noise_scale = noise_scale;
  return s;
}

json to_json(const ExperimentConfig& c) {
  return json{
      {"mode", to_string(c.mode)},
      {"data", c.data},
      {"out", c.out},
      {"seed", c.seed},
      {"tasks", c.tasks},
      {"classes_per_task", c.classes_per_task},
      {"dim", c.dim},
      {"points_per_task", c.points_per_task},
      {"center_scale", c.center_scale},
      {"noise_scale", c.noise_scale},
      {"normalize", c.normalize},
      {"bias", opt(c.bias)},
      {"sigma2", opt(c.sigma2)},
      {"sigmaw2", opt(c.sigmaw2)},
      {"learn_gamma", c.learn_gamma},
      {"gamma_init", c.gamma_init},
      {"delta_lr", opt(c.delta_lr)},
      {"alpha_init", c.alpha_init},
      {"learn_alpha", opt(c.learn_alpha)},
      {"alpha_lr", c.alpha_lr},
      {"mc_samples", c.mc_samples},
      {"mean_transition", opt(c.mean_transition)},
      {"chunk_size", opt(c.chunk_size)},
      {"transition", c.transition},
      {"alpha_schedule", c.alpha_schedule},
      {"replay_capacity", c.replay_capacity},
      {"replay_sample", c.replay_sample},
      {"point_trace", c.point_trace},
  };
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"mode", [&](const json& v, const std::string& f) { c.mode = parse_mode(get_as<std::string>(v, f)); }},
      {"data", [&](const json& v, const std::string& f) { c.data = get_as<std::string>(v, f); }},
      {"out", [&](const json& v, const std::string& f) { c.out = get_as<std::string>(v, f); }},
      {"seed", [&](const json& v, const std::string& f) { c.seed = get_as<std::uint64_t>(v, f); }},
      {"tasks", [&](const json& v, const std::string& f) { c.tasks = get_as<std::size_t>(v, f); }},
      {"classes_per_task", [&](const json& v, const std::string& f) { c.classes_per_task = get_as<std::size_t>(v, f); }},
      {"dim", [&](const json& v, const std::string& f) { c.dim = get_as<std::size_t>(v, f); }},
      {"points_per_task", [&](const json& v, const std::string& f) { c.points_per_task = get_as<std::size_t>(v, f); }},
      {"center_scale", [&](const json& v, const std::string& f) { c.center_scale = get_as<double>(v, f); }},
      {"noise_scale", [&](const json& v, const std::string& f) { c.noise_scale = get_as<double>(v, f); }},
      {"normalize", [&](const json& v, const std::string& f) { c.normalize = get_as<bool>(v, f); }},
      {"bias", [&](const json& v, const std::string& f) { c.bias = get_opt<bool>(v, f); }},
      {"sigma2", [&](const json& v, const std::string& f) { c.sigma2 = get_opt<double>(v, f); }},
      {"sigmaw2", [&](const json& v, const std::string& f) { c.sigmaw2 = get_opt<double>(v, f); }},
      {"learn_gamma", [&](const json& v, const std::string& f) { c.learn_gamma = get_as<bool>(v, f); }},
      {"gamma_init", [&](const json& v, const std::string& f) { c.gamma_init = get_as<double>(v, f); }},
      {"delta_lr", [&](const json& v, const std::string& f) { c.delta_lr = get_opt<double>(v, f); }},
      {"alpha_init", [&](const json& v, const std::string& f) { c.alpha_init = get_as<double>(v, f); }},
      {"learn_alpha", [&](const json& v, const std::string& f) { c.learn_alpha = get_opt<bool>(v, f); }},
      {"alpha_lr", [&](const json& v, const std::string& f) { c.alpha_lr = get_as<double>(v, f); }},
      {"mc_samples", [&](const json& v, const std::string& f) { c.mc_samples = get_as<std::size_t>(v, f); }},
      {"mean_transition", [&](const json& v, const std::string& f) { c.mean_transition = get_opt<std::string>(v, f); }},
      {"chunk_size", [&](const json& v, const std::string& f) { c.chunk_size = get_opt<std::size_t>(v, f); }},
      {"transition", [&](const json& v, const std::string& f) { c.transition = get_as<std::string>(v, f); }},
      {"alpha_schedule", [&](const json& v, const std::string& f) { c.alpha_schedule = get_as<std::string>(v, f); }},
      {"replay_capacity", [&](const json& v, const std::string& f) { c.replay_capacity = get_as<std::size_t>(v, f); }},
      {"replay_sample", [&](const json& v, const std::string& f) { c.replay_sample = get_as<std::size_t>(v, f); }},
      {"point_trace", [&](const json& v, const std::string& f) { c.point_trace = get_as<bool>(v, f); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config field '" + key + "'");
    it->second(value, key);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string first;
  std::getline(in, first);
  json j;
  try {
    j = json::parse(first);
  } catch (const json::exception&) {
    // Not a single-line record: treat the whole file as one JSON document.
    in.clear();
    in.seekg(0);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
  }
  if (j.is_object() && j.value("record", "") == "header") {
    if (j.value("format_version", 0) != kFormatVersion) {
      throw ConfigError("config file '" + path + "' has an unsupported format version");
    }
    return config_from_json(j.at("config"));
  }
  return config_from_json(j);
}

}  // namespace kocl::cli
