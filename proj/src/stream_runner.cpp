#include "kocl/stream_runner.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "kocl/errors.hpp"

namespace kocl {

std::vector<StreamChunk> make_chunks(const Dataset& data, std::size_t chunk_size) {
  if (chunk_size < 1) throw ConfigError("chunk_size must be at least 1");
  if (static_cast<std::size_t>(data.features.rows()) != data.labels.size()) {
    throw DataError("dataset has mismatched feature and label counts");
  }
  std::vector<StreamChunk> chunks;
  const std::size_t n = data.size();
  for (std::size_t start = 0, idx = 0; start < n; start += chunk_size, ++idx) {
    const std::size_t b = std::min(chunk_size, n - start);
    StreamChunk c;
    c.features = data.features.middleRows(static_cast<Eigen::Index>(start),
                                          static_cast<Eigen::Index>(b));
    c.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(start),
                    data.labels.begin() + static_cast<std::ptrdiff_t>(start + b));
    c.stream_index.resize(b);
    for (std::size_t i = 0; i < b; ++i) c.stream_index[i] = start + i;
    c.chunk_index = idx;
    chunks.push_back(std::move(c));
  }
  return chunks;
}

void RunConfig::validate() const {
  if (chunk_size < 1) throw ConfigError("chunk_size must be at least 1");
  if (replay) {
    if (replay->capacity < 1) throw ConfigError("replay capacity must be at least 1");
    if (replay->sample_size > replay->capacity) {
      throw ConfigError("replay sample_size must not exceed capacity");
    }
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw ConfigError("replay capacity must be at least 1");
}

void ReplayBuffer::push(const VectorRef& features, double label, std::size_t stream_index) {
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back(Entry{features, label, stream_index});
}

StreamChunk replay_augment(const StreamChunk& chunk, ReplayBuffer& buffer,
                           std::size_t sample_size, std::mt19937_64& rng) {
  std::vector<std::size_t> picks;
  const std::size_t take = std::min(sample_size, buffer.size());
  if (take > 0) {
    std::vector<std::size_t> all(buffer.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::sample(all.begin(), all.end(), std::back_inserter(picks), take, rng);
  }

  StreamChunk out;
  out.chunk_index = chunk.chunk_index;
  const auto b = static_cast<Eigen::Index>(chunk.size());
  out.features.resize(b + static_cast<Eigen::Index>(take), chunk.features.cols());
  out.features.topRows(b) = chunk.features;
  out.labels = chunk.labels;
  out.stream_index = chunk.stream_index;
  for (std::size_t j = 0; j < take; ++j) {
    const auto& e = buffer.entries()[picks[j]];
    out.features.row(b + static_cast<Eigen::Index>(j)) = e.features.transpose();
    out.labels.push_back(e.label);
    out.stream_index.push_back(e.stream_index);
  }

  for (Eigen::Index i = 0; i < b; ++i) {
    buffer.push(chunk.features.row(i).transpose(), chunk.labels[static_cast<std::size_t>(i)],
                chunk.stream_index[static_cast<std::size_t>(i)]);
  }
  return out;
}

void OnlineMetrics::record(bool correct, double log_predictive, bool keep_point) {
  ++n_seen_;
  if (correct) ++n_correct_;
  cumulative_log_predictive_ += log_predictive;
  if (keep_point) {
    correctness_.push_back(correct);
    point_log_predictive_.push_back(log_predictive);
  }
}

double OnlineMetrics::running_accuracy() const {
  return n_seen_ == 0 ? 0.0 : static_cast<double>(n_correct_) / static_cast<double>(n_seen_);
}

double OnlineMetrics::average_log_predictive() const {
  return n_seen_ == 0 ? 0.0 : cumulative_log_predictive_ / static_cast<double>(n_seen_);
}

PrequentialRunner::PrequentialRunner(ClassifierFilter filter, RunConfig config)
    : filter_(std::move(filter)),
      config_(config),
      buffer_(config.replay ? config.replay->capacity : 1),
      replay_rng_(config.replay_seed) {
  config_.validate();
}

void PrequentialRunner::validate(const StreamChunk& chunk) const {
  const std::size_t b = chunk.size();
  if (b < 1) throw DataError("chunk " + std::to_string(chunk.chunk_index) + " is empty");
  if (static_cast<std::size_t>(chunk.features.rows()) != b || chunk.stream_index.size() != b) {
    throw DataError("chunk " + std::to_string(chunk.chunk_index) +
                    " has mismatched feature, label and index counts");
  }
  if (chunk.features.cols() != filter_.dim()) {
    throw DomainError("chunk " + std::to_string(chunk.chunk_index) + " has feature dimension " +
                      std::to_string(chunk.features.cols()) + ", filter expects " +
                      std::to_string(filter_.dim()));
  }
  if (!chunk.features.allFinite()) {
    throw NumericError("chunk " + std::to_string(chunk.chunk_index) + " has non-finite features");
  }
  for (double y : chunk.labels) {
    if (!(y >= 0.0 && y < static_cast<double>(filter_.classes()) && y == std::floor(y))) {
      throw DataError("chunk " + std::to_string(chunk.chunk_index) + " has label " +
                      std::to_string(y) + " outside [0, " + std::to_string(filter_.classes()) +
                      ")");
    }
  }
}

ChunkSummary PrequentialRunner::run_chunk(const StreamChunk& chunk) {
  validate(chunk);
  const ClassifierOptions& opt = filter_.options();
  const std::size_t b = chunk.size();

  // Phase 1: i.i.d. scoring of the stream points against the current state.
  std::vector<Matrix> noise(b);
  std::vector<double> d_alpha;
  ChunkSummary summary;
  summary.chunk_index = chunk.chunk_index;
  summary.points = b;
  std::size_t correct_here = 0;
  for (std::size_t i = 0; i < b; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const auto k = static_cast<Eigen::Index>(chunk.labels[i]);
    noise[i] = filter_.noise(chunk.stream_index[i]);
    const McLogProb e = filter_.evaluate(chunk.features.row(row).transpose(), k, noise[i]);
    const bool correct = argmax(e.probs) == k;
    correct_here += correct ? 1 : 0;
    summary.chunk_log_predictive += e.log_prob;
    metrics_.record(correct, e.log_prob, config_.keep_point_records);
    if (config_.keep_point_records) point_probs_.push_back(e.probs);
    d_alpha.push_back(e.d_alpha);
  }

  StreamChunk augmented_storage;
  const StreamChunk* work = &chunk;
  if (config_.replay) {
    augmented_storage = replay_augment(chunk, buffer_, config_.replay->sample_size, replay_rng_);
    work = &augmented_storage;
    replay_log_.emplace_back(augmented_storage.stream_index.begin() + static_cast<std::ptrdiff_t>(b),
                             augmented_storage.stream_index.end());
    for (std::size_t j = b; j < work->size(); ++j) {
      noise.push_back(filter_.noise(work->stream_index[j]));
    }
  }
  const std::size_t n_train = work->size();

  // Phase 2: calibration step on the chunk-mean log predictive.
  if (opt.learn_alpha && config_.alpha_schedule == AlphaSchedule::PerChunk) {
    for (std::size_t j = b; j < n_train; ++j) {
      const auto k = static_cast<Eigen::Index>(work->labels[j]);
      d_alpha.push_back(filter_
                            .evaluate(work->features.row(static_cast<Eigen::Index>(j)).transpose(),
                                      k, noise[j])
                            .d_alpha);
    }
    double mean = 0.0;
    for (double g : d_alpha) mean += g;
    filter_.step_alpha(mean / static_cast<double>(n_train));
  }

  // Phase 3: sequential Kalman recursion.
  for (std::size_t j = 0; j < n_train; ++j) {
    const Vector phi = work->features.row(static_cast<Eigen::Index>(j)).transpose();
    const auto k = static_cast<Eigen::Index>(work->labels[j]);
    if (opt.learn_alpha && config_.alpha_schedule == AlphaSchedule::PerPoint) {
      filter_.step_alpha(filter_.evaluate(phi, k, noise[j]).d_alpha);
    }
    if (opt.learn_delta) filter_.step_delta(phi, k, noise[j]);
    if (j < b && config_.keep_point_records) gamma_trace_.push_back(filter_.gamma());
    const bool transition =
        config_.transition == TransitionMode::AlwaysMarkov || j + 1 == n_train;
    filter_.advance(phi, k, transition);
  }

  summary.trained_points = n_train;
  summary.chunk_accuracy = static_cast<double>(correct_here) / static_cast<double>(b);
  summary.running_accuracy = metrics_.running_accuracy();
  summary.cumulative_log_predictive = metrics_.cumulative_log_predictive();
  summary.gamma = filter_.gamma();
  summary.alpha = filter_.alpha();
  metrics_.record_chunk(summary);
  return summary;
}

void PrequentialRunner::run_stream(const std::function<std::optional<StreamChunk>()>& source) {
  while (auto chunk = source()) run_chunk(*chunk);
}

void PrequentialRunner::run_stream(const std::vector<StreamChunk>& chunks) {
  for (const auto& c : chunks) run_chunk(c);
}

}  // namespace kocl
