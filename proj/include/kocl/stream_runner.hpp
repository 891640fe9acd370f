#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "kocl/classifier_filter.hpp"
#include "kocl/stream_chunk.hpp"

namespace kocl {

enum class TransitionMode {
  AlwaysMarkov,   ///< transition before every point's update
  LastStepMarkov  ///< transition only before the chunk's last point
};

enum class AlphaSchedule {
  PerChunk,  ///< one step on the chunk-mean loss, before the recursion
  PerPoint   ///< one step per point during the recursion
};

struct ReplayConfig {
  std::size_t capacity = 100;
  std::size_t sample_size = 10;
};

struct RunConfig {
  TransitionMode transition = TransitionMode::AlwaysMarkov;
  std::size_t chunk_size = 10;
  std::optional<ReplayConfig> replay;
  AlphaSchedule alpha_schedule = AlphaSchedule::PerChunk;
  std::uint64_t replay_seed = 0;
  /// Keep per-point correctness, scores and gamma. Off for very long streams.
  bool keep_point_records = true;

  void validate() const;
};

/// FIFO memory of the most recently seen points.
class ReplayBuffer {
 public:
  struct Entry {
    Vector features;
    double label = 0.0;
    std::size_t stream_index = 0;
  };

  explicit ReplayBuffer(std::size_t capacity = 100);

  void push(const VectorRef& features, double label, std::size_t stream_index);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

/// Returns the chunk followed by min(sample_size, buffer.size()) buffer
/// points drawn uniformly without replacement, then pushes the chunk's own
/// points into the buffer.
StreamChunk replay_augment(const StreamChunk& chunk, ReplayBuffer& buffer,
                           std::size_t sample_size, std::mt19937_64& rng);

struct ChunkSummary {
  std::size_t chunk_index = 0;
  std::size_t points = 0;          ///< stream points scored (replay excluded)
  std::size_t trained_points = 0;  ///< points passed through the recursion
  double chunk_accuracy = 0.0;
  double chunk_log_predictive = 0.0;  ///< sum over the chunk's points
  double running_accuracy = 0.0;
  double cumulative_log_predictive = 0.0;
  double gamma = 1.0;  ///< after the chunk
  double alpha = 1.0;  ///< after the chunk
};

/// Prequential accounting. Every recorded score was computed before the
/// point it belongs to was used for training.
class OnlineMetrics {
 public:
  void record(bool correct, double log_predictive, bool keep_point);
  void record_chunk(const ChunkSummary& summary) { history_.push_back(summary); }

  std::size_t n_seen() const { return n_seen_; }
  std::size_t n_correct() const { return n_correct_; }
  double running_accuracy() const;
  double cumulative_log_predictive() const { return cumulative_log_predictive_; }
  double average_log_predictive() const;

  const std::vector<bool>& correctness() const { return correctness_; }
  const std::vector<double>& point_log_predictive() const { return point_log_predictive_; }
  const std::vector<ChunkSummary>& history() const { return history_; }

 private:
  std::size_t n_seen_ = 0;
  std::size_t n_correct_ = 0;
  double cumulative_log_predictive_ = 0.0;
  std::vector<bool> correctness_;
  std::vector<double> point_log_predictive_;
  std::vector<ChunkSummary> history_;
};

/// Drives a ClassifierFilter through a chunked stream:
///   1. score every stream point of the chunk against the current state,
///   2. step alpha on the chunk-mean log predictive (PerChunk schedule),
///   3. run the Kalman recursion point by point with per-point delta steps,
///      applying the transition per TransitionMode.
/// Metrics come from phase 1 only. Noise for stream point i is always
/// filter.noise(i), in scoring and in training.
class PrequentialRunner {
 public:
  PrequentialRunner(ClassifierFilter filter, RunConfig config);

  /// Processes one chunk. Shape and label errors are raised before any
  /// state changes.
  ChunkSummary run_chunk(const StreamChunk& chunk);

  /// Pulls chunks until the source returns nullopt. On an exception the
  /// metrics and traces up to the failing chunk remain readable.
  void run_stream(const std::function<std::optional<StreamChunk>()>& source);
  void run_stream(const std::vector<StreamChunk>& chunks);

  const ClassifierFilter& filter() const { return filter_; }
  const OnlineMetrics& metrics() const { return metrics_; }
  const RunConfig& config() const { return config_; }
  const ReplayBuffer& replay_buffer() const { return buffer_; }

  /// gamma after each trained stream point's delta step (replay excluded).
  const std::vector<double>& gamma_trace() const { return gamma_trace_; }
  /// Predictive probabilities from phase 1, one per stream point.
  const std::vector<Vector>& point_probs() const { return point_probs_; }
  /// Stream indices of the replayed points appended to each chunk.
  const std::vector<std::vector<std::size_t>>& replay_log() const { return replay_log_; }

 private:
  void validate(const StreamChunk& chunk) const;

  ClassifierFilter filter_;
  RunConfig config_;
  OnlineMetrics metrics_;
  ReplayBuffer buffer_;
  std::mt19937_64 replay_rng_;
  std::vector<double> gamma_trace_;
  std::vector<Vector> point_probs_;
  std::vector<std::vector<std::size_t>> replay_log_;
};

}  // namespace kocl
