#pragma once

#include <cstddef>
#include <vector>

#include "kocl/filter_core.hpp"

namespace kocl {

/// Block of b labelled points revealed together. Row i of `features` pairs
/// with labels[i]; stream_index[i] is the point's position in the original
/// stream (0-based).
struct StreamChunk {
  Matrix features;  ///< b x m
  std::vector<double> labels;
  std::vector<std::size_t> stream_index;
  std::size_t chunk_index = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t first_index() const { return stream_index.empty() ? 0 : stream_index.front(); }
};

/// In-memory labelled dataset, N x m features.
struct Dataset {
  Matrix features;
  std::vector<double> labels;
  Eigen::Index num_classes = 0;  ///< 0 for real-valued targets

  std::size_t size() const { return labels.size(); }
};

/// Splits a dataset into consecutive chunks of `chunk_size` (the last may be
/// shorter), preserving order.
std::vector<StreamChunk> make_chunks(const Dataset& data, std::size_t chunk_size);

}  // namespace kocl
