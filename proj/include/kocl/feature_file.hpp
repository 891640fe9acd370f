#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kocl/errors.hpp"
#include "kocl/stream_chunk.hpp"

namespace kocl {

// Binary layout, all integers and floats little-endian:
//
//   offset  size  field
//        0     4  magic "KOCL"
//        4     2  format version (u16, currently 1)
//        6     4  feature dimension m (u32)
//       10     4  class count K (u32)
//       14     8  record count N (u64)
//       22     1  label kind (u8: 0 = class id, 1 = real)
//       23        N records of m f32 features followed by the label
//                 (u32 for class ids, f64 for reals)

enum class LabelKind : std::uint8_t { ClassId = 0, Real = 1 };

struct FeatureFileHeader {
  static constexpr std::size_t kSize = 23;
  static constexpr std::uint16_t kVersion = 1;

  std::uint16_t version = kVersion;
  std::uint32_t dim = 0;
  std::uint32_t num_classes = 0;
  std::uint64_t num_records = 0;
  LabelKind label_kind = LabelKind::ClassId;

  std::size_t record_size() const {
    return 4u * dim + (label_kind == LabelKind::ClassId ? 4u : 8u);
  }
};

enum class FeatureFileErrc {
  Io,
  TruncatedHeader,
  BadMagic,
  UnsupportedVersion,
  BadLabelKind,
  Truncated,
  TrailingBytes,
  DimensionMismatch,
  BadLabel,
};

const char* to_string(FeatureFileErrc code);

class FeatureFileError : public DataError {
 public:
  FeatureFileError(FeatureFileErrc code, const std::string& what,
                   std::optional<std::uint64_t> record = std::nullopt)
      : DataError(what), code_(code), record_(record) {}

  FeatureFileErrc code() const { return code_; }
  /// Index of the offending record, when the error concerns one.
  std::optional<std::uint64_t> record() const { return record_; }

 private:
  FeatureFileErrc code_;
  std::optional<std::uint64_t> record_;
};

/// Sequential reader. Holds one record (or one requested chunk) at a time.
class FeatureFileReader {
 public:
  explicit FeatureFileReader(const std::filesystem::path& path);

  /// Reads from an arbitrary stream. When `byte_length` is given the total
  /// size is checked against the header up front.
  explicit FeatureFileReader(std::unique_ptr<std::istream> in,
                             std::optional<std::uint64_t> byte_length = std::nullopt);

  const FeatureFileHeader& header() const { return header_; }

  /// Throws DimensionMismatch unless the file matches a filter of the given
  /// shape. k = 0 skips the class-count check.
  void expect_dims(Eigen::Index m, Eigen::Index k) const;

  /// Next record as raw f32 features. Returns false after the last record.
  bool next_raw(std::vector<float>& features, double& label);

  /// Next record promoted to double.
  bool next(Vector& features, double& label);

  /// Up to `b` further records, or nullopt at end of file.
  std::optional<StreamChunk> next_chunk(std::size_t b);

  std::uint64_t records_read() const { return read_; }

 private:
  void read_header(std::optional<std::uint64_t> byte_length);

  std::unique_ptr<std::istream> in_;
  FeatureFileHeader header_;
  std::uint64_t read_ = 0;
  std::size_t chunks_ = 0;
  std::vector<char> buf_;
};

/// Streaming writer. The record count in the header is patched on finish().
class FeatureFileWriter {
 public:
  FeatureFileWriter(const std::filesystem::path& path, std::uint32_t dim,
                    std::uint32_t num_classes, LabelKind kind);
  ~FeatureFileWriter();

  FeatureFileWriter(const FeatureFileWriter&) = delete;
  FeatureFileWriter& operator=(const FeatureFileWriter&) = delete;

  void write(std::span<const float> features, double label);
  /// Narrows each feature to f32.
  void write(const VectorRef& features, double label);
  void finish();

  std::uint64_t records_written() const { return count_; }

 private:
  std::ofstream out_;
  FeatureFileHeader header_;
  std::uint64_t count_ = 0;
  bool finished_ = false;
  std::vector<char> buf_;
};

void write_feature_file(const std::filesystem::path& path, const Dataset& data, LabelKind kind);

/// Loads the whole file. For large files iterate with FeatureFileReader.
Dataset read_feature_file(const std::filesystem::path& path);

/// Small text datasets: header line "m,K", then rows "f_1,...,f_m,label".
Dataset read_csv_dataset(const std::filesystem::path& path);

}  // namespace kocl
