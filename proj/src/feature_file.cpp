#include "kocl/feature_file.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>
#include <string>

namespace kocl {

namespace {

constexpr std::array<char, 4> kMagic{'K', 'O', 'C', 'L'};

template <typename U>
void put_le(char* dst, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    dst[i] = static_cast<char>(static_cast<unsigned char>(value >> (8 * i)));
  }
}

template <typename U>
U get_le(const char* src) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(static_cast<unsigned char>(src[i])) << (8 * i);
  }
  return value;
}

}  // namespace

const char* to_string(FeatureFileErrc code) {
  switch (code) {
    case FeatureFileErrc::Io: return "io";
    case FeatureFileErrc::TruncatedHeader: return "truncated_header";
    case FeatureFileErrc::BadMagic: return "bad_magic";
    case FeatureFileErrc::UnsupportedVersion: return "unsupported_version";
    case FeatureFileErrc::BadLabelKind: return "bad_label_kind";
    case FeatureFileErrc::Truncated: return "truncated";
    case FeatureFileErrc::TrailingBytes: return "trailing_bytes";
    case FeatureFileErrc::DimensionMismatch: return "dimension_mismatch";
    case FeatureFileErrc::BadLabel: return "bad_label";
  }
  return "unknown";
}

FeatureFileReader::FeatureFileReader(const std::filesystem::path& path) {
  auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*in) {
    throw FeatureFileError(FeatureFileErrc::Io, "cannot open feature file " + path.string());
  }
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  in_ = std::move(in);
  read_header(ec ? std::nullopt : std::optional<std::uint64_t>(size));
}

FeatureFileReader::FeatureFileReader(std::unique_ptr<std::istream> in,
                                     std::optional<std::uint64_t> byte_length)
    : in_(std::move(in)) {
  if (!in_) throw FeatureFileError(FeatureFileErrc::Io, "null input stream");
  read_header(byte_length);
}

void FeatureFileReader::read_header(std::optional<std::uint64_t> byte_length) {
  std::array<char, FeatureFileHeader::kSize> h{};
  in_->read(h.data(), static_cast<std::streamsize>(h.size()));
  if (in_->gcount() != static_cast<std::streamsize>(h.size())) {
    throw FeatureFileError(FeatureFileErrc::TruncatedHeader, "feature file header is truncated");
  }
  if (std::memcmp(h.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FeatureFileError(FeatureFileErrc::BadMagic, "feature file has bad magic (expected KOCL)");
  }
  header_.version = get_le<std::uint16_t>(h.data() + 4);
  if (header_.version != FeatureFileHeader::kVersion) {
    throw FeatureFileError(FeatureFileErrc::UnsupportedVersion,
                           "unsupported feature file version " + std::to_string(header_.version));
  }
  header_.dim = get_le<std::uint32_t>(h.data() + 6);
  header_.num_classes = get_le<std::uint32_t>(h.data() + 10);
  header_.num_records = get_le<std::uint64_t>(h.data() + 14);
  const auto kind = static_cast<std::uint8_t>(h[22]);
  if (kind > 1) {
    throw FeatureFileError(FeatureFileErrc::BadLabelKind,
                           "unknown label kind " + std::to_string(kind));
  }
  header_.label_kind = static_cast<LabelKind>(kind);
  if (header_.dim == 0) {
    throw FeatureFileError(FeatureFileErrc::DimensionMismatch, "feature dimension is zero");
  }
  buf_.resize(header_.record_size());

  if (byte_length) {
    const std::uint64_t rec = header_.record_size();
    const std::uint64_t body = *byte_length - FeatureFileHeader::kSize;
    const std::uint64_t complete = body / rec;
    if (complete < header_.num_records) {
      throw FeatureFileError(FeatureFileErrc::Truncated,
                             "feature file truncated at record " + std::to_string(complete) +
                                 " of " + std::to_string(header_.num_records),
                             complete);
    }
    if (body != header_.num_records * rec) {
      throw FeatureFileError(FeatureFileErrc::TrailingBytes,
                             "feature file has " +
                                 std::to_string(body - header_.num_records * rec) +
                                 " bytes past the last record");
    }
  }
}

void FeatureFileReader::expect_dims(Eigen::Index m, Eigen::Index k) const {
  if (static_cast<Eigen::Index>(header_.dim) != m ||
      (k > 0 && header_.label_kind == LabelKind::ClassId &&
       static_cast<Eigen::Index>(header_.num_classes) != k)) {
    throw FeatureFileError(FeatureFileErrc::DimensionMismatch,
                           "feature file has m=" + std::to_string(header_.dim) +
                               ", K=" + std::to_string(header_.num_classes) +
                               "; filter expects m=" + std::to_string(m) +
                               ", K=" + std::to_string(k));
  }
}

bool FeatureFileReader::next_raw(std::vector<float>& features, double& label) {
  if (read_ >= header_.num_records) return false;
  in_->read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  if (in_->gcount() != static_cast<std::streamsize>(buf_.size())) {
    throw FeatureFileError(FeatureFileErrc::Truncated,
                           "feature file truncated in record " + std::to_string(read_), read_);
  }
  features.resize(header_.dim);
  for (std::uint32_t j = 0; j < header_.dim; ++j) {
    features[j] = std::bit_cast<float>(get_le<std::uint32_t>(buf_.data() + 4 * j));
  }
  const char* lab = buf_.data() + 4 * header_.dim;
  if (header_.label_kind == LabelKind::ClassId) {
    const auto c = get_le<std::uint32_t>(lab);
    if (header_.num_classes > 0 && c >= header_.num_classes) {
      throw FeatureFileError(FeatureFileErrc::BadLabel,
                             "record " + std::to_string(read_) + " has class " +
                                 std::to_string(c) + " >= K=" +
                                 std::to_string(header_.num_classes),
                             read_);
    }
    label = static_cast<double>(c);
  } else {
    label = std::bit_cast<double>(get_le<std::uint64_t>(lab));
  }
  ++read_;
  return true;
}

bool FeatureFileReader::next(Vector& features, double& label) {
  std::vector<float> raw;
  if (!next_raw(raw, label)) return false;
  features = Eigen::Map<const Eigen::VectorXf>(raw.data(), static_cast<Eigen::Index>(raw.size()))
                 .cast<double>();
  return true;
}

std::optional<StreamChunk> FeatureFileReader::next_chunk(std::size_t b) {
  if (b < 1) throw ConfigError("chunk size must be at least 1");
  if (read_ >= header_.num_records) return std::nullopt;
  const std::uint64_t left = header_.num_records - read_;
  const auto take = static_cast<std::size_t>(std::min<std::uint64_t>(b, left));
  StreamChunk chunk;
  chunk.chunk_index = chunks_++;
  chunk.features.resize(static_cast<Eigen::Index>(take), header_.dim);
  std::vector<float> raw;
  double label = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    chunk.stream_index.push_back(static_cast<std::size_t>(read_));
    next_raw(raw, label);
    for (std::uint32_t j = 0; j < header_.dim; ++j) {
      chunk.features(static_cast<Eigen::Index>(i), j) = raw[j];
    }
    chunk.labels.push_back(label);
  }
  return chunk;
}

FeatureFileWriter::FeatureFileWriter(const std::filesystem::path& path, std::uint32_t dim,
                                     std::uint32_t num_classes, LabelKind kind)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw FeatureFileError(FeatureFileErrc::Io, "cannot create " + path.string());
  if (dim == 0) throw ConfigError("feature dimension must be at least 1");
  header_.dim = dim;
  header_.num_classes = num_classes;
  header_.label_kind = kind;
  std::array<char, FeatureFileHeader::kSize> h{};
  std::memcpy(h.data(), kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(h.data() + 4, header_.version);
  put_le<std::uint32_t>(h.data() + 6, dim);
  put_le<std::uint32_t>(h.data() + 10, num_classes);
  put_le<std::uint64_t>(h.data() + 14, 0);
  h[22] = static_cast<char>(kind);
  out_.write(h.data(), static_cast<std::streamsize>(h.size()));
  buf_.resize(header_.record_size());
}

FeatureFileWriter::~FeatureFileWriter() {
  try {
    finish();
  } catch (...) {
  }
}

void FeatureFileWriter::write(std::span<const float> features, double label) {
  if (finished_) throw FeatureFileError(FeatureFileErrc::Io, "writer already finished");
  if (features.size() != header_.dim) {
    throw FeatureFileError(FeatureFileErrc::DimensionMismatch,
                           "record has " + std::to_string(features.size()) + " features, file has " +
                               std::to_string(header_.dim),
                           count_);
  }
  for (std::size_t j = 0; j < features.size(); ++j) {
    put_le<std::uint32_t>(buf_.data() + 4 * j, std::bit_cast<std::uint32_t>(features[j]));
  }
  char* lab = buf_.data() + 4 * header_.dim;
  if (header_.label_kind == LabelKind::ClassId) {
    if (!(label >= 0.0 && label == std::floor(label) && label < 4294967296.0) ||
        (header_.num_classes > 0 && label >= header_.num_classes)) {
      throw FeatureFileError(FeatureFileErrc::BadLabel,
                             "invalid class label " + std::to_string(label), count_);
    }
    put_le<std::uint32_t>(lab, static_cast<std::uint32_t>(label));
  } else {
    put_le<std::uint64_t>(lab, std::bit_cast<std::uint64_t>(label));
  }
  out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  if (!out_) throw FeatureFileError(FeatureFileErrc::Io, "write failed", count_);
  ++count_;
}

void FeatureFileWriter::write(const VectorRef& features, double label) {
  std::vector<float> narrow(static_cast<std::size_t>(features.size()));
  for (Eigen::Index j = 0; j < features.size(); ++j) {
    narrow[static_cast<std::size_t>(j)] = static_cast<float>(features(j));
  }
  write(std::span<const float>(narrow), label);
}

void FeatureFileWriter::finish() {
  if (finished_) return;
  finished_ = true;
  std::array<char, 8> n{};
  put_le<std::uint64_t>(n.data(), count_);
  out_.seekp(14);
  out_.write(n.data(), static_cast<std::streamsize>(n.size()));
  out_.close();
  if (!out_) throw FeatureFileError(FeatureFileErrc::Io, "failed to finalize feature file");
}

void write_feature_file(const std::filesystem::path& path, const Dataset& data, LabelKind kind) {
  FeatureFileWriter w(path, static_cast<std::uint32_t>(data.features.cols()),
                      static_cast<std::uint32_t>(data.num_classes), kind);
  for (std::size_t i = 0; i < data.size(); ++i) {
    w.write(data.features.row(static_cast<Eigen::Index>(i)).transpose(), data.labels[i]);
  }
  w.finish();
}

Dataset read_feature_file(const std::filesystem::path& path) {
  FeatureFileReader r(path);
  Dataset data;
  data.num_classes =
      r.header().label_kind == LabelKind::ClassId ? static_cast<Eigen::Index>(r.header().num_classes) : 0;
  data.features.resize(static_cast<Eigen::Index>(r.header().num_records), r.header().dim);
  Vector phi;
  double label = 0.0;
  Eigen::Index row = 0;
  while (r.next(phi, label)) {
    data.features.row(row++) = phi.transpose();
    data.labels.push_back(label);
  }
  return data;
}

namespace {

double parse_number(const std::string& field, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw DataError("csv line " + std::to_string(line) + ": cannot parse '" + field + "'");
  }
}

std::vector<std::string> split_fields(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

Dataset read_csv_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open csv file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv file is empty");
  const auto head = split_fields(line);
  if (head.size() != 2) throw DataError("csv header must be 'm,K'");
  const double m = parse_number(head[0], 1);
  const double k = parse_number(head[1], 1);
  if (m < 1 || m != std::floor(m) || k < 0 || k != std::floor(k)) {
    throw DataError("csv header must hold a positive integer m and integer K >= 0");
  }
  const auto dim = static_cast<std::size_t>(m);

  Dataset data;
  data.num_classes = static_cast<Eigen::Index>(k);
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != dim + 1) {
      throw DataError("csv line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim + 1) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < dim; ++j) values.push_back(parse_number(fields[j], line_no));
    const double label = parse_number(fields[dim], line_no);
    if (data.num_classes > 0 &&
        !(label >= 0 && label < static_cast<double>(data.num_classes) && label == std::floor(label))) {
      throw DataError("csv line " + std::to_string(line_no) + ": label outside [0, K)");
    }
    data.labels.push_back(label);
  }
  data.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(data.labels.size()), static_cast<Eigen::Index>(dim));
  return data;
}

}  // namespace kocl
