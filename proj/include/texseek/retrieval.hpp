#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "texseek/config.hpp"
#include "texseek/gabor.hpp"
#include "texseek/image.hpp"
#include "texseek/stego.hpp"

namespace texseek {

/// A rotation-normalized feature record. Feature values are held at float32
/// precision so that the index and an embedded payload agree exactly.
struct IndexRecord {
  std::string id;
  FeatureVector features;
  Attributes attributes;

  bool operator==(const IndexRecord&) const = default;
};

struct IndexHeader {
  int scales = 5;
  int orientations = 6;
  std::uint64_t config_hash = 0;

  bool operator==(const IndexHeader&) const = default;
};

/// Immutable collection of records sorted by id.
class Index {
 public:
  /// Sorts by id. Throws Error on duplicate ids, ids containing tab or
  /// newline, records whose geometry differs from the header, or records
  /// that are not rotation-normalized.
  Index(IndexHeader header, std::vector<IndexRecord> records);

  const IndexHeader& header() const { return header_; }
  const std::vector<IndexRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const IndexRecord* find(std::string_view id) const;

  bool operator==(const Index&) const = default;

 private:
  IndexHeader header_;
  std::vector<IndexRecord> records_;
};

struct RankedResult {
  std::string id;
  double distance = 0.0;

  bool operator==(const RankedResult&) const = default;
};

/// Ascending distance, then id. The ranking order used everywhere.
bool ranked_before(const RankedResult& a, const RankedResult& b);

/// Sum over (scale, orientation) cells of the Euclidean distance between the
/// (mean, stddev) pairs. Throws Error on a dimensionality mismatch.
double distance(const FeatureVector& q, const FeatureVector& t);

struct RankOptions {
  /// Divide every component by its standard deviation across the index.
  bool standardize = false;
};

/// Top-k records by ascending distance; k larger than the index returns all.
/// q must be rotation-normalized.
std::vector<RankedResult> rank(const FeatureVector& q, const Index& idx, std::size_t k,
                               const RankOptions& options = {});

/// Rounds every component to float32 precision.
FeatureVector to_float_precision(FeatureVector f);

/// features -> normalize_rotation -> float32.
FeatureVector index_features(const GrayImage& img, const GaborBank& bank);

std::string save_index(const Index& idx);
Index load_index(std::string_view text);
void save_index_file(const Index& idx, const std::filesystem::path& path);
Index load_index_file(const std::filesystem::path& path);

struct BuildOptions {
  bool embed_attributes = false;
  /// Where `<stem>.stego.pgm` files go, mirroring the corpus layout. Defaults
  /// to the corpus directory itself.
  std::optional<std::filesystem::path> stego_dir;
};

struct BuildReport {
  Index index;
  std::vector<std::string> warnings;     // skipped files, with reasons
  std::vector<std::string> unembedded;   // ids indexed without a stego image
};

/// Image files (.pgm/.ppm/.pnm, excluding *.stego.pgm) under dir, as sorted
/// '/'-separated relative paths.
std::vector<std::string> list_corpus(const std::filesystem::path& dir);

/// Throws Error if the corpus has no readable images.
BuildReport build_index(const std::filesystem::path& corpus_dir, const PipelineConfig& cfg,
                        const BuildOptions& options = {});

/// Attributes hidden in a stego image built for this record.
Attributes payload_attributes(const IndexRecord& record);

std::vector<RankedResult> query_from_image(const GrayImage& img, const Index& idx, std::size_t k,
                                           const GaborBank& bank, const RankOptions& options = {});

/// Ranks with the feature vector decoded from the image's payload; never
/// recomputes features. Throws PayloadError "no embedded attributes" when the
/// image carries no valid payload.
std::vector<RankedResult> query_from_stego(const GrayImage& stego, const Index& idx, std::size_t k,
                                           const StegoOptions& stego_options, const RankOptions& options = {});

/// Decodes whatever payload the image carries.
StegoPayload read_embedded(const GrayImage& stego, int scales, int orientations, const StegoOptions& options);

StegoOptions stego_options(const PipelineConfig& cfg);

std::string format_results(const std::vector<RankedResult>& results);

}  // namespace texseek
