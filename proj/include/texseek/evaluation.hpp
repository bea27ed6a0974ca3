#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "texseek/image.hpp"
#include "texseek/retrieval.hpp"
#include "texseek/stego.hpp"

namespace texseek {

struct PRPoint {
  std::size_t k = 0;
  double precision = 0.0;
  double recall = 0.0;
};

/// One point per rank cutoff k = 1..results.size(). Throws Error if relevant is empty.
std::vector<PRPoint> precision_recall(const std::vector<RankedResult>& results, const std::set<std::string>& relevant);

/// Payload bits drawn from std::minstd_rand seeded with (seed % 2147483646) + 1;
/// each draw contributes bit 30 of its value.
BitString random_bits(std::size_t count, std::uint64_t seed);

struct SweepRow {
  std::size_t payload_bits = 0;
  double psnr_vs_baseline = 0.0;  // against the quantize/dequantize re-encode of the cover
  double psnr_vs_cover = 0.0;     // against the raw cover
  std::string error;              // non-empty when the row could not be produced
};

std::vector<SweepRow> psnr_sweep(const GrayImage& cover, std::span<const std::size_t> payload_sizes,
                                 const StegoOptions& options, std::uint64_t seed);

// Synthetic texture corpus --------------------------------------------------

struct TextureClass {
  double orientation_deg = 0.0;
  double frequency = 0.1;  // cycles per pixel
};

inline constexpr int kMaxClasses = 8;

/// The fixed (orientation, frequency) pair of class c in [0, kMaxClasses).
TextureClass texture_class(int c);

/**
 * 128 + 90 sin(2 pi f (x cos a + y sin a) + phase), plus uniform noise of
 * +-10% of the grating amplitude, rounded and clamped.
 */
GrayImage grating(int width, int height, double orientation_deg, double frequency, double phase,
                  std::mt19937_64& rng);

struct CorpusEntry {
  std::string id;
  int label = 0;
};

/// Writes class<c>_<i>.pgm files and manifest.tsv into out_dir. Each instance
/// jitters its orientation within +-5 degrees and draws a random phase.
std::vector<CorpusEntry> gen_corpus(const std::filesystem::path& out_dir, int classes, int per_class, int size,
                                    std::uint64_t seed);

std::string format_manifest(const std::vector<CorpusEntry>& entries);
std::vector<CorpusEntry> parse_manifest(std::string_view text);
std::vector<CorpusEntry> read_manifest(const std::filesystem::path& path);

/// Leave-one-out evaluation: every indexed image queries the rest of the
/// index; relevance is a shared class label. Returns the mean curve over
/// queries for k = 1..size-1.
std::vector<PRPoint> evaluate_index(const Index& idx, const std::vector<CorpusEntry>& manifest);

// TSV output -----------------------------------------------------------------

std::string format_pr(const std::vector<PRPoint>& points);
std::string format_sweep(const std::vector<SweepRow>& rows);
std::string format_histograms(const std::vector<Histogram>& histograms);

}  // namespace texseek
