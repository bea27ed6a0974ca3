#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "texseek/image.hpp"

namespace texseek {

/**
 * Parameters of the self-similar Gabor filter bank.
 *
 * Scale m runs from the coarsest (center frequency freq_low) at m = 0 to the
 * finest (freq_high) at m = scales - 1. Orientation n has angle n * pi / orientations.
 */
struct BankConfig {
  int scales = 5;
  int orientations = 6;
  double freq_low = 0.05;   // cycles per pixel
  double freq_high = 0.4;   // cycles per pixel
  int kernel_radius = 15;   // taps span (2r+1) x (2r+1)

  /// Throws std::invalid_argument unless scales, orientations >= 2 and
  /// 0 < freq_low < freq_high < 0.5 and kernel_radius >= 1.
  void validate() const;

  /// Ratio between adjacent scale center frequencies.
  double scale_factor() const;
  double center_frequency(int scale) const;
  int feature_length() const { return 2 * scales * orientations; }

  bool operator==(const BankConfig&) const = default;
};

struct GaborKernel {
  int scale = 0;
  int orientation = 0;
  int radius = 0;
  // Row-major over dy in [-r, r], then dx in [-r, r].
  std::vector<std::complex<double>> taps;

  std::complex<double> at(int dx, int dy) const {
    const int side = 2 * radius + 1;
    return taps[static_cast<std::size_t>(dy + radius) * side + (dx + radius)];
  }
};

/// Per-pixel modulus of one filter response; same geometry as the source image.
struct ResponseMagnitude {
  int width = 0;
  int height = 0;
  std::vector<double> values;
};

/// E(m, n): summed response magnitude per scale and orientation.
struct EnergyMap {
  int scales = 0;
  int orientations = 0;
  std::vector<double> values;  // index m * orientations + n

  double at(int m, int n) const { return values[static_cast<std::size_t>(m) * orientations + n]; }
};

/**
 * Texture feature vector: interleaved (mean, stddev) pairs of the response
 * magnitudes, scale-major with orientation varying fastest.
 */
struct FeatureVector {
  int scales = 5;
  int orientations = 6;
  std::vector<double> values;
  int dominant_orientation = 0;

  std::size_t pair_index(int m, int n) const {
    return 2 * (static_cast<std::size_t>(m) * orientations + n);
  }
  double mean(int m, int n) const { return values[pair_index(m, n)]; }
  double stddev(int m, int n) const { return values[pair_index(m, n) + 1]; }

  bool operator==(const FeatureVector&) const = default;
};

/// Kernels in scale-major order (index m * orientations + n).
std::vector<GaborKernel> build_bank(const BankConfig& cfg);

/// Convolution with symmetric-reflection boundary, per-pixel modulus.
ResponseMagnitude filter_magnitude(const GrayImage& img, const GaborKernel& kernel);

/// mags must be in build_bank order and share one geometry.
EnergyMap energy_map(const std::vector<ResponseMagnitude>& mags, int scales, int orientations);

/**
 * A built filter bank that caches kernel spectra per padded image size, so a
 * corpus of equally sized images pays for the kernel transforms once.
 * Thread-safe.
 */
class GaborBank {
 public:
  explicit GaborBank(const BankConfig& cfg);

  const BankConfig& config() const { return cfg_; }
  const std::vector<GaborKernel>& kernels() const { return kernels_; }

  /// All M*N magnitude responses, in kernel order.
  std::vector<ResponseMagnitude> responses(const GrayImage& img) const;

  /// Throws Error if the image is smaller than the kernel support.
  FeatureVector features(const GrayImage& img) const;

 private:
  struct Spectra;
  std::shared_ptr<const Spectra> spectra_for(int padded_width, int padded_height) const;

  BankConfig cfg_;
  std::vector<GaborKernel> kernels_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, int>, std::shared_ptr<const Spectra>> cache_;
};

FeatureVector feature_vector(const GrayImage& img, const BankConfig& cfg);

/// Circularly shifts the orientation pairs of every scale so the dominant
/// orientation comes first. The result has dominant_orientation == 0.
FeatureVector normalize_rotation(const FeatureVector& f);

/// Reflect-with-edge-repeat index: ... b a | a b c ... c | c b ...
int reflect_index(int i, int n);

}  // namespace texseek
