#pragma once

// Slow reference implementations written straight from the definitions,
// sharing no code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "texseek/dct.hpp"
#include "texseek/gabor.hpp"
#include "texseek/image.hpp"
#include "texseek/retrieval.hpp"

namespace texseek::oracle {

inline DctBlock dct_double_sum(const PixelBlock& b) {
  const double pi = std::numbers::pi;
  DctBlock out{};
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      const double cv = v == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      double s = 0.0;
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          s += (b[y * 8 + x] - 128.0) * std::cos((2 * x + 1) * u * pi / 16.0) * std::cos((2 * y + 1) * v * pi / 16.0);
      out[v * 8 + u] = cu * cv * s;
    }
  }
  return out;
}

inline int mirror(int i, int n) {
  // ... b a | a b c | c b ...
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

/// |sum_k img(x - dx, y - dy) * g(dx, dy)| evaluated pixel by pixel.
inline std::vector<double> convolve_direct(const GrayImage& img, const GaborKernel& k) {
  const int w = img.width(), h = img.height(), r = k.radius;
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::complex<double> acc = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          acc += static_cast<double>(img.at(mirror(x - dx, w), mirror(y - dy, h))) * k.at(dx, dy);
      out[static_cast<std::size_t>(y) * w + x] = std::abs(acc);
    }
  }
  return out;
}

inline double distance_direct(const FeatureVector& a, const FeatureVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i + 1 < a.values.size(); i += 2) {
    const double dm = a.values[i] - b.values[i];
    const double ds = a.values[i + 1] - b.values[i + 1];
    d += std::sqrt(dm * dm + ds * ds);
  }
  return d;
}

/// Every record scored and the whole list sorted by (distance, id).
inline std::vector<RankedResult> rank_exhaustive(const FeatureVector& q, const std::vector<IndexRecord>& records,
                                                 std::size_t k) {
  std::vector<RankedResult> all;
  for (const auto& r : records) all.push_back({r.id, distance_direct(q, r.features)});
  std::stable_sort(all.begin(), all.end(), [](const RankedResult& a, const RankedResult& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

/// precision and recall at k by counting the intersection of two sets.
inline std::pair<double, double> pr_by_sets(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                                            std::size_t k) {
  std::set<std::string> top(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::string> hit;
  std::set_intersection(top.begin(), top.end(), relevant.begin(), relevant.end(), std::back_inserter(hit));
  return {static_cast<double>(hit.size()) / k, static_cast<double>(hit.size()) / relevant.size()};
}

}  // namespace texseek::oracle
