#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "texseek/gabor.hpp"
#include "texseek/image.hpp"

namespace texseek::test {

// Removed with everything inside it on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("texseek-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline GrayImage random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> px(0, 255);
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h);
  for (auto& p : pixels) p = static_cast<std::uint8_t>(px(rng));
  return GrayImage(w, h, std::move(pixels));
}

inline FeatureVector random_features(std::mt19937_64& rng, int scales = 5, int orientations = 6) {
  std::uniform_real_distribution<double> u(0.0, 50.0);
  FeatureVector f;
  f.scales = scales;
  f.orientations = orientations;
  f.values.resize(static_cast<std::size_t>(2 * scales * orientations));
  for (auto& v : f.values) v = u(rng);
  return f;
}

}  // namespace texseek::test
