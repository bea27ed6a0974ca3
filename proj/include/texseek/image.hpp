#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace texseek {

/// 8-bit grayscale raster, row-major. Always at least 1x1.
class GrayImage {
 public:
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

using Histogram = std::array<std::size_t, 256>;

/// Decodes Netpbm P2/P3/P5/P6. Color input is reduced to BT.601 luma and any
/// maxval other than 255 is rescaled. Throws ParseError on malformed input.
GrayImage read_pnm(std::span<const std::uint8_t> bytes);
GrayImage read_pnm_file(const std::filesystem::path& path);

/// Binary P5, maxval 255.
std::vector<std::uint8_t> write_pgm(const GrayImage& img);
void write_pgm_file(const GrayImage& img, const std::filesystem::path& path);

/// Lossless counterclockwise rotation by 90 degrees per quarter turn.
GrayImage rotate_quarter(const GrayImage& img, int quarter_turns);

Histogram histogram(const GrayImage& img);

}  // namespace texseek
