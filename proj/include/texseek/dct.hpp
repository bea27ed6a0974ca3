#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "texseek/image.hpp"

namespace texseek {

inline constexpr int kBlockSize = 8;
inline constexpr int kBlockArea = kBlockSize * kBlockSize;

// All blocks are row-major; index = row * 8 + column, (0,0) is DC.
using PixelBlock = std::array<std::uint8_t, kBlockArea>;
using DctBlock = std::array<double, kBlockArea>;
using QuantizedBlock = std::array<int, kBlockArea>;

class QuantTable {
 public:
  /// ISO/IEC 10918-1 Annex K luminance table.
  QuantTable();
  explicit QuantTable(const std::array<int, kBlockArea>& entries);

  /// 64 whitespace-separated positive integers, row-major.
  static QuantTable parse(std::string_view text);

  int operator[](int i) const { return entries_[i]; }
  const std::array<int, kBlockArea>& entries() const { return entries_; }

  bool operator==(const QuantTable&) const = default;

 private:
  std::array<int, kBlockArea> entries_;
};

/// An image cut into 8x8 blocks in raster order. The image is padded up to a
/// multiple of 8 by edge replication; width/height remember the original size.
struct BlockGrid {
  std::vector<PixelBlock> blocks;
  int blocks_x = 0;
  int blocks_y = 0;
  int width = 0;
  int height = 0;
};

BlockGrid partition(const GrayImage& img);
GrayImage reassemble(const BlockGrid& grid);

/// Level shift by -128, then orthonormal 2-D DCT-II.
DctBlock forward_dct(const PixelBlock& block);
/// Inverse of forward_dct; rounds half away from zero and clamps to [0,255].
PixelBlock inverse_dct(const DctBlock& coefficients);

QuantizedBlock quantize(const DctBlock& coefficients, const QuantTable& table);
DctBlock dequantize(const QuantizedBlock& quantized, const QuantTable& table);

}  // namespace texseek
