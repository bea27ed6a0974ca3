#include "texseek/dct.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "texseek/error.hpp"

namespace texseek {

namespace {

constexpr std::array<int, kBlockArea> kAnnexKLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

// basis[u][x] = alpha(u) * cos((2x + 1) u pi / 16)
struct DctBasis {
  std::array<std::array<double, kBlockSize>, kBlockSize> c{};

  DctBasis() {
    for (int u = 0; u < kBlockSize; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / kBlockSize) : std::sqrt(2.0 / kBlockSize);
      for (int x = 0; x < kBlockSize; ++x) {
        c[u][x] = alpha * std::cos((2 * x + 1) * u * std::numbers::pi / (2.0 * kBlockSize));
      }
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

}  // namespace

QuantTable::QuantTable() : entries_(kAnnexKLuminance) {}

QuantTable::QuantTable(const std::array<int, kBlockArea>& entries) : entries_(entries) {
  for (const int e : entries_) {
    if (e < 1) throw std::invalid_argument("quantization table entries must be >= 1");
  }
}

QuantTable QuantTable::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::array<int, kBlockArea> entries{};
  for (int i = 0; i < kBlockArea; ++i) {
    long v = 0;
    if (!(in >> v)) throw Error("quantization table: expected 64 integers, got " + std::to_string(i));
    if (v < 1 || v > 65535) throw Error("quantization table: entry " + std::to_string(i) + " out of range");
    entries[i] = static_cast<int>(v);
  }
  std::string extra;
  if (in >> extra) throw Error("quantization table: trailing data '" + extra + "'");
  return QuantTable(entries);
}

BlockGrid partition(const GrayImage& img) {
  BlockGrid grid;
  grid.width = img.width();
  grid.height = img.height();
  grid.blocks_x = (img.width() + kBlockSize - 1) / kBlockSize;
  grid.blocks_y = (img.height() + kBlockSize - 1) / kBlockSize;
  grid.blocks.resize(static_cast<std::size_t>(grid.blocks_x) * grid.blocks_y);
  for (int by = 0; by < grid.blocks_y; ++by) {
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      auto& block = grid.blocks[static_cast<std::size_t>(by) * grid.blocks_x + bx];
      for (int r = 0; r < kBlockSize; ++r) {
        const int y = std::min(by * kBlockSize + r, img.height() - 1);
        for (int c = 0; c < kBlockSize; ++c) {
          const int x = std::min(bx * kBlockSize + c, img.width() - 1);
          block[r * kBlockSize + c] = img.at(x, y);
        }
      }
    }
  }
  return grid;
}

GrayImage reassemble(const BlockGrid& grid) {
  if (grid.width < 1 || grid.height < 1 ||
      grid.blocks_x != (grid.width + kBlockSize - 1) / kBlockSize ||
      grid.blocks_y != (grid.height + kBlockSize - 1) / kBlockSize ||
      grid.blocks.size() != static_cast<std::size_t>(grid.blocks_x) * grid.blocks_y) {
    throw Error("block grid geometry is inconsistent");
  }
  GrayImage img(grid.width, grid.height);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const auto& block = grid.blocks[static_cast<std::size_t>(y / kBlockSize) * grid.blocks_x + x / kBlockSize];
      img.at(x, y) = block[(y % kBlockSize) * kBlockSize + x % kBlockSize];
    }
  }
  return img;
}

DctBlock forward_dct(const PixelBlock& block) {
  const auto& c = basis().c;
  // rows first: tmp[y][u] = sum_x c[u][x] * (p[y][x] - 128)
  std::array<double, kBlockArea> tmp{};
  for (int y = 0; y < kBlockSize; ++y) {
    for (int u = 0; u < kBlockSize; ++u) {
      double s = 0.0;
      for (int x = 0; x < kBlockSize; ++x) s += c[u][x] * (block[y * kBlockSize + x] - 128.0);
      tmp[y * kBlockSize + u] = s;
    }
  }
  DctBlock out{};
  for (int v = 0; v < kBlockSize; ++v) {
    for (int u = 0; u < kBlockSize; ++u) {
      double s = 0.0;
      for (int y = 0; y < kBlockSize; ++y) s += c[v][y] * tmp[y * kBlockSize + u];
      out[v * kBlockSize + u] = s;
    }
  }
  return out;
}

PixelBlock inverse_dct(const DctBlock& coefficients) {
  const auto& c = basis().c;
  std::array<double, kBlockArea> tmp{};
  for (int v = 0; v < kBlockSize; ++v) {
    for (int x = 0; x < kBlockSize; ++x) {
      double s = 0.0;
      for (int u = 0; u < kBlockSize; ++u) s += c[u][x] * coefficients[v * kBlockSize + u];
      tmp[v * kBlockSize + x] = s;
    }
  }
  PixelBlock out{};
  for (int y = 0; y < kBlockSize; ++y) {
    for (int x = 0; x < kBlockSize; ++x) {
      double s = 0.0;
      for (int v = 0; v < kBlockSize; ++v) s += c[v][y] * tmp[v * kBlockSize + x];
      const double level = std::round(s + 128.0);
      out[y * kBlockSize + x] = static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
    }
  }
  return out;
}

QuantizedBlock quantize(const DctBlock& coefficients, const QuantTable& table) {
  QuantizedBlock q{};
  for (int i = 0; i < kBlockArea; ++i) {
    q[i] = static_cast<int>(std::round(coefficients[i] / table[i]));
  }
  return q;
}

DctBlock dequantize(const QuantizedBlock& quantized, const QuantTable& table) {
  DctBlock c{};
  for (int i = 0; i < kBlockArea; ++i) c[i] = static_cast<double>(quantized[i]) * table[i];
  return c;
}

}  // namespace texseek
