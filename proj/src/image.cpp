#include "texseek/image.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "texseek/error.hpp"

namespace texseek {

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("image dimensions must be at least 1x1");
  }
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("image dimensions must be at least 1x1");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("pixel count does not match dimensions");
  }
}

namespace {

class PnmReader {
 public:
  PnmReader(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t offset() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Reads an unsigned decimal token; used for header fields and ASCII rasters.
  unsigned long number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw ParseError(std::string("unexpected end of data reading ") + what, pos_);
    if (!std::isdigit(bytes_[pos_])) throw ParseError(std::string("expected ") + what, pos_);
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 0xFFFFFFFFul) throw ParseError(std::string(what) + " out of range", pos_);
      ++pos_;
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from a binary raster.
  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ParseError("expected whitespace after header", pos_);
    }
    ++pos_;
  }

  unsigned binary_sample(bool wide) {
    const std::size_t need = wide ? 2 : 1;
    if (pos_ + need > bytes_.size()) throw ParseError("truncated raster", pos_);
    unsigned v = bytes_[pos_++];
    if (wide) v = (v << 8) | bytes_[pos_++];
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// round-half-up of v * 255 / maxval in integer arithmetic
std::uint8_t rescale(unsigned long v, unsigned long maxval) {
  return static_cast<std::uint8_t>((2 * v * 255 + maxval) / (2 * maxval));
}

// BT.601 luma, rescaled to 255, round-half-up; weights are in thousandths.
std::uint8_t luma(unsigned long r, unsigned long g, unsigned long b, unsigned long maxval) {
  const unsigned long long weighted = 299ull * r + 587ull * g + 114ull * b;
  const unsigned long long den = 2000ull * maxval;
  return static_cast<std::uint8_t>((2 * weighted * 255 + 1000ull * maxval) / den);
}

}  // namespace

GrayImage read_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw ParseError("missing Netpbm magic", 0);
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw ParseError(std::string("unsupported Netpbm magic P") + kind, 1);
  }
  const bool color = kind == '3' || kind == '6';
  const bool ascii = kind == '2' || kind == '3';

  PnmReader in(bytes, 2);
  const auto header_at = in.offset();
  const auto width = in.number("width");
  const auto height = in.number("height");
  if (width == 0 || height == 0 || width > 1u << 20 || height > 1u << 20) {
    throw ParseError("invalid image dimensions", header_at);
  }
  in.skip_space_and_comments();
  const auto maxval_at = in.offset();
  const auto maxval = in.number("maxval");
  if (maxval == 0 || maxval > 65535) throw ParseError("maxval must be in 1..65535", maxval_at);
  if (!ascii) in.single_whitespace();

  const bool wide = maxval > 255;
  const auto sample = [&]() -> unsigned long {
    const auto at = in.offset();
    const auto v = ascii ? in.number("sample") : in.binary_sample(wide);
    if (v > maxval) throw ParseError("sample exceeds maxval", at);
    return v;
  };

  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (!ascii) {
    const std::size_t need = count * (color ? 3 : 1) * (wide ? 2 : 1);
    if (bytes.size() - in.offset() < need) throw ParseError("truncated raster", bytes.size());
  } else if (bytes.size() - in.offset() < count) {
    throw ParseError("truncated raster", bytes.size());
  }
  std::vector<std::uint8_t> pixels(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (color) {
      const auto r = sample();
      const auto g = sample();
      const auto b = sample();
      pixels[i] = luma(r, g, b, maxval);
    } else {
      pixels[i] = rescale(sample(), maxval);
    }
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

GrayImage read_pnm_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                        std::istreambuf_iterator<char>());
  return read_pnm(bytes);
}

std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
  const auto header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

void write_pgm_file(const GrayImage& img, const std::filesystem::path& path) {
  const auto bytes = write_pgm(img);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw Error("short write to " + path.string());
}

GrayImage rotate_quarter(const GrayImage& img, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  const int w = img.width();
  const int h = img.height();
  if (turns == 0) return img;
  if (turns == 2) {
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(w - 1 - x, h - 1 - y) = img.at(x, y);
    return out;
  }
  GrayImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Counterclockwise: the right-hand column becomes the top row.
      if (turns == 1) {
        out.at(y, w - 1 - x) = img.at(x, y);
      } else {
        out.at(h - 1 - y, x) = img.at(x, y);
      }
    }
  }
  return out;
}

Histogram histogram(const GrayImage& img) {
  Histogram counts{};
  for (const auto p : img.pixels()) ++counts[p];
  return counts;
}

}  // namespace texseek
