#include "texseek/stego.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <string_view>

#include "texseek/error.hpp"

namespace texseek {

namespace {

constexpr std::string_view kMagic = "TSG1";

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (int k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::uint32_t kMinForLength[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLength[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

std::string join_attributes(const Attributes& attrs) {
  std::string out;
  for (const auto& [key, value] : attrs) {
    if (key.empty() || key.find_first_of("=;") != std::string::npos || value.find(';') != std::string::npos) {
      throw Error("attribute '" + key + "' cannot be framed: keys must be non-empty without '=' or ';', values without ';'");
    }
    if (!out.empty()) out += ';';
    out += key;
    out += '=';
    out += value;
  }
  if (!valid_utf8(out)) throw Error("attributes are not valid UTF-8");
  return out;
}

Attributes split_attributes(std::string_view text) {
  Attributes attrs;
  if (text.empty()) return attrs;
  std::size_t start = 0;
  while (true) {
    const auto end = text.find(';', start);
    const auto item = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw PayloadError(PayloadError::Kind::Corrupted, "corrupted payload: malformed attribute");
    }
    attrs.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return attrs;
}

bool in_parity_set(int index, bool include_dc) { return include_dc || index != 0; }

}  // namespace

std::vector<std::uint8_t> encode_frame(const StegoPayload& payload) {
  const auto& f = payload.features;
  if (f.values.size() != static_cast<std::size_t>(2 * f.scales * f.orientations)) {
    throw Error("feature vector length does not match its bank geometry");
  }
  if (f.dominant_orientation < 0 || f.dominant_orientation > 255) {
    throw Error("dominant orientation does not fit a byte");
  }
  const auto attrs = join_attributes(payload.attributes);
  const std::size_t total = kMagic.size() + 2 + 4 * f.values.size() + 2 + attrs.size() + 4;
  if (total > kMaxFrameBytes) {
    throw CapacityError("payload frame of " + std::to_string(total) + " bytes exceeds " +
                        std::to_string(kMaxFrameBytes));
  }

  std::vector<std::uint8_t> out;
  out.reserve(total);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(kPayloadVersion);
  out.push_back(static_cast<std::uint8_t>(f.dominant_orientation));
  for (const double v : f.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  put_u16(out, static_cast<std::uint16_t>(attrs.size()));
  out.insert(out.end(), attrs.begin(), attrs.end());
  put_u32(out, crc32_of(out.data(), out.size()));
  return out;
}

BitString encode_payload(const StegoPayload& payload) { return bytes_to_bits(encode_frame(payload)); }

BitString bytes_to_bits(const std::vector<std::uint8_t>& bytes) {
  BitString bits;
  bits.reserve(bytes.size() * 8);
  for (const auto b : bytes) {
    for (int k = 7; k >= 0; --k) bits.push_back(((b >> k) & 1) != 0);
  }
  return bits;
}

std::vector<std::uint8_t> bits_to_bytes(const BitString& bits) {
  std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bytes.size() * 8; ++i) {
    if (bits[i]) bytes[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return bytes;
}

StegoPayload decode_payload(const BitString& bits, int scales, int orientations) {
  const auto bytes = bits_to_bytes(bits);
  const auto short_read = [] { return PayloadError(PayloadError::Kind::ShortRead, "short read"); };

  if (bytes.size() < kMagic.size()) throw short_read();
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw PayloadError(PayloadError::Kind::NotStego, "not a stego payload");
  }
  const std::size_t feature_count = 2 * static_cast<std::size_t>(scales) * orientations;
  const std::size_t attr_len_at = kMagic.size() + 2 + 4 * feature_count;
  if (bytes.size() < attr_len_at + 2) throw short_read();
  const std::size_t attr_len = (std::size_t{bytes[attr_len_at]} << 8) | bytes[attr_len_at + 1];
  const std::size_t body = attr_len_at + 2 + attr_len;
  if (bytes.size() < body + 4) throw short_read();
  if (crc32_of(bytes.data(), body) != get_u32(bytes.data() + body)) {
    throw PayloadError(PayloadError::Kind::Corrupted, "corrupted payload");
  }
  if (bytes[kMagic.size()] != kPayloadVersion) {
    throw PayloadError(PayloadError::Kind::NotStego,
                       "not a stego payload: unsupported version " + std::to_string(bytes[kMagic.size()]));
  }

  StegoPayload p;
  p.features.scales = scales;
  p.features.orientations = orientations;
  p.features.dominant_orientation = bytes[kMagic.size() + 1];
  if (p.features.dominant_orientation >= orientations) {
    throw PayloadError(PayloadError::Kind::Corrupted, "corrupted payload: dominant orientation out of range");
  }
  p.features.values.resize(feature_count);
  for (std::size_t i = 0; i < feature_count; ++i) {
    p.features.values[i] = std::bit_cast<float>(get_u32(bytes.data() + kMagic.size() + 2 + 4 * i));
  }
  const std::string_view attrs(reinterpret_cast<const char*>(bytes.data()) + attr_len_at + 2, attr_len);
  if (!valid_utf8(attrs)) throw PayloadError(PayloadError::Kind::Corrupted, "corrupted payload: invalid UTF-8");
  p.attributes = split_attributes(attrs);
  return p;
}

std::size_t capacity(const GrayImage& img) {
  const auto bx = static_cast<std::size_t>((img.width() + kBlockSize - 1) / kBlockSize);
  const auto by = static_cast<std::size_t>((img.height() + kBlockSize - 1) / kBlockSize);
  return bx * by;
}

void force_parity(QuantizedBlock& block, bool bit, bool include_dc) {
  for (int i = 0; i < kBlockArea; ++i) {
    if (!in_parity_set(i, include_dc)) continue;
    int& v = block[i];
    if (v == 0) continue;
    const bool odd = v % 2 != 0;
    if (odd != bit) v += v > 0 ? 1 : -1;
  }
}

bool read_parity_bit(const QuantizedBlock& block, bool include_dc) {
  int odd = 0;
  int even = 0;
  for (int i = 0; i < kBlockArea; ++i) {
    if (!in_parity_set(i, include_dc) || block[i] == 0) continue;
    (block[i] % 2 != 0 ? odd : even) += 1;
  }
  return odd > even;
}

GrayImage reencode(const GrayImage& img, const QuantTable& table) {
  auto grid = partition(img);
  for (auto& block : grid.blocks) block = inverse_dct(dequantize(quantize(forward_dct(block), table), table));
  return reassemble(grid);
}

namespace {

// Cropping to the image and padding again replaces the pixels outside the
// valid window with copies of its last row and column; do the same here so a
// block can be checked exactly as it will be read back.
void repad(PixelBlock& block, int valid_w, int valid_h) {
  for (int y = 0; y < kBlockSize; ++y) {
    const int sy = std::min(y, valid_h - 1);
    for (int x = 0; x < kBlockSize; ++x) {
      const int sx = std::min(x, valid_w - 1);
      block[y * kBlockSize + x] = block[sy * kBlockSize + sx];
    }
  }
}

PixelBlock contract(const PixelBlock& block, double factor, int valid_w, int valid_h) {
  double mean = 0.0;
  for (int y = 0; y < valid_h; ++y)
    for (int x = 0; x < valid_w; ++x) mean += block[y * kBlockSize + x];
  mean /= valid_w * valid_h;
  PixelBlock out;
  for (int i = 0; i < kBlockArea; ++i) {
    out[i] = static_cast<std::uint8_t>(std::clamp(std::round(mean + factor * (block[i] - mean)), 0.0, 255.0));
  }
  return out;
}

// Rounding and clamping in the pixel domain can move a quantized coefficient
// and lose the bit, so every attempt is read back from its own pixels. Blocks
// that keep losing it are pulled toward their mean in 5% steps, which keeps
// the reconstruction away from the clamping limits.
bool embed_block(PixelBlock& block, bool bit, int valid_w, int valid_h, const StegoOptions& options) {
  constexpr int kContractionSteps = 10;
  const PixelBlock source = block;
  for (int step = 0; step <= kContractionSteps; ++step) {
    PixelBlock candidate = step == 0 ? source : contract(source, 1.0 - 0.05 * step, valid_w, valid_h);
    for (int pass = 0; pass < std::max(1, options.max_passes); ++pass) {
      auto q = quantize(forward_dct(candidate), options.table);
      force_parity(q, bit, options.parity_dc);
      // No nonzero coefficient in the parity set: nothing can carry a 1.
      if (read_parity_bit(q, options.parity_dc) != bit) break;
      candidate = inverse_dct(dequantize(q, options.table));
      repad(candidate, valid_w, valid_h);
      if (read_parity_bit(quantize(forward_dct(candidate), options.table), options.parity_dc) == bit) {
        block = candidate;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

GrayImage embed(const GrayImage& cover, const BitString& bits, const StegoOptions& options) {
  const auto cap = capacity(cover);
  if (bits.size() > cap) {
    throw CapacityError("payload of " + std::to_string(bits.size()) + " bits exceeds capacity of " +
                        std::to_string(cap) + " bits");
  }

  auto grid = partition(cover);
  for (std::size_t i = 0; i < grid.blocks.size(); ++i) {
    auto& block = grid.blocks[i];
    if (i >= bits.size()) {
      block = inverse_dct(dequantize(quantize(forward_dct(block), options.table), options.table));
      continue;
    }
    const int bx = static_cast<int>(i % grid.blocks_x) * kBlockSize;
    const int by = static_cast<int>(i / grid.blocks_x) * kBlockSize;
    const int valid_w = std::min(kBlockSize, grid.width - bx);
    const int valid_h = std::min(kBlockSize, grid.height - by);
    if (!embed_block(block, bits[i], valid_w, valid_h, options)) {
      throw Error("unembeddable block at index " + std::to_string(i));
    }
  }
  auto stego = reassemble(grid);

  const auto check = partition(stego);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (read_parity_bit(quantize(forward_dct(check.blocks[i]), options.table), options.parity_dc) != bits[i]) {
      throw Error("unembeddable block at index " + std::to_string(i));
    }
  }
  return stego;
}

BitString extract(const GrayImage& stego, std::size_t bit_count, const StegoOptions& options) {
  const auto cap = capacity(stego);
  if (bit_count > cap) {
    throw CapacityError("cannot read " + std::to_string(bit_count) + " bits from an image holding " +
                        std::to_string(cap));
  }
  const auto grid = partition(stego);
  BitString bits(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i) {
    bits[i] = read_parity_bit(quantize(forward_dct(grid.blocks[i]), options.table), options.parity_dc);
  }
  return bits;
}

double psnr(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw Error("psnr: image dimensions differ");
  double sse = 0.0;
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    sse += d * d;
  }
  if (sse == 0.0) return kInfinitePsnr;
  const double mse = sse / static_cast<double>(pa.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace texseek
