#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "texseek/dct.hpp"
#include "texseek/gabor.hpp"
#include "texseek/image.hpp"

namespace texseek {

/// Ordered key/value text pairs carried with an image.
using Attributes = std::vector<std::pair<std::string, std::string>>;

struct StegoPayload {
  FeatureVector features;
  Attributes attributes;

  bool operator==(const StegoPayload&) const = default;
};

/// One bit per element; frames expand MSB-first per byte.
using BitString = std::vector<bool>;

struct StegoOptions {
  QuantTable table;
  bool parity_dc = false;
  int max_passes = 8;
};

inline constexpr std::uint8_t kPayloadVersion = 0x01;
inline constexpr std::size_t kMaxFrameBytes = 65535;

/*
 * Frame layout, all integers big-endian:
 *
 *   "TSG1" | version u8 | dominant orientation u8 | 2*M*N x float32 |
 *   attr_len u16 | attr bytes ("k=v" joined by ";") | CRC-32 of all preceding bytes
 */
std::vector<std::uint8_t> encode_frame(const StegoPayload& payload);
BitString encode_payload(const StegoPayload& payload);

/// Parses a frame from the front of bits; trailing bits are ignored so the
/// whole capacity of an image can be passed in. Feature values come back as
/// the float32 values that were stored.
StegoPayload decode_payload(const BitString& bits, int scales = 5, int orientations = 6);

BitString bytes_to_bits(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> bits_to_bytes(const BitString& bits);

/// One bit per 8x8 block, padding blocks included.
std::size_t capacity(const GrayImage& img);

/// Moves every nonzero coefficient of the parity set that has the wrong parity
/// one step away from zero. Zeros are never touched, so signs are preserved.
void force_parity(QuantizedBlock& block, bool bit, bool include_dc);

/// Majority of odd over even nonzero coefficients; ties and empty sets read 0.
bool read_parity_bit(const QuantizedBlock& block, bool include_dc);

/// One quantize/dequantize round trip of every block with no parity change.
GrayImage reencode(const GrayImage& img, const QuantTable& table);

/// Hides bits[i] in block i (raster order). Each carrier block is read back
/// from its rounded, clamped pixels and re-embedded up to options.max_passes
/// times; a block that still loses its bit is contracted toward its mean.
/// Throws CapacityError if bits exceed capacity, Error if a block cannot hold its bit.
GrayImage embed(const GrayImage& cover, const BitString& bits, const StegoOptions& options = {});

BitString extract(const GrayImage& stego, std::size_t bit_count, const StegoOptions& options = {});

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(255^2 / MSE); kInfinitePsnr for identical images.
double psnr(const GrayImage& a, const GrayImage& b);

}  // namespace texseek
