#include <doctest.h>

#include <cmath>
#include <cstring>

#include "support.hpp"
#include "texseek/dct.hpp"
#include "texseek/error.hpp"
#include "texseek/evaluation.hpp"
#include "texseek/stego.hpp"

using namespace texseek;

namespace {

StegoPayload random_payload(std::mt19937_64& rng) {
  StegoPayload p;
  p.features = test::random_features(rng);
  p.features.dominant_orientation = static_cast<int>(rng() % 6);
  // Values already representable as float32 survive the frame unchanged.
  for (auto& v : p.features.values) v = static_cast<float>(v);
  const int n = static_cast<int>(rng() % 4);
  for (int i = 0; i < n; ++i) p.attributes.emplace_back("k" + std::to_string(i), "v\xc3\xa9" + std::to_string(rng() % 1000));
  return p;
}

QuantizedBlock block_of(std::initializer_list<int> leading) {
  QuantizedBlock b{};
  int i = 0;
  for (int v : leading) b[i++] = v;
  return b;
}

PayloadError::Kind decode_error(const BitString& bits) {
  try {
    decode_payload(bits);
  } catch (const PayloadError& e) {
    return e.kind();
  }
  FAIL("decode_payload accepted the input");
  return PayloadError::Kind::NotStego;
}

GrayImage textured(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return grating(size, size, 30.0, 0.11, 0.3, rng);
}

}  // namespace

TEST_CASE("frame layout") {
  StegoPayload zero;
  zero.features.values.assign(60, 0.0);
  const auto frame = encode_frame(zero);
  CHECK(frame.size() == 252);
  CHECK(encode_payload(zero).size() == 2016);
  CHECK(std::memcmp(frame.data(), "TSG1", 4) == 0);
  CHECK(frame[4] == kPayloadVersion);

  StegoPayload rock = zero;
  rock.attributes = {{"id", "rock"}};
  const auto f2 = encode_frame(rock);
  CHECK(f2[246] == 0);
  CHECK(f2[247] == 7);
  CHECK(std::string(f2.begin() + 248, f2.begin() + 255) == "id=rock");
  CHECK(f2.size() == 252 + 7);
}

TEST_CASE("decode inverts encode") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 100; ++t) {
    const auto p = random_payload(rng);
    CHECK(decode_payload(encode_payload(p)) == p);
  }
  // Trailing bits past the frame are ignored.
  const auto p = random_payload(rng);
  auto bits = encode_payload(p);
  bits.insert(bits.end(), 333, true);
  CHECK(decode_payload(bits) == p);
}

TEST_CASE("decode reports damage") {
  CHECK(decode_error(BitString(4096, false)) == PayloadError::Kind::NotStego);
  CHECK(decode_error(BitString(8, false)) == PayloadError::Kind::ShortRead);

  std::mt19937_64 rng(32);
  StegoPayload p = random_payload(rng);
  p.attributes = {{"id", "x"}};
  const auto bits = encode_payload(p);
  auto truncated = bits;
  truncated.resize(bits.size() - 1);
  CHECK(decode_error(truncated) == PayloadError::Kind::ShortRead);

  // Every single-bit flip after the magic must be caught. Flips inside the
  // attribute length can stretch the frame past the end, which reads as short.
  for (std::size_t i = 32; i < bits.size(); ++i) {
    auto flipped = bits;
    flipped[i] = !flipped[i];
    const auto kind = decode_error(flipped);
    const bool in_attr_len = i >= 8 * 246 && i < 8 * 248;
    if (in_attr_len) {
      CHECK((kind == PayloadError::Kind::Corrupted || kind == PayloadError::Kind::ShortRead));
    } else {
      CHECK(kind == PayloadError::Kind::Corrupted);
    }
  }
  for (std::size_t i = 0; i < 32; ++i) {
    auto flipped = bits;
    flipped[i] = !flipped[i];
    CHECK(decode_error(flipped) == PayloadError::Kind::NotStego);
  }
}

TEST_CASE("attributes that cannot be framed are refused") {
  StegoPayload p;
  p.features.values.assign(60, 0.0);
  p.attributes = {{"a;b", "x"}};
  CHECK_THROWS_AS(encode_payload(p), Error);
  p.attributes = {{"", "x"}};
  CHECK_THROWS_AS(encode_payload(p), Error);
  p.attributes = {{"a", "x;y"}};
  CHECK_THROWS_AS(encode_payload(p), Error);
  p.attributes = {{"a", "\xff"}};
  CHECK_THROWS_AS(encode_payload(p), Error);
  p.attributes = {{"a", std::string(70000, 'x')}};
  CHECK_THROWS_AS(encode_payload(p), CapacityError);
  p.attributes = {{"eq", "a=b"}};
  CHECK(decode_payload(encode_payload(p)) == p);
}

TEST_CASE("bytes and bits are MSB first") {
  const auto bits = bytes_to_bits({0x80, 0x01});
  CHECK(bits.size() == 16);
  CHECK(bits[0]);
  CHECK(bits[15]);
  CHECK_FALSE(bits[1]);
  CHECK(bits_to_bytes(bits) == std::vector<std::uint8_t>{0x80, 0x01});
}

TEST_CASE("capacity counts padded blocks") {
  CHECK(capacity(GrayImage(512, 512)) == 4096);
  CHECK(capacity(GrayImage(8, 8)) == 1);
  CHECK(capacity(GrayImage(9, 8)) == 2);
}

TEST_CASE("force_parity") {
  auto b = block_of({12, -5, 3, 0});
  force_parity(b, true, true);
  CHECK(b == block_of({13, -5, 3, 0}));

  b = block_of({12, -5, 3, 0});
  force_parity(b, false, true);
  CHECK(b == block_of({12, -6, 4, 0}));

  // With DC excluded the first coefficient is left alone.
  b = block_of({12, -5, 3, 0});
  force_parity(b, true, false);
  CHECK(b == block_of({12, -5, 3, 0}));
}

TEST_CASE("force_parity never flips signs or zeroes coefficients") {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> v(-40, 40);
  for (int t = 0; t < 2000; ++t) {
    QuantizedBlock b{};
    for (auto& x : b) x = v(rng);
    const auto before = b;
    const bool bit = rng() & 1;
    force_parity(b, bit, t % 2 == 0);
    for (int i = 0; i < kBlockArea; ++i) {
      if (before[i] == 0) {
        CHECK(b[i] == 0);
      } else {
        CHECK(b[i] != 0);
        CHECK((b[i] > 0) == (before[i] > 0));
        CHECK(std::abs(b[i] - before[i]) <= 1);
      }
    }
    CHECK(read_parity_bit(b, t % 2 == 0) == bit);
  }
}

TEST_CASE("read_parity_bit takes the majority") {
  CHECK(read_parity_bit(block_of({13, -5, 3, 0}), true));
  CHECK_FALSE(read_parity_bit(block_of({12, -6, 4, 0}), true));
  CHECK_FALSE(read_parity_bit(block_of({0, 1, 2}), true));
  CHECK_FALSE(read_parity_bit(QuantizedBlock{}, true));
  CHECK(read_parity_bit(block_of({2, 1, 3}), false));
  CHECK_FALSE(read_parity_bit(block_of({1, 2, 4}), false));
}

TEST_CASE("empty payload equals the baseline re-encode") {
  const auto cover = textured(64, 34);
  const QuantTable table;
  CHECK(embed(cover, {}) == reencode(cover, table));
  CHECK(psnr(embed(cover, {}), reencode(cover, table)) == kInfinitePsnr);
}

TEST_CASE("embed rejects oversized payloads") {
  const auto cover = textured(64, 35);
  CHECK_THROWS_AS(embed(cover, BitString(65, true)), CapacityError);
  CHECK_THROWS_AS(extract(cover, 65), CapacityError);
}

TEST_CASE("featureless blocks cannot carry a one") {
  try {
    embed(GrayImage(16, 16, 128), BitString{false, true});
    FAIL("expected an unembeddable block");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "unembeddable block at index 1");
  }
}

TEST_CASE("extract recovers embedded bits") {
  std::mt19937_64 rng(36);
  for (int t = 0; t < 24; ++t) {
    std::uniform_int_distribution<int> side(128, 200);
    const int w = side(rng), h = side(rng);
    const auto cover = t % 2 == 0 ? test::random_image(w, h, rng) : grating(w, h, 25.0 * t, 0.06 + 0.03 * (t % 10), 1.0, rng);
    const auto bits = random_bits(capacity(cover) / 2, rng());
    StegoOptions options;
    options.parity_dc = t % 3 == 0;
    const auto stego = embed(cover, bits, options);
    CHECK(extract(stego, bits.size(), options) == bits);
  }
}

TEST_CASE("payload survives the image round trip") {
  std::mt19937_64 rng(37);
  const auto cover = textured(384, 38);
  const auto p = random_payload(rng);
  const auto stego = embed(cover, encode_payload(p));
  CHECK(decode_payload(extract(stego, capacity(stego))) == p);
}

TEST_CASE("psnr") {
  std::mt19937_64 rng(39);
  const auto a = test::random_image(20, 10, rng);
  CHECK(psnr(a, a) == kInfinitePsnr);
  GrayImage lo(16, 16, 10), hi(16, 16, 11);
  CHECK(psnr(lo, hi) == doctest::Approx(48.1308).epsilon(1e-3 / 48.1308));
  CHECK(psnr(lo, hi) == doctest::Approx(20.0 * std::log10(255.0)));
  const auto b = test::random_image(20, 10, rng);
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK_THROWS_AS(psnr(a, GrayImage(10, 20)), Error);
}
