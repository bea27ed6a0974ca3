#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "support.hpp"
#include "texseek/dct.hpp"
#include "texseek/error.hpp"

using namespace texseek;

namespace {

PixelBlock random_block(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> px(0, 255);
  PixelBlock b{};
  for (auto& p : b) p = static_cast<std::uint8_t>(px(rng));
  return b;
}

}  // namespace

TEST_CASE("forward_dct closed forms") {
  PixelBlock mid{};
  mid.fill(128);
  for (double c : forward_dct(mid)) CHECK(std::abs(c) < 1e-12);

  PixelBlock white{};
  white.fill(255);
  const auto d = forward_dct(white);
  CHECK(d[0] == doctest::Approx(1016.0));
  for (int i = 1; i < kBlockArea; ++i) CHECK(std::abs(d[i]) < 1e-9);
}

TEST_CASE("forward_dct matches the direct double-sum oracle") {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto b = random_block(rng);
    const auto got = forward_dct(b);
    const auto want = oracle::dct_double_sum(b);
    for (int i = 0; i < kBlockArea; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("unquantized round trip stays within one gray level") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 1000; ++t) {
    const auto b = random_block(rng);
    const auto back = inverse_dct(forward_dct(b));
    for (int i = 0; i < kBlockArea; ++i) CHECK(std::abs(int(back[i]) - int(b[i])) <= 1);
  }
}

TEST_CASE("forward_dct preserves energy") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 200; ++t) {
    const auto b = random_block(rng);
    const auto d = forward_dct(b);
    double spatial = 0.0, spectral = 0.0;
    for (int i = 0; i < kBlockArea; ++i) {
      spatial += (b[i] - 128.0) * (b[i] - 128.0);
      spectral += d[i] * d[i];
    }
    CHECK(std::abs(spatial - spectral) <= 1e-6 * std::max(1.0, spatial));
  }
}

TEST_CASE("inverse_dct closed forms and clamping") {
  DctBlock zero{};
  for (auto p : inverse_dct(zero)) CHECK(p == 128);
  DctBlock dc{};
  dc[0] = 1016.0;
  for (auto p : inverse_dct(dc)) CHECK(p == 255);
  dc[0] = 10000.0;
  for (auto p : inverse_dct(dc)) CHECK(p == 255);
  dc[0] = -10000.0;
  for (auto p : inverse_dct(dc)) CHECK(p == 0);
}

TEST_CASE("quantize rounds half away from zero") {
  const QuantTable table;
  CHECK(table[0] == 16);
  DctBlock c{};
  c[0] = 100.0;
  CHECK(quantize(c, table)[0] == 6);
  c[0] = -24.0;
  CHECK(quantize(c, table)[0] == -2);
  DctBlock half{};
  half[0] = 24.0;
  CHECK(quantize(half, table)[0] == 2);
  CHECK(quantize(DctBlock{}, table) == QuantizedBlock{});
}

TEST_CASE("dequantize") {
  const QuantTable table;
  QuantizedBlock q{};
  q[0] = 6;
  CHECK(dequantize(q, table)[0] == 96.0);
  CHECK(dequantize(QuantizedBlock{}, table) == DctBlock{});

  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> v(-200, 200);
  for (int t = 0; t < 200; ++t) {
    QuantizedBlock r{};
    for (auto& x : r) x = v(rng);
    CHECK(quantize(dequantize(r, table), table) == r);
  }
}

TEST_CASE("quantize is odd-symmetric") {
  const QuantTable table;
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-1024.0, 1024.0);
  for (int t = 0; t < 500; ++t) {
    DctBlock c{}, neg{};
    for (int i = 0; i < kBlockArea; ++i) {
      // Exact half steps are the interesting case for the rounding rule.
      c[i] = (t % 2 == 0) ? u(rng) : (std::round(u(rng)) + 0.5) * table[i];
      neg[i] = -c[i];
    }
    const auto a = quantize(c, table);
    const auto b = quantize(neg, table);
    for (int i = 0; i < kBlockArea; ++i) CHECK(a[i] == -b[i]);
  }
}

TEST_CASE("QuantTable validation and parsing") {
  std::array<int, kBlockArea> ones{};
  ones.fill(1);
  CHECK(QuantTable(ones)[63] == 1);
  auto bad = ones;
  bad[5] = 0;
  CHECK_THROWS(QuantTable(bad));

  std::string text;
  for (int i = 0; i < kBlockArea; ++i) text += std::to_string(i + 1) + (i % 8 == 7 ? "\n" : " ");
  const auto parsed = QuantTable::parse(text);
  CHECK(parsed[0] == 1);
  CHECK(parsed[63] == 64);
  CHECK_THROWS(QuantTable::parse("1 2 3"));
  CHECK_THROWS(QuantTable::parse(text + " 65"));
}

TEST_CASE("partition pads by edge replication") {
  std::mt19937_64 rng(16);
  const auto one = test::random_image(8, 8, rng);
  const auto g1 = partition(one);
  REQUIRE(g1.blocks.size() == 1);
  for (int i = 0; i < kBlockArea; ++i) CHECK(g1.blocks[0][i] == one.pixels()[i]);

  const auto two = test::random_image(16, 8, rng);
  const auto g2 = partition(two);
  REQUIRE(g2.blocks.size() == 2);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(g2.blocks[1][y * 8 + x] == two.at(x + 8, y));

  const auto odd = test::random_image(9, 8, rng);
  const auto g3 = partition(odd);
  REQUIRE(g3.blocks.size() == 2);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(g3.blocks[1][y * 8 + x] == odd.at(8, y));
}

TEST_CASE("reassemble inverts partition for every size up to 64") {
  std::mt19937_64 rng(17);
  for (int h = 1; h <= 64; ++h) {
    for (int w = 1; w <= 64; ++w) {
      const auto img = test::random_image(w, h, rng);
      const auto grid = partition(img);
      REQUIRE(grid.blocks.size() == static_cast<std::size_t>(grid.blocks_x * grid.blocks_y));
      REQUIRE(reassemble(grid) == img);
    }
  }
}

TEST_CASE("reassemble rejects inconsistent geometry") {
  auto grid = partition(GrayImage(16, 16, 3));
  grid.blocks.pop_back();
  CHECK_THROWS_AS(reassemble(grid), Error);
  auto grid2 = partition(GrayImage(16, 16, 3));
  grid2.width = 30;
  CHECK_THROWS_AS(reassemble(grid2), Error);
}
