#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "support.hpp"
#include "texseek/error.hpp"
#include "texseek/evaluation.hpp"
#include "texseek/gabor.hpp"
#include "texseek/retrieval.hpp"

using namespace texseek;

namespace {

GrayImage stripes(int w, int h, double freq, bool horizontal) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double t = horizontal ? y : x;
      img.at(x, y) = static_cast<std::uint8_t>(std::lround(128 + 100 * std::sin(2 * std::numbers::pi * freq * t)));
    }
  return img;
}

FeatureVector labeled_pairs(int dominant) {
  // One scale, six orientations, pair n = (n, 10 + n).
  FeatureVector f;
  f.scales = 1;
  f.orientations = 6;
  for (int n = 0; n < 6; ++n) {
    f.values.push_back(n);
    f.values.push_back(10 + n);
  }
  f.dominant_orientation = dominant;
  return f;
}

}  // namespace

TEST_CASE("bank scale factor and center frequencies") {
  const BankConfig cfg;
  CHECK(cfg.scale_factor() == doctest::Approx(std::pow(8.0, 0.25)));
  CHECK(cfg.scale_factor() == doctest::Approx(1.68179).epsilon(1e-5));
  CHECK(cfg.center_frequency(cfg.scales - 1) == doctest::Approx(0.4));
  CHECK(cfg.center_frequency(0) == doctest::Approx(0.05));
  CHECK(cfg.feature_length() == 60);
  CHECK(build_bank(cfg).size() == 30);
}

TEST_CASE("bank configuration is validated") {
  BankConfig cfg;
  cfg.freq_high = 0.6;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.scales = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.freq_low = 0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("kernels are DC-free") {
  for (const auto& k : build_bank(BankConfig{})) {
    std::complex<double> sum = 0.0;
    for (const auto& t : k.taps) sum += t;
    CHECK(std::abs(sum.real()) < 1e-9);
  }
}

TEST_CASE("reflect_index repeats the edge sample") {
  CHECK(reflect_index(-1, 5) == 0);
  CHECK(reflect_index(-2, 5) == 1);
  CHECK(reflect_index(5, 5) == 4);
  CHECK(reflect_index(6, 5) == 3);
  CHECK(reflect_index(2, 5) == 2);
  for (int n = 1; n < 9; ++n)
    for (int i = -20; i < 30; ++i) CHECK(reflect_index(i, n) == oracle::mirror(i, n));
}

TEST_CASE("filter_magnitude matches direct-sum convolution") {
  BankConfig cfg;
  cfg.kernel_radius = 7;
  const auto bank = build_bank(cfg);

  GrayImage impulse(32, 32, 0);
  impulse.at(13, 17) = 255;
  std::mt19937_64 rng(21);
  const auto noise = test::random_image(23, 19, rng);

  for (const GrayImage* img : std::initializer_list<const GrayImage*>{&impulse, &noise}) {
    for (std::size_t i = 0; i < bank.size(); i += 7) {
      const auto got = filter_magnitude(*img, bank[i]);
      const auto want = oracle::convolve_direct(*img, bank[i]);
      double worst = 0.0;
      for (std::size_t p = 0; p < want.size(); ++p) worst = std::max(worst, std::abs(got.values[p] - want[p]));
      CHECK(worst < 1e-9);
    }
  }
}

TEST_CASE("full-radius kernel matches direct-sum convolution on a 64x64 image") {
  const auto bank = build_bank(BankConfig{});
  std::mt19937_64 rng(22);
  const auto img = test::random_image(64, 64, rng);
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{29}}) {
    const auto got = filter_magnitude(img, bank[i]);
    const auto want = oracle::convolve_direct(img, bank[i]);
    double worst = 0.0;
    for (std::size_t p = 0; p < want.size(); ++p) worst = std::max(worst, std::abs(got.values[p] - want[p]));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("filter response ignores constant offsets and scales with contrast") {
  BankConfig cfg;
  cfg.kernel_radius = 7;
  const GaborBank bank(cfg);
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> px(0, 100);
  GrayImage img(40, 40), shifted(40, 40), doubled(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) {
      const int v = px(rng);
      img.at(x, y) = static_cast<std::uint8_t>(v);
      shifted.at(x, y) = static_cast<std::uint8_t>(v + 50);
      doubled.at(x, y) = static_cast<std::uint8_t>(2 * v);
    }

  const auto a = bank.responses(img);
  const auto b = bank.responses(shifted);
  const auto e1 = energy_map(a, cfg.scales, cfg.orientations);
  const auto e2 = energy_map(bank.responses(doubled), cfg.scales, cfg.orientations);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t p = 0; p < a[k].values.size(); ++p) CHECK(std::abs(a[k].values[p] - b[k].values[p]) < 1e-9);
  for (std::size_t k = 0; k < e1.values.size(); ++k) CHECK(e2.values[k] == doctest::Approx(2 * e1.values[k]));

  const auto zero = bank.responses(GrayImage(40, 40, 0));
  for (const auto& m : zero)
    for (double v : m.values) CHECK(v == 0.0);
}

TEST_CASE("energy_map equals a double-loop sum") {
  BankConfig cfg;
  cfg.kernel_radius = 5;
  std::mt19937_64 rng(24);
  const auto img = test::random_image(30, 20, rng);
  const auto mags = GaborBank(cfg).responses(img);
  const auto e = energy_map(mags, cfg.scales, cfg.orientations);
  for (int m = 0; m < cfg.scales; ++m)
    for (int n = 0; n < cfg.orientations; ++n) {
      const auto& r = mags[static_cast<std::size_t>(m * cfg.orientations + n)];
      double s = 0.0;
      for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) s += r.values[static_cast<std::size_t>(y) * r.width + x];
      CHECK(e.at(m, n) == doctest::Approx(s).epsilon(1e-12));
    }
  CHECK_THROWS(energy_map(mags, 4, 6));
}

TEST_CASE("feature vector layout and simple cases") {
  const GaborBank bank{BankConfig{}};
  const auto zero = bank.features(GrayImage(64, 64, 0));
  CHECK(zero.values.size() == 60);
  CHECK(zero.dominant_orientation == 0);
  for (double v : zero.values) CHECK(v == 0.0);
  CHECK_THROWS_AS(bank.features(GrayImage(30, 64, 0)), Error);

  std::mt19937_64 rng(25);
  const auto f = bank.features(test::random_image(48, 48, rng));
  for (double v : f.values) CHECK(v >= 0.0);
}

TEST_CASE("features are mean and population stddev of each magnitude map") {
  const GaborBank bank{BankConfig{}};
  std::mt19937_64 rng(26);
  const auto img = test::random_image(40, 36, rng);
  const auto mags = bank.responses(img);
  const auto f = bank.features(img);
  for (int m = 0; m < 5; ++m)
    for (int n = 0; n < 6; ++n) {
      const auto& v = mags[static_cast<std::size_t>(m * 6 + n)].values;
      double mu = 0.0;
      for (double x : v) mu += x;
      mu /= v.size();
      double var = 0.0;
      for (double x : v) var += (x - mu) * (x - mu);
      CHECK(f.mean(m, n) == doctest::Approx(mu).epsilon(1e-12));
      CHECK(f.stddev(m, n) == doctest::Approx(std::sqrt(var / v.size())).epsilon(1e-9));
    }
  CHECK(feature_vector(img, BankConfig{}) == f);
}

TEST_CASE("dominant orientation follows the grating normal") {
  const GaborBank bank{BankConfig{}};
  // Horizontal stripes vary along y: the normal points at 90 degrees, bank orientation 3 of 6.
  CHECK(bank.features(stripes(96, 96, 0.2, true)).dominant_orientation == 3);
  CHECK(bank.features(stripes(96, 96, 0.2, false)).dominant_orientation == 0);
}

TEST_CASE("normalize_rotation shifts orientation pairs circularly") {
  // "abcdef" with c dominant becomes "cdefab".
  const auto norm = normalize_rotation(labeled_pairs(2));
  const std::vector<double> want{2, 12, 3, 13, 4, 14, 5, 15, 0, 10, 1, 11};
  CHECK(norm.values == want);
  CHECK(norm.dominant_orientation == 0);
  CHECK(normalize_rotation(labeled_pairs(0)) == labeled_pairs(0));
}

TEST_CASE("normalize_rotation properties") {
  std::mt19937_64 rng(27);
  std::uniform_int_distribution<int> dom(0, 5);
  for (int t = 0; t < 200; ++t) {
    auto f = test::random_features(rng);
    f.dominant_orientation = dom(rng);
    const auto once = normalize_rotation(f);
    CHECK(normalize_rotation(once) == once);
    for (int m = 0; m < 5; ++m) {
      std::vector<std::pair<double, double>> before, after;
      for (int n = 0; n < 6; ++n) {
        before.emplace_back(f.mean(m, n), f.stddev(m, n));
        after.emplace_back(once.mean(m, n), once.stddev(m, n));
      }
      std::sort(before.begin(), before.end());
      std::sort(after.begin(), after.end());
      CHECK(before == after);
      CHECK(once.mean(m, 0) == f.mean(m, f.dominant_orientation));
    }
  }
}

TEST_CASE("quarter-turn rotation lands on the same normalized features") {
  const GaborBank bank{BankConfig{}};
  std::mt19937_64 rng(28);
  const auto cls = texture_class(1);
  const auto img = grating(128, 128, cls.orientation_deg, cls.frequency, 0.7, rng);
  const auto a = normalize_rotation(bank.features(img));
  const auto b = normalize_rotation(bank.features(rotate_quarter(img, 1)));
  const auto raw = bank.features(img);
  const auto rot = bank.features(rotate_quarter(img, 1));
  CHECK((rot.dominant_orientation - raw.dominant_orientation + 6) % 6 == 3);
  const double d = distance(a, b);
  const double base = distance(raw, rot);
  CHECK(d < 0.05 * base);
}
