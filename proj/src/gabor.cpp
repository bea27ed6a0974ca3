#include "texseek/gabor.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "texseek/error.hpp"

namespace texseek {

void BankConfig::validate() const {
  if (scales < 2) throw std::invalid_argument("bank needs at least 2 scales");
  if (orientations < 2) throw std::invalid_argument("bank needs at least 2 orientations");
  if (!(freq_low > 0.0 && freq_low < freq_high && freq_high < 0.5)) {
    throw std::invalid_argument("bank frequencies must satisfy 0 < freq_low < freq_high < 0.5");
  }
  if (kernel_radius < 1) throw std::invalid_argument("kernel radius must be positive");
}

double BankConfig::scale_factor() const {
  return std::pow(freq_high / freq_low, 1.0 / (scales - 1));
}

double BankConfig::center_frequency(int scale) const {
  return freq_high * std::pow(scale_factor(), scale - (scales - 1));
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<GaborKernel> build_bank(const BankConfig& cfg) {
  cfg.validate();
  constexpr double pi = std::numbers::pi;
  const double ln2x2 = 2.0 * std::numbers::ln2;
  const double a = cfg.scale_factor();
  const double w = cfg.freq_high;

  // Half-peak magnitude responses of neighbouring filters touch in both the
  // radial and the angular direction.
  const double sigma_u = (a - 1.0) * w / ((a + 1.0) * std::sqrt(ln2x2));
  const double sigma_v = std::tan(pi / (2.0 * cfg.orientations)) * (w - ln2x2 * sigma_u * sigma_u / w) /
                         std::sqrt(ln2x2 - ln2x2 * ln2x2 * sigma_u * sigma_u / (w * w));
  const double sigma_x = 1.0 / (2.0 * pi * sigma_u);
  const double sigma_y = 1.0 / (2.0 * pi * sigma_v);

  const int r = cfg.kernel_radius;
  const int side = 2 * r + 1;
  std::vector<GaborKernel> bank;
  bank.reserve(static_cast<std::size_t>(cfg.scales) * cfg.orientations);
  for (int m = 0; m < cfg.scales; ++m) {
    const double shrink = std::pow(a, -(cfg.scales - 1 - m));
    for (int n = 0; n < cfg.orientations; ++n) {
      const double theta = n * pi / cfg.orientations;
      const double ct = std::cos(theta);
      const double st = std::sin(theta);
      GaborKernel k{m, n, r, std::vector<std::complex<double>>(static_cast<std::size_t>(side) * side)};
      double real_sum = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const double xr = shrink * (dx * ct + dy * st);
          const double yr = shrink * (-dx * st + dy * ct);
          const double envelope = shrink / (2.0 * pi * sigma_x * sigma_y) *
                                  std::exp(-0.5 * (xr * xr / (sigma_x * sigma_x) + yr * yr / (sigma_y * sigma_y)));
          const double phase = 2.0 * pi * w * xr;
          const std::complex<double> tap(envelope * std::cos(phase), envelope * std::sin(phase));
          k.taps[static_cast<std::size_t>(dy + r) * side + (dx + r)] = tap;
          real_sum += tap.real();
        }
      }
      const double real_mean = real_sum / (side * side);
      for (auto& t : k.taps) t -= real_mean;
      bank.push_back(std::move(k));
    }
  }
  return bank;
}

namespace {

// FFTW's planner is not re-entrant; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

ComplexBuffer allocate(std::size_t n) {
  ComplexBuffer buf(fftw_alloc_complex(n));
  if (!buf) throw std::bad_alloc();
  return buf;
}

// In-place 2-D transform of a fixed size.
class FftPlan {
 public:
  FftPlan(int rows, int cols, int sign) {
    auto scratch = allocate(static_cast<std::size_t>(rows) * cols);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_2d(rows, cols, scratch.get(), scratch.get(), sign, FFTW_ESTIMATE);
    if (plan_ == nullptr) throw std::runtime_error("fftw planning failed");
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }

  void operator()(fftw_complex* data) const { fftw_execute_dft(plan_, data, data); }

 private:
  fftw_plan plan_ = nullptr;
};

ComplexBuffer kernel_spectrum(const GaborKernel& k, int pw, int ph, const FftPlan& forward) {
  auto buf = allocate(static_cast<std::size_t>(pw) * ph);
  std::fill_n(&buf[0][0], 2 * static_cast<std::size_t>(pw) * ph, 0.0);
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    const int row = (dy + ph) % ph;
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      const int col = (dx + pw) % pw;
      const auto t = k.at(dx, dy);
      buf[static_cast<std::size_t>(row) * pw + col][0] = t.real();
      buf[static_cast<std::size_t>(row) * pw + col][1] = t.imag();
    }
  }
  forward(buf.get());
  return buf;
}

ComplexBuffer padded_image_spectrum(const GrayImage& img, int r, const FftPlan& forward) {
  const int pw = img.width() + 2 * r;
  const int ph = img.height() + 2 * r;
  auto buf = allocate(static_cast<std::size_t>(pw) * ph);
  for (int j = 0; j < ph; ++j) {
    const int y = reflect_index(j - r, img.height());
    for (int i = 0; i < pw; ++i) {
      auto& cell = buf[static_cast<std::size_t>(j) * pw + i];
      cell[0] = img.at(reflect_index(i - r, img.width()), y);
      cell[1] = 0.0;
    }
  }
  forward(buf.get());
  return buf;
}

// Multiplies the spectra, inverts, and crops the valid window into out.
void magnitude_from_spectra(const fftw_complex* image, const fftw_complex* kernel, int pw, int ph, int r,
                            const FftPlan& backward, fftw_complex* work, ResponseMagnitude& out) {
  const std::size_t n = static_cast<std::size_t>(pw) * ph;
  for (std::size_t i = 0; i < n; ++i) {
    const double re = image[i][0] * kernel[i][0] - image[i][1] * kernel[i][1];
    const double im = image[i][0] * kernel[i][1] + image[i][1] * kernel[i][0];
    work[i][0] = re;
    work[i][1] = im;
  }
  backward(work);
  const double scale = 1.0 / static_cast<double>(n);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const auto& c = work[static_cast<std::size_t>(y + r) * pw + (x + r)];
      out.values[static_cast<std::size_t>(y) * out.width + x] = std::hypot(c[0], c[1]) * scale;
    }
  }
}

}  // namespace

ResponseMagnitude filter_magnitude(const GrayImage& img, const GaborKernel& kernel) {
  const int r = kernel.radius;
  const int pw = img.width() + 2 * r;
  const int ph = img.height() + 2 * r;
  const FftPlan forward(ph, pw, FFTW_FORWARD);
  const FftPlan backward(ph, pw, FFTW_BACKWARD);
  const auto image = padded_image_spectrum(img, r, forward);
  const auto spectrum = kernel_spectrum(kernel, pw, ph, forward);
  auto work = allocate(static_cast<std::size_t>(pw) * ph);
  ResponseMagnitude out{img.width(), img.height(),
                        std::vector<double>(static_cast<std::size_t>(img.width()) * img.height())};
  magnitude_from_spectra(image.get(), spectrum.get(), pw, ph, r, backward, work.get(), out);
  return out;
}

EnergyMap energy_map(const std::vector<ResponseMagnitude>& mags, int scales, int orientations) {
  if (mags.size() != static_cast<std::size_t>(scales) * orientations) {
    throw std::invalid_argument("energy_map: expected one response per filter");
  }
  EnergyMap e{scales, orientations, std::vector<double>(mags.size(), 0.0)};
  for (std::size_t i = 0; i < mags.size(); ++i) {
    if (mags[i].width != mags[0].width || mags[i].height != mags[0].height) {
      throw std::invalid_argument("energy_map: responses differ in geometry");
    }
    double sum = 0.0;
    for (const double v : mags[i].values) sum += v;
    e.values[i] = sum;
  }
  return e;
}

struct GaborBank::Spectra {
  int width;
  int height;
  FftPlan forward;
  FftPlan backward;
  std::vector<ComplexBuffer> kernels;

  Spectra(int pw, int ph) : width(pw), height(ph), forward(ph, pw, FFTW_FORWARD), backward(ph, pw, FFTW_BACKWARD) {}
};

GaborBank::GaborBank(const BankConfig& cfg) : cfg_(cfg), kernels_(build_bank(cfg)) {}

std::shared_ptr<const GaborBank::Spectra> GaborBank::spectra_for(int pw, int ph) const {
  std::lock_guard lock(mutex_);
  auto& slot = cache_[{pw, ph}];
  if (!slot) {
    auto s = std::make_shared<Spectra>(pw, ph);
    s->kernels.reserve(kernels_.size());
    for (const auto& k : kernels_) s->kernels.push_back(kernel_spectrum(k, pw, ph, s->forward));
    slot = std::move(s);
  }
  return slot;
}

std::vector<ResponseMagnitude> GaborBank::responses(const GrayImage& img) const {
  const int r = cfg_.kernel_radius;
  const int pw = img.width() + 2 * r;
  const int ph = img.height() + 2 * r;
  const auto spectra = spectra_for(pw, ph);
  const auto image = padded_image_spectrum(img, r, spectra->forward);
  auto work = allocate(static_cast<std::size_t>(pw) * ph);
  std::vector<ResponseMagnitude> out;
  out.reserve(kernels_.size());
  for (const auto& ks : spectra->kernels) {
    ResponseMagnitude mag{img.width(), img.height(),
                          std::vector<double>(static_cast<std::size_t>(img.width()) * img.height())};
    magnitude_from_spectra(image.get(), ks.get(), pw, ph, r, spectra->backward, work.get(), mag);
    out.push_back(std::move(mag));
  }
  return out;
}

FeatureVector GaborBank::features(const GrayImage& img) const {
  const int support = 2 * cfg_.kernel_radius + 1;
  if (img.width() < support || img.height() < support) {
    throw Error("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                " is smaller than the " + std::to_string(support) + "x" + std::to_string(support) +
                " filter support");
  }
  const int r = cfg_.kernel_radius;
  const int pw = img.width() + 2 * r;
  const int ph = img.height() + 2 * r;
  const auto spectra = spectra_for(pw, ph);
  const auto image = padded_image_spectrum(img, r, spectra->forward);
  auto work = allocate(static_cast<std::size_t>(pw) * ph);

  const double area = static_cast<double>(img.width()) * img.height();
  FeatureVector f{cfg_.scales, cfg_.orientations, std::vector<double>(cfg_.feature_length()), 0};
  std::vector<double> orientation_energy(cfg_.orientations, 0.0);
  ResponseMagnitude mag{img.width(), img.height(),
                        std::vector<double>(static_cast<std::size_t>(img.width()) * img.height())};
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    magnitude_from_spectra(image.get(), spectra->kernels[i].get(), pw, ph, r, spectra->backward, work.get(), mag);
    double energy = 0.0;
    for (const double v : mag.values) energy += v;
    const double mean = energy / area;
    double sq = 0.0;
    for (const double v : mag.values) sq += (v - mean) * (v - mean);
    f.values[2 * i] = mean;
    f.values[2 * i + 1] = std::sqrt(sq / area);
    orientation_energy[kernels_[i].orientation] += energy;
  }
  for (int n = 1; n < cfg_.orientations; ++n) {
    if (orientation_energy[n] > orientation_energy[f.dominant_orientation]) f.dominant_orientation = n;
  }
  return f;
}

FeatureVector feature_vector(const GrayImage& img, const BankConfig& cfg) {
  return GaborBank(cfg).features(img);
}

FeatureVector normalize_rotation(const FeatureVector& f) {
  FeatureVector out = f;
  const int shift = f.dominant_orientation;
  for (int m = 0; m < f.scales; ++m) {
    for (int n = 0; n < f.orientations; ++n) {
      const int src = (n + shift) % f.orientations;
      out.values[out.pair_index(m, n)] = f.mean(m, src);
      out.values[out.pair_index(m, n) + 1] = f.stddev(m, src);
    }
  }
  out.dominant_orientation = 0;
  return out;
}

}  // namespace texseek
