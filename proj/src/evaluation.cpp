#include "texseek/evaluation.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "texseek/error.hpp"

namespace texseek {

std::vector<PRPoint> precision_recall(const std::vector<RankedResult>& results, const std::set<std::string>& relevant) {
  if (relevant.empty()) throw Error("precision/recall needs a non-empty relevant set");
  std::vector<PRPoint> points;
  points.reserve(results.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (relevant.contains(results[i].id)) ++hits;
    const auto k = i + 1;
    points.push_back({k, static_cast<double>(hits) / static_cast<double>(k),
                      static_cast<double>(hits) / static_cast<double>(relevant.size())});
  }
  return points;
}

BitString random_bits(std::size_t count, std::uint64_t seed) {
  std::minstd_rand gen(static_cast<std::minstd_rand::result_type>(seed % 2147483646u + 1));
  BitString bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = ((gen() >> 30) & 1u) != 0;
  return bits;
}

std::vector<SweepRow> psnr_sweep(const GrayImage& cover, std::span<const std::size_t> payload_sizes,
                                 const StegoOptions& options, std::uint64_t seed) {
  const auto baseline = reencode(cover, options.table);
  std::vector<SweepRow> rows;
  for (const auto size : payload_sizes) {
    SweepRow row{size, 0.0, 0.0, {}};
    try {
      const auto stego = embed(cover, random_bits(size, seed), options);
      row.psnr_vs_baseline = psnr(baseline, stego);
      row.psnr_vs_cover = psnr(cover, stego);
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

TextureClass texture_class(int c) {
  // Frequencies are distinct per class: rotation-normalized features cannot
  // tell two classes apart by orientation alone.
  static constexpr TextureClass kClasses[kMaxClasses] = {
      {0.0, 0.06}, {45.0, 0.11}, {90.0, 0.19}, {135.0, 0.32},
      {30.0, 0.08}, {75.0, 0.14}, {120.0, 0.24}, {165.0, 0.40},
  };
  if (c < 0 || c >= kMaxClasses) throw Error("texture class out of range");
  return kClasses[c];
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

GrayImage grating(int width, int height, double orientation_deg, double frequency, double phase,
                  std::mt19937_64& rng) {
  constexpr double kAmplitude = 90.0;
  constexpr double kNoise = 0.1 * kAmplitude;
  const double a = orientation_deg * std::numbers::pi / 180.0;
  const double ca = std::cos(a);
  const double sa = std::sin(a);
  GrayImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double wave = std::sin(2.0 * std::numbers::pi * frequency * (x * ca + y * sa) + phase);
      const double noise = (2.0 * uniform01(rng) - 1.0) * kNoise;
      const double v = std::round(128.0 + kAmplitude * wave + noise);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return img;
}

std::vector<CorpusEntry> gen_corpus(const std::filesystem::path& out_dir, int classes, int per_class, int size,
                                    std::uint64_t seed) {
  if (classes < 1 || classes > kMaxClasses) throw Error("classes must be in 1..8");
  if (per_class < 1) throw Error("per-class count must be positive");
  if (size < 64) throw Error("image size must be at least 64");
  std::filesystem::create_directories(out_dir);

  std::mt19937_64 rng(seed);
  std::vector<CorpusEntry> entries;
  char name[64];
  for (int c = 0; c < classes; ++c) {
    const auto cls = texture_class(c);
    for (int i = 0; i < per_class; ++i) {
      const double jitter = (2.0 * uniform01(rng) - 1.0) * 5.0;
      const double phase = uniform01(rng) * 2.0 * std::numbers::pi;
      const auto img = grating(size, size, cls.orientation_deg + jitter, cls.frequency, phase, rng);
      std::snprintf(name, sizeof name, "class%d_%02d.pgm", c, i);
      write_pgm_file(img, out_dir / name);
      entries.push_back({name, c});
    }
  }
  std::ofstream manifest(out_dir / "manifest.tsv", std::ios::binary);
  manifest << format_manifest(entries);
  if (!manifest) throw Error("cannot write manifest in " + out_dir.string());
  return entries;
}

std::string format_manifest(const std::vector<CorpusEntry>& entries) {
  std::string out;
  for (const auto& e : entries) out += e.id + "\t" + std::to_string(e.label) + "\n";
  return out;
}

std::vector<CorpusEntry> parse_manifest(std::string_view text) {
  std::vector<CorpusEntry> entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw Error("manifest line " + std::to_string(line_no) + ": expected id<TAB>class");
    CorpusEntry e{std::string(line.substr(0, tab)), 0};
    const auto label = line.substr(tab + 1);
    const auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), e.label);
    if (ec != std::errc() || ptr != label.data() + label.size()) {
      throw Error("manifest line " + std::to_string(line_no) + ": bad class label");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<CorpusEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::vector<PRPoint> evaluate_index(const Index& idx, const std::vector<CorpusEntry>& manifest) {
  std::map<std::string, int> label_of;
  for (const auto& e : manifest) label_of[e.id] = e.label;
  for (const auto& r : idx.records()) {
    if (!label_of.contains(r.id)) throw Error("index record '" + r.id + "' is missing from the manifest");
  }
  if (idx.size() < 2) throw Error("evaluation needs at least two indexed images");

  const std::size_t depth = idx.size() - 1;
  std::vector<PRPoint> mean(depth);
  std::size_t queries = 0;
  for (const auto& q : idx.records()) {
    std::set<std::string> relevant;
    for (const auto& r : idx.records()) {
      if (r.id != q.id && label_of[r.id] == label_of[q.id]) relevant.insert(r.id);
    }
    if (relevant.empty()) continue;
    auto results = rank(q.features, idx, idx.size());
    std::erase_if(results, [&](const RankedResult& r) { return r.id == q.id; });
    const auto points = precision_recall(results, relevant);
    for (std::size_t i = 0; i < depth; ++i) {
      mean[i].precision += points[i].precision;
      mean[i].recall += points[i].recall;
    }
    ++queries;
  }
  if (queries == 0) throw Error("no image has another relevant image in the index");
  for (std::size_t i = 0; i < depth; ++i) {
    mean[i].k = i + 1;
    mean[i].precision /= static_cast<double>(queries);
    mean[i].recall /= static_cast<double>(queries);
  }
  return mean;
}

std::string format_pr(const std::vector<PRPoint>& points) {
  std::string out = "k\tprecision\trecall\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\n", p.k, p.precision, p.recall);
    out += buf;
  }
  return out;
}

std::string format_sweep(const std::vector<SweepRow>& rows) {
  std::string out = "payload_bits\tpsnr_vs_baseline\tpsnr_vs_cover\tstatus\n";
  char buf[128];
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      out += std::to_string(r.payload_bits) + "\t\t\terror: " + r.error + "\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%zu\t%.4f\t%.4f\tok\n", r.payload_bits, r.psnr_vs_baseline, r.psnr_vs_cover);
    out += buf;
  }
  return out;
}

std::string format_histograms(const std::vector<Histogram>& histograms) {
  std::string out = "value";
  for (std::size_t i = 0; i < histograms.size(); ++i) out += "\tcount" + std::to_string(i + 1);
  out += '\n';
  for (int v = 0; v < 256; ++v) {
    out += std::to_string(v);
    for (const auto& h : histograms) out += "\t" + std::to_string(h[v]);
    out += '\n';
  }
  return out;
}

}  // namespace texseek
