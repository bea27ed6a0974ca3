#include "texseek/retrieval.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "texseek/error.hpp"
#include "texseek/log.hpp"

namespace texseek {

Index::Index(IndexHeader header, std::vector<IndexRecord> records)
    : header_(header), records_(std::move(records)) {
  const auto dims = static_cast<std::size_t>(2 * header_.scales * header_.orientations);
  for (const auto& r : records_) {
    if (r.id.empty() || r.id.find_first_of("\t\n\r") != std::string::npos) {
      throw Error("invalid record id '" + r.id + "'");
    }
    if (r.features.scales != header_.scales || r.features.orientations != header_.orientations ||
        r.features.values.size() != dims) {
      throw Error("record '" + r.id + "' does not match the index feature geometry");
    }
    if (r.features.dominant_orientation != 0) throw Error("record '" + r.id + "' is not rotation-normalized");
  }
  std::sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  const auto dup = std::adjacent_find(records_.begin(), records_.end(),
                                      [](const auto& a, const auto& b) { return a.id == b.id; });
  if (dup != records_.end()) throw Error("duplicate record id '" + dup->id + "'");
}

const IndexRecord* Index::find(std::string_view id) const {
  const auto it = std::lower_bound(records_.begin(), records_.end(), id,
                                   [](const IndexRecord& r, std::string_view key) { return r.id < key; });
  return it != records_.end() && it->id == id ? &*it : nullptr;
}

bool ranked_before(const RankedResult& a, const RankedResult& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.id < b.id;
}

namespace {

double weighted_distance(const FeatureVector& q, const FeatureVector& t, const std::vector<double>* inv_scale) {
  if (q.values.size() != t.values.size()) {
    throw Error("feature dimensionality mismatch: " + std::to_string(q.values.size()) + " vs " +
                std::to_string(t.values.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < q.values.size(); i += 2) {
    double dm = q.values[i] - t.values[i];
    double ds = q.values[i + 1] - t.values[i + 1];
    if (inv_scale) {
      dm *= (*inv_scale)[i];
      ds *= (*inv_scale)[i + 1];
    }
    total += std::sqrt(dm * dm + ds * ds);
  }
  return total;
}

// 1 / stddev of each component across the index; constant components keep weight 1.
std::vector<double> component_weights(const Index& idx) {
  const auto dims = static_cast<std::size_t>(2 * idx.header().scales * idx.header().orientations);
  std::vector<double> mean(dims, 0.0);
  std::vector<double> weights(dims, 1.0);
  if (idx.size() < 2) return weights;
  for (const auto& r : idx.records())
    for (std::size_t i = 0; i < dims; ++i) mean[i] += r.features.values[i];
  for (auto& m : mean) m /= static_cast<double>(idx.size());
  std::vector<double> var(dims, 0.0);
  for (const auto& r : idx.records()) {
    for (std::size_t i = 0; i < dims; ++i) {
      const double d = r.features.values[i] - mean[i];
      var[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < dims; ++i) {
    const double sd = std::sqrt(var[i] / static_cast<double>(idx.size()));
    if (sd > 0.0) weights[i] = 1.0 / sd;
  }
  return weights;
}

}  // namespace

double distance(const FeatureVector& q, const FeatureVector& t) { return weighted_distance(q, t, nullptr); }

std::vector<RankedResult> rank(const FeatureVector& q, const Index& idx, std::size_t k, const RankOptions& options) {
  if (q.dominant_orientation != 0) throw std::invalid_argument("rank: query must be rotation-normalized");
  std::vector<RankedResult> all;
  if (k == 0) return all;
  std::vector<double> weights;
  if (options.standardize) weights = component_weights(idx);
  all.reserve(idx.size());
  for (const auto& r : idx.records()) {
    all.push_back({r.id, weighted_distance(q, r.features, options.standardize ? &weights : nullptr)});
  }
  const auto keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), ranked_before);
  all.resize(keep);
  return all;
}

FeatureVector to_float_precision(FeatureVector f) {
  for (auto& v : f.values) v = static_cast<float>(v);
  return f;
}

FeatureVector index_features(const GrayImage& img, const GaborBank& bank) {
  return to_float_precision(normalize_rotation(bank.features(img)));
}

// ---- index file ----------------------------------------------------------

namespace {

constexpr std::string_view kIndexMagic = "TEXSEEK-INDEX";
constexpr std::string_view kIndexVersion = "v1";

bool unreserved(unsigned char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
         c == '.' || c == '~' || c == '/';
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (unreserved(c)) {
      out += ch;
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

std::string percent_decode(std::string_view s, int line_no) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out += s[i];
      continue;
    }
    unsigned v = 0;
    if (i + 2 >= s.size()) throw Error("index line " + std::to_string(line_no) + ": bad escape");
    const auto [ptr, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
    if (ec != std::errc() || ptr != s.data() + i + 3) {
      throw Error("index line " + std::to_string(line_no) + ": bad escape");
    }
    out += static_cast<char>(v);
    i += 2;
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(sep, start);
    parts.push_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return parts;
}

int header_field(std::string_view token, std::string_view key) {
  if (token.substr(0, key.size()) != key) throw Error("index header: expected " + std::string(key));
  int v = 0;
  const auto digits = token.substr(key.size());
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || v < 1) {
    throw Error("index header: malformed " + std::string(key));
  }
  return v;
}

}  // namespace

std::string save_index(const Index& idx) {
  std::string out = std::string(kIndexMagic) + " " + std::string(kIndexVersion) +
                    " M=" + std::to_string(idx.header().scales) + " N=" + std::to_string(idx.header().orientations) +
                    " cfg=" + hash_hex(idx.header().config_hash) + "\n";
  char buf[32];
  for (const auto& r : idx.records()) {
    out += r.id;
    out += '\t';
    for (std::size_t i = 0; i < r.features.values.size(); ++i) {
      if (i) out += ' ';
      std::snprintf(buf, sizeof buf, "%.9g", r.features.values[i]);
      out += buf;
    }
    out += '\t';
    out += std::to_string(r.features.dominant_orientation);
    out += '\t';
    for (std::size_t i = 0; i < r.attributes.size(); ++i) {
      if (i) out += ';';
      out += percent_encode(r.attributes[i].first);
      out += '=';
      out += percent_encode(r.attributes[i].second);
    }
    out += '\n';
  }
  return out;
}

Index load_index(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw Error("index: empty file");

  const auto head = split(lines[0], ' ');
  if (head.size() != 5 || head[0] != kIndexMagic) throw Error("index: not a TEXSEEK-INDEX file");
  if (head[1] != kIndexVersion) throw Error("index: unsupported version " + std::string(head[1]));
  IndexHeader header;
  header.scales = header_field(head[2], "M=");
  header.orientations = header_field(head[3], "N=");
  if (head[4].substr(0, 4) != "cfg=") throw Error("index header: expected cfg=");
  header.config_hash = parse_hash_hex(head[4].substr(4));

  const auto dims = static_cast<std::size_t>(2 * header.scales * header.orientations);
  std::vector<IndexRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const int line_no = static_cast<int>(ln) + 1;
    const auto malformed = [&](const std::string& why) {
      return Error("index line " + std::to_string(line_no) + ": " + why);
    };
    const auto fields = split(lines[ln], '\t');
    if (fields.size() != 4) throw malformed("expected 4 tab-separated fields");

    IndexRecord r;
    r.id = std::string(fields[0]);
    r.features.scales = header.scales;
    r.features.orientations = header.orientations;
    const auto numbers = split(fields[1], ' ');
    if (numbers.size() != dims) throw malformed("expected " + std::to_string(dims) + " feature values");
    r.features.values.reserve(dims);
    for (const auto tok : numbers) {
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) throw malformed("bad feature value");
      r.features.values.push_back(v);
    }
    const auto dom = fields[2];
    const auto [ptr, ec] = std::from_chars(dom.data(), dom.data() + dom.size(), r.features.dominant_orientation);
    if (ec != std::errc() || ptr != dom.data() + dom.size()) throw malformed("bad dominant orientation");
    if (!fields[3].empty()) {
      for (const auto item : split(fields[3], ';')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw malformed("bad attribute");
        r.attributes.emplace_back(percent_decode(item.substr(0, eq), line_no),
                                  percent_decode(item.substr(eq + 1), line_no));
      }
    }
    records.push_back(std::move(r));
  }
  return Index(header, std::move(records));
}

void save_index_file(const Index& idx, const std::filesystem::path& path) {
  const auto text = save_index(idx);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("short write to " + path.string());
}

Index load_index_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_index(ss.str());
}

// ---- corpus indexing -----------------------------------------------------

std::vector<std::string> list_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("corpus directory " + dir.string() + " does not exist");
  std::vector<std::string> ids;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.ends_with(".stego.pgm")) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".pgm" && ext != ".ppm" && ext != ".pnm") continue;
    ids.push_back(fs::relative(entry.path(), dir).generic_string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Attributes payload_attributes(const IndexRecord& record) { return {{"id", record.id}}; }

StegoOptions stego_options(const PipelineConfig& cfg) {
  StegoOptions o;
  o.table = cfg.quant_table;
  o.parity_dc = cfg.parity_dc;
  return o;
}

namespace {

struct ImageOutcome {
  std::optional<IndexRecord> record;
  std::string warning;
  bool unembedded = false;
};

ImageOutcome index_one(const std::filesystem::path& corpus_dir, const std::string& id, const GaborBank& bank,
                       const PipelineConfig& cfg, const BuildOptions& options) {
  ImageOutcome out;
  try {
    const auto img = read_pnm_file(corpus_dir / id);
    IndexRecord record{id, index_features(img, bank), {}};
    if (options.embed_attributes) {
      const auto bits = encode_payload({record.features, payload_attributes(record)});
      std::optional<GrayImage> stego;
      if (bits.size() <= capacity(img)) {
        try {
          stego = embed(img, bits, stego_options(cfg));
        } catch (const Error& e) {
          out.warning = id + ": " + e.what();
        }
      }
      if (stego) {
        auto target = options.stego_dir.value_or(corpus_dir) / id;
        target.replace_extension(".stego.pgm");
        std::filesystem::create_directories(target.parent_path());
        write_pgm_file(*stego, target);
        record.attributes.emplace_back("stego", "embedded");
      } else {
        out.unembedded = true;
        record.attributes.emplace_back("stego", "unembedded");
      }
    }
    out.record = std::move(record);
  } catch (const Error& e) {
    out.warning = id + ": " + e.what();
  }
  return out;
}

}  // namespace

BuildReport build_index(const std::filesystem::path& corpus_dir, const PipelineConfig& cfg,
                        const BuildOptions& options) {
  const auto ids = list_corpus(corpus_dir);
  if (ids.empty()) throw Error("corpus " + corpus_dir.string() + " contains no images");

  const GaborBank bank(cfg.bank);
  std::vector<ImageOutcome> outcomes(ids.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < ids.size();) {
      outcomes[i] = index_one(corpus_dir, ids[i], bank, cfg, options);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(ids.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<IndexRecord> records;
  std::vector<std::string> warnings;
  std::vector<std::string> unembedded;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.record) {
      logger().warn("skipping {}", o.warning);
      warnings.push_back(std::move(o.warning));
      continue;
    }
    if (o.unembedded) {
      if (o.warning.empty()) {
        logger().warn("{}: capacity too small for the payload, indexed without embedding", ids[i]);
      } else {
        logger().warn("{}, indexed without embedding", o.warning);
      }
      unembedded.push_back(ids[i]);
    }
    records.push_back(std::move(*o.record));
  }
  if (records.empty()) throw Error("corpus " + corpus_dir.string() + " contains no readable images");
  IndexHeader header{cfg.bank.scales, cfg.bank.orientations, config_hash(cfg)};
  return {Index(header, std::move(records)), std::move(warnings), std::move(unembedded)};
}

// ---- queries -------------------------------------------------------------

std::vector<RankedResult> query_from_image(const GrayImage& img, const Index& idx, std::size_t k,
                                           const GaborBank& bank, const RankOptions& options) {
  return rank(normalize_rotation(bank.features(img)), idx, k, options);
}

StegoPayload read_embedded(const GrayImage& stego, int scales, int orientations, const StegoOptions& options) {
  try {
    return decode_payload(extract(stego, capacity(stego), options), scales, orientations);
  } catch (const PayloadError& e) {
    throw PayloadError(e.kind(), std::string("no embedded attributes (") + e.what() + ")");
  }
}

std::vector<RankedResult> query_from_stego(const GrayImage& stego, const Index& idx, std::size_t k,
                                           const StegoOptions& stego_options, const RankOptions& options) {
  const auto payload = read_embedded(stego, idx.header().scales, idx.header().orientations, stego_options);
  return rank(normalize_rotation(payload.features), idx, k, options);
}

std::string format_results(const std::vector<RankedResult>& results) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu\t%.9g\t", i + 1, results[i].distance);
    out += buf;
    out += results[i].id;
    out += '\n';
  }
  return out;
}

}  // namespace texseek
