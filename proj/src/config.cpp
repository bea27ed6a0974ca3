#include "texseek/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "texseek/error.hpp"

namespace texseek {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

int to_int(const std::string& key, const std::string& value) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) throw Error("config: " + key + " expects an integer");
  return v;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw Error("config: " + key + " expects a number");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error("config: " + key + " expects true or false");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(std::string_view(stripped).substr(0, eq));
    const auto value = trim(std::string_view(stripped).substr(eq + 1));
    if (key == "scales") {
      cfg.bank.scales = to_int(key, value);
    } else if (key == "orientations") {
      cfg.bank.orientations = to_int(key, value);
    } else if (key == "freq_low") {
      cfg.bank.freq_low = to_double(key, value);
    } else if (key == "freq_high") {
      cfg.bank.freq_high = to_double(key, value);
    } else if (key == "kernel_radius") {
      cfg.bank.kernel_radius = to_int(key, value);
    } else if (key == "quant_table") {
      std::filesystem::path p(value);
      if (p.is_relative()) p = base_dir / p;
      cfg.quant_table = QuantTable::parse(read_text(p));
    } else if (key == "parity_dc") {
      cfg.parity_dc = to_bool(key, value);
    } else if (key == "standardize") {
      cfg.standardize = to_bool(key, value);
    } else {
      throw Error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  try {
    cfg.bank.validate();
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path), path.parent_path());
}

std::uint64_t config_hash(const PipelineConfig& cfg) {
  // %.17g round-trips doubles, so equal configs give equal text.
  char buf[256];
  std::snprintf(buf, sizeof buf, "scales=%d;orientations=%d;freq_low=%.17g;freq_high=%.17g;kernel_radius=%d;q=",
                cfg.bank.scales, cfg.bank.orientations, cfg.bank.freq_low, cfg.bank.freq_high,
                cfg.bank.kernel_radius);
  std::string canonical(buf);
  for (const int e : cfg.quant_table.entries()) canonical += std::to_string(e) + ",";

  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::uint64_t parse_hash_hex(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.size() != 16) {
    throw Error("malformed config hash '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace texseek
