#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "texseek/dct.hpp"
#include "texseek/gabor.hpp"

namespace texseek {

/// Everything that determines feature values and stego layout.
struct PipelineConfig {
  BankConfig bank;
  QuantTable quant_table;
  bool parity_dc = false;    // include the DC coefficient in the parity set
  bool standardize = false;  // per-component standardization at query time

  bool operator==(const PipelineConfig&) const = default;
};

/**
 * Parses `key = value` lines ('#' starts a comment). Keys: scales,
 * orientations, freq_low, freq_high, kernel_radius, quant_table (path to a
 * 64-integer file, relative to the config file), parity_dc, standardize.
 */
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the canonical bank parameters and quantization table. Two
/// nodes produce mergeable features only if their hashes agree.
std::uint64_t config_hash(const PipelineConfig& cfg);
std::string hash_hex(std::uint64_t hash);
std::uint64_t parse_hash_hex(std::string_view text);

}  // namespace texseek
