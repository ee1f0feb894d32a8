#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "relaydiff/loop.hpp"

namespace relaydiff {

/// Probe parameters pinned by a scenario file (all optional).
struct ProbeSettings {
  std::size_t stability_pairs = 20;
  double stability_ratio_cap = 1e300;
  double holder_margin = 0.1;
  std::size_t holder_controls = 5;
  double holder_spread_cap = 10.0;
  std::size_t convergence_levels = 3;
  double convergence_dt_factor = 4.0;
};

struct Scenario {
  std::string name;
  SimConfig config;
  ProbeSettings probes;
  /// Canonical (sorted-key) serialization of the source document.
  std::string canonical;
  std::uint64_t hash = 0;
};

/**
 * Parses a scenario from JSON text. Unknown keys, wrong types and every
 * violated invariant are collected into a single ConfigError.
 */
Scenario parse_scenario(const std::string& text, const std::string& name = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

/// 64-bit FNV-1a of the canonical serialization, as 16 hex digits.
std::string hash_hex(std::uint64_t h);

}  // namespace relaydiff
