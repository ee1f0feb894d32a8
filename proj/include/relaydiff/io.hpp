#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "relaydiff/loop.hpp"

namespace relaydiff {

/// 17 significant digits: doubles round-trip exactly.
std::string format_double(double x);

/// Header "t,<prefix>_1,...", one row per time sample.
void write_time_table(const std::filesystem::path& path, const std::string& prefix, const std::vector<double>& times,
                      const TimeTable& table);

struct LoadedTable {
  std::vector<std::string> header;
  std::vector<double> times;
  TimeTable table;
};

LoadedTable read_time_table(const std::filesystem::path& path);

/**
 * Writes kappa.csv, v.csv, readings.csv, intervals.csv and snapshots/ under
 * `dir` (created if missing). Snapshot files are snapshot_<step>.csv with
 * columns node,x[,y],value.
 */
void write_trajectory(const std::filesystem::path& dir, const Trajectory& tr, const Grid& grid);

/// Rebuilds the tables of a run directory (snapshots are not reloaded).
Trajectory read_trajectory(const std::filesystem::path& dir);

}  // namespace relaydiff
