#include "relaydiff/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "relaydiff/errors.hpp"

namespace relaydiff {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw PreconditionError("malformed number '" + s + "' in " + path.string());
  }
}

}  // namespace

void write_time_table(const fs::path& path, const std::string& prefix, const std::vector<double>& times,
                      const TimeTable& table) {
  if (times.size() != table.steps) throw PreconditionError("time axis and table length differ");
  auto out = open_out(path);
  out << "t";
  for (std::size_t j = 0; j < table.rows; ++j) out << ',' << prefix << '_' << j + 1;
  out << '\n';
  for (std::size_t n = 0; n < table.steps; ++n) {
    out << format_double(times[n]);
    for (std::size_t j = 0; j < table.rows; ++j) out << ',' << format_double(table(j, n));
    out << '\n';
  }
}

LoadedTable read_time_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read " + path.string());
  LoadedTable lt;
  std::string line;
  if (!std::getline(in, line)) throw PreconditionError(path.string() + " is empty");
  lt.header = split(line);
  if (lt.header.empty() || lt.header[0] != "t") throw PreconditionError(path.string() + " has no 't' column");
  const std::size_t rows = lt.header.size() - 1;
  std::vector<std::vector<double>> cols(rows);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != lt.header.size()) throw PreconditionError("ragged row in " + path.string());
    lt.times.push_back(parse_double(cells[0], path));
    for (std::size_t j = 0; j < rows; ++j) cols[j].push_back(parse_double(cells[j + 1], path));
  }
  lt.table = TimeTable(rows, lt.times.size());
  for (std::size_t j = 0; j < rows; ++j)
    for (std::size_t n = 0; n < lt.times.size(); ++n) lt.table(j, n) = cols[j][n];
  return lt;
}

void write_trajectory(const fs::path& dir, const Trajectory& tr, const Grid& grid) {
  fs::create_directories(dir);
  write_time_table(dir / "kappa.csv", "kappa", tr.times, tr.kappa);
  write_time_table(dir / "v.csv", "v", tr.times, tr.v);
  write_time_table(dir / "readings.csv", "r", tr.times, tr.readings);

  {
    auto out = open_out(dir / "intervals.csv");
    out << "t";
    for (std::size_t j = 0; j < tr.lo.rows; ++j) out << ",lo_" << j + 1 << ",hi_" << j + 1;
    out << '\n';
    for (std::size_t n = 0; n < tr.times.size(); ++n) {
      out << format_double(tr.times[n]);
      for (std::size_t j = 0; j < tr.lo.rows; ++j)
        out << ',' << format_double(tr.lo(j, n)) << ',' << format_double(tr.hi(j, n));
      out << '\n';
    }
  }

  const fs::path snaps = dir / "snapshots";
  fs::create_directories(snaps);
  for (const auto& s : tr.snapshots) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%08zu.csv", s.step);
    auto out = open_out(snaps / name);
    out << (grid.dim() == 2 ? "node,x,y,value\n" : "node,x,value\n");
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      const Point p = grid.coords(k);
      out << k << ',' << format_double(p[0]);
      if (grid.dim() == 2) out << ',' << format_double(p[1]);
      out << ',' << format_double(s.values[k]) << '\n';
    }
  }
}

Trajectory read_trajectory(const fs::path& dir) {
  Trajectory tr;
  auto kappa = read_time_table(dir / "kappa.csv");
  auto v = read_time_table(dir / "v.csv");
  auto r = read_time_table(dir / "readings.csv");
  if (v.times.size() != kappa.times.size() || r.times.size() != kappa.times.size())
    throw PreconditionError("run tables in " + dir.string() + " have different lengths");
  tr.times = std::move(kappa.times);
  tr.kappa = std::move(kappa.table);
  tr.v = std::move(v.table);
  tr.readings = std::move(r.table);
  return tr;
}

}  // namespace relaydiff
