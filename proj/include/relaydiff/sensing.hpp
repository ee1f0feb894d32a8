#pragma once

#include <span>
#include <string>
#include <vector>

#include "relaydiff/grid.hpp"

namespace relaydiff {

/// Noiseless point sensors x_k* with the target values u_k* of the reference pattern.
struct SensorArray {
  std::vector<Point> points;
  std::vector<double> references;

  std::size_t size() const noexcept { return points.size(); }
  std::vector<std::string> validate(const Grid& grid) const;
};

std::vector<double> read(const SensorArray& array, const Field& field);
void read_into(const SensorArray& array, const Field& field, std::span<double> out);

/// readings_k - u_k*
std::vector<double> error_signal(const SensorArray& array, std::span<const double> readings);

}  // namespace relaydiff
