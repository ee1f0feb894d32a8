#include "relaydiff/sensing.hpp"

#include <cmath>

#include "relaydiff/errors.hpp"

namespace relaydiff {

std::vector<std::string> SensorArray::validate(const Grid& grid) const {
  std::vector<std::string> out;
  if (points.empty()) out.emplace_back("at least one sensor is required");
  if (references.size() != points.size())
    out.emplace_back("sensor count and reference count differ");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!grid.is_interior(points[k]))
      out.push_back("sensor " + std::to_string(k + 1) +
                    " is not an interior point (needs one grid spacing of clearance)");
    if (k < references.size() && !std::isfinite(references[k]))
      out.push_back("sensor " + std::to_string(k + 1) + " reference is not finite");
  }
  return out;
}

void read_into(const SensorArray& array, const Field& field, std::span<double> out) {
  if (out.size() != array.size()) throw PreconditionError("reading buffer has the wrong length");
  for (std::size_t k = 0; k < array.size(); ++k) out[k] = sample_at(field, array.points[k]);
}

std::vector<double> read(const SensorArray& array, const Field& field) {
  std::vector<double> out(array.size());
  read_into(array, field, out);
  return out;
}

std::vector<double> error_signal(const SensorArray& array, std::span<const double> readings) {
  if (readings.size() != array.references.size())
    throw PreconditionError("reading count does not match the sensor count");
  std::vector<double> out(readings.size());
  for (std::size_t k = 0; k < readings.size(); ++k) out[k] = readings[k] - array.references[k];
  return out;
}

}  // namespace relaydiff
