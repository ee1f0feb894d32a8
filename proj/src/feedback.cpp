#include "relaydiff/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relaydiff/errors.hpp"

namespace relaydiff {

std::string RelaySpec::name() const {
  switch (mode) {
    case Mode::strict: return "strict";
    case Mode::convexified: return "convexified";
    case Mode::smoothed: return "smoothed";
  }
  return "unknown";
}

AdmissibleInterval relay(const RelaySpec& spec, double r) {
  switch (spec.mode) {
    case RelaySpec::Mode::strict:
      return AdmissibleInterval::point(r > 0.0 ? -1.0 : (r < 0.0 ? 1.0 : 0.0));
    case RelaySpec::Mode::convexified:
      if (r > 0.0) return AdmissibleInterval::point(-1.0);
      if (r < 0.0) return AdmissibleInterval::point(1.0);
      return {-1.0, 1.0};
    case RelaySpec::Mode::smoothed:
      return AdmissibleInterval::point(-std::clamp(r / spec.delta, -1.0, 1.0));
  }
  return {};
}

double PiecewiseLinear::operator()(double t) const {
  if (times.empty()) return 0.0;
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin());
  const double t0 = times[i - 1], t1 = times[i];
  const double s = (t - t0) / (t1 - t0);
  return values[i - 1] + s * (values[i] - values[i - 1]);
}

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols, std::vector<PiecewiseLinear> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows * cols) throw ConfigError("weight matrix entry count is not rows x cols");
  for (const auto& e : entries_) {
    if (e.times.empty() || e.times.size() != e.values.size())
      throw ConfigError("weight entry needs matching, nonempty breakpoint and value lists");
    if (!std::is_sorted(e.times.begin(), e.times.end()) ||
        std::adjacent_find(e.times.begin(), e.times.end()) != e.times.end())
      throw ConfigError("weight breakpoints must be strictly increasing");
  }
}

WeightMatrix WeightMatrix::constant(const std::vector<std::vector<double>>& rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.front().size() : 0;
  std::vector<PiecewiseLinear> entries;
  entries.reserve(m * n);
  for (const auto& row : rows) {
    if (row.size() != n) throw ConfigError("weight rows have different lengths");
    for (double v : row) entries.push_back(PiecewiseLinear::constant(v));
  }
  return WeightMatrix(m, n, std::move(entries));
}

std::vector<double> WeightMatrix::row_breakpoints(std::size_t j) const {
  std::vector<double> out;
  for (std::size_t k = 0; k < cols_; ++k) {
    const auto& e = entry(j, k);
    out.insert(out.end(), e.times.begin(), e.times.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string WeightViolation::describe() const {
  std::ostringstream os;
  os.precision(12);
  os << "weights row " << row + 1 << " at t=" << time;
  if (min_entry < 0.0)
    os << " has a negative entry " << min_entry << "; weights must be nonnegative";
  else
    os << " sums to " << row_sum << "; each row must be a convex combination (sum 1)";
  return os.str();
}

std::optional<WeightViolation> weights_validate(const WeightMatrix& alpha) {
  constexpr double tol = 1e-12;
  for (std::size_t j = 0; j < alpha.rows(); ++j) {
    for (double t : alpha.row_breakpoints(j)) {
      double sum = 0.0, min_entry = 0.0;
      for (std::size_t k = 0; k < alpha.cols(); ++k) {
        const double a = alpha(j, k, t);
        sum += a;
        min_entry = std::min(min_entry, a);
      }
      if (min_entry < 0.0 || std::abs(sum - 1.0) > tol || !std::isfinite(sum))
        return WeightViolation{j, t, sum, min_entry};
    }
  }
  return std::nullopt;
}

void admissible_set_into(const RelaySpec& relays, const WeightMatrix& alpha, double t,
                         std::span<const double> err, std::span<AdmissibleInterval> out) {
  if (err.size() != alpha.cols()) throw PreconditionError("error vector length does not match weight columns");
  if (out.size() != alpha.rows()) throw PreconditionError("output length does not match weight rows");
  for (std::size_t j = 0; j < alpha.rows(); ++j) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t k = 0; k < alpha.cols(); ++k) {
      const double a = alpha(j, k, t);
      const auto w = relay(relays, err[k]);
      lo += a * w.lo;
      hi += a * w.hi;
    }
    out[j] = {lo, hi};
  }
}

std::vector<AdmissibleInterval> admissible_set(const RelaySpec& relays, const WeightMatrix& alpha,
                                               double t, std::span<const double> err) {
  std::vector<AdmissibleInterval> out(alpha.rows());
  admissible_set_into(relays, alpha, t, err, out);
  return out;
}

std::string SelectionStrategy::name() const {
  switch (kind) {
    case Kind::midpoint: return "midpoint";
    case Kind::prefer_zero: return "prefer_zero";
    case Kind::prefer_previous: return "prefer_previous";
    case Kind::extreme_lo: return "extreme_lo";
    case Kind::extreme_hi: return "extreme_hi";
    case Kind::hysteresis: return "hysteresis";
  }
  return "unknown";
}

double select(const AdmissibleInterval& set, const SelectionStrategy& strategy,
              std::optional<double> previous) {
  const double mid = 0.5 * (set.lo + set.hi);
  switch (strategy.kind) {
    case SelectionStrategy::Kind::midpoint: return mid;
    case SelectionStrategy::Kind::prefer_zero: return std::clamp(0.0, set.lo, set.hi);
    case SelectionStrategy::Kind::prefer_previous:
      return previous ? std::clamp(*previous, set.lo, set.hi) : mid;
    case SelectionStrategy::Kind::extreme_lo: return set.lo;
    case SelectionStrategy::Kind::extreme_hi: return set.hi;
    case SelectionStrategy::Kind::hysteresis:
      // Keep the previous value while it stays within `band` of the set; the
      // clamp keeps the selection inside [lo, hi].
      if (previous && *previous >= set.lo - strategy.band && *previous <= set.hi + strategy.band)
        return std::clamp(*previous, set.lo, set.hi);
      return mid;
  }
  return mid;
}

}  // namespace relaydiff
