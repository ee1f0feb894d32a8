#include "relaydiff/actuation.hpp"

#include <cmath>
#include <sstream>

#include "relaydiff/errors.hpp"

namespace relaydiff {

double Envelope::operator()(double t) const {
  switch (kind) {
    case Kind::constant: return 1.0;
    case Kind::ramp: return -std::expm1(-t / tau);
  }
  return 1.0;
}

double ActuatorProfile::spatial(const Point& x, int dim) const {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
  switch (shape) {
    case Shape::gaussian: return amplitude * std::exp(-0.5 * r2 / (width * width));
    case Shape::indicator: return r2 <= width * width ? amplitude : 0.0;
  }
  return 0.0;
}

ActuatorBank::ActuatorBank(std::vector<ActuatorProfile> profiles) : profiles_(std::move(profiles)) {}

std::vector<std::string> ActuatorBank::validate(const Grid& grid) const {
  std::vector<std::string> out;
  if (profiles_.empty()) out.emplace_back("at least one actuator is required");
  for (std::size_t j = 0; j < profiles_.size(); ++j) {
    const auto& p = profiles_[j];
    std::ostringstream os;
    if (!(p.amplitude >= 0.0) || !std::isfinite(p.amplitude))
      os << "actuator " << j + 1 << " amplitude " << p.amplitude
         << " is negative; actuator profiles must be nonnegative";
    else if (!(p.width > 0.0) || !std::isfinite(p.width))
      os << "actuator " << j + 1 << " width must be positive";
    else if (p.envelope.kind == Envelope::Kind::ramp && !(p.envelope.tau > 0.0))
      os << "actuator " << j + 1 << " ramp time constant must be positive";
    else {
      for (int a = 0; a < grid.dim(); ++a)
        if (!(p.center[a] > 0.0 && p.center[a] < grid.extent(a))) {
          os << "actuator " << j + 1 << " centre lies outside the open domain";
          break;
        }
    }
    if (!os.str().empty()) out.push_back(os.str());
  }
  return out;
}

ActuatorLayout::ActuatorLayout(const ActuatorBank& bank, const Grid& grid) : bank_(bank), grid_(grid) {
  shapes_.reserve(bank.size());
  for (const auto& p : bank.profiles())
    shapes_.push_back(make_field(grid, [&](const Point& x) { return p.spatial(x, grid.dim()); }));
}

void ActuatorLayout::source_into(std::span<const double> kappa, double t, std::span<double> out) const {
  if (kappa.size() != shapes_.size())
    throw PreconditionError("control vector length does not match the actuator count");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < shapes_.size(); ++j) {
    const double c = kappa[j] * bank_.profiles()[j].envelope(t);
    if (c == 0.0) continue;
    const auto& s = shapes_[j].values;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * s[k];
  }
}

Field control_source(const ActuatorBank& bank, std::span<const double> kappa, double t, const Grid& grid) {
  ActuatorLayout layout(bank, grid);
  Field out(grid);
  layout.source_into(kappa, t, out.values);
  return out;
}

namespace {

// Trapezoidal integral of fn over [0, T] on `steps` uniform intervals.
template <class Fn>
double integrate_time(double T, std::size_t steps, Fn&& fn) {
  const double dt = T / static_cast<double>(steps);
  double acc = 0.5 * (fn(0.0) + fn(T));
  for (std::size_t n = 1; n < steps; ++n) acc += fn(dt * static_cast<double>(n));
  return acc * dt;
}

}  // namespace

ActuationBounds lipschitz_bound(const ActuatorBank& bank, const Grid& grid, double horizon, double S,
                                double p, double q, std::size_t time_steps) {
  if (time_steps < 1) throw PreconditionError("lipschitz_bound needs at least one time interval");
  ActuatorLayout layout(bank, grid);
  ActuationBounds out;
  for (std::size_t j = 0; j < bank.size(); ++j) {
    const auto& env = bank.profiles()[j].envelope;
    const auto& shape = layout.shape(j).values;
    const double l1_space = integrate_abs_pow(grid, shape, 1.0);
    const double lp_space = std::pow(integrate_abs_pow(grid, shape, p), 1.0 / p);
    const double l1_time = integrate_time(horizon, time_steps, [&](double t) { return std::abs(env(t)); });
    const double lq_time =
        std::pow(integrate_time(horizon, time_steps, [&](double t) { return std::pow(std::abs(env(t)), q); }),
                 1.0 / q);
    const double c3_j = l1_space * l1_time;
    if (c3_j == 0.0) {
      out.warnings.push_back("actuator " + std::to_string(j + 1) +
                             " has zero L1 mass; the Lipschitz constant is degenerate");
    }
    out.c3 += c3_j;
    out.c4 += lp_space * lq_time;
  }
  out.c4 *= S;
  if (out.c3 == 0.0) out.warnings.emplace_back("c3 = 0: the bank exerts no control");
  return out;
}

}  // namespace relaydiff
