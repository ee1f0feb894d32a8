#pragma once

#include <span>
#include <string>
#include <vector>

#include "relaydiff/grid.hpp"

namespace relaydiff {

/// Time envelope multiplying an actuator's spatial shape.
struct Envelope {
  enum class Kind { constant, ramp };
  Kind kind = Kind::constant;
  double tau = 1.0;  // ramp: 1 - exp(-t / tau)

  double operator()(double t) const;
};

/// Nonnegative actuator shape g_j(x) * envelope(t), centred inside the domain.
struct ActuatorProfile {
  enum class Shape { gaussian, indicator };
  Shape shape = Shape::gaussian;
  Point center{0.0, 0.0};
  double width = 0.1;  // gaussian standard deviation, or indicator ball radius
  double amplitude = 1.0;
  Envelope envelope{};

  static ActuatorProfile gaussian(Point c, double width, double amplitude) {
    return {Shape::gaussian, c, width, amplitude, {}};
  }
  static ActuatorProfile indicator(Point c, double radius, double amplitude) {
    return {Shape::indicator, c, radius, amplitude, {}};
  }

  double spatial(const Point& x, int dim) const;
  double operator()(const Point& x, double t, int dim) const { return spatial(x, dim) * envelope(t); }
};

class ActuatorBank {
 public:
  ActuatorBank() = default;
  explicit ActuatorBank(std::vector<ActuatorProfile> profiles);

  std::size_t size() const noexcept { return profiles_.size(); }
  const std::vector<ActuatorProfile>& profiles() const noexcept { return profiles_; }

  /// Problems with the bank on a given grid (centre outside, negative amplitude, ...).
  std::vector<std::string> validate(const Grid& grid) const;

 private:
  std::vector<ActuatorProfile> profiles_;
};

/// Actuator shapes tabulated on one grid; assembles sum_j g_j(x, t) kappa_j.
class ActuatorLayout {
 public:
  ActuatorLayout(const ActuatorBank& bank, const Grid& grid);

  void source_into(std::span<const double> kappa, double t, std::span<double> out) const;
  const Field& shape(std::size_t j) const { return shapes_[j]; }
  const ActuatorBank& bank() const noexcept { return bank_; }
  const Grid& grid() const noexcept { return grid_; }

 private:
  ActuatorBank bank_;
  Grid grid_;
  std::vector<Field> shapes_;
};

Field control_source(const ActuatorBank& bank, std::span<const double> kappa, double t, const Grid& grid);

struct ActuationBounds {
  double c3 = 0.0;  // L1(Q_T) Lipschitz constant of kappa -> g(kappa)
  double c4 = 0.0;  // bound of ||g(kappa)||_{L^q(0,T;L^p)} over M_S
  std::vector<std::string> warnings;
};

/**
 * c3 = sum_j ||g_j||_{L1(Q_T)} and c4 = S * sum_j ||g_j||_{L^q(0,T;L^p)}, both by
 * trapezoidal quadrature on the grid and a uniform time grid of `time_steps`
 * intervals. Zero-mass profiles are flagged in `warnings`.
 */
ActuationBounds lipschitz_bound(const ActuatorBank& bank, const Grid& grid, double horizon, double S,
                                double p, double q, std::size_t time_steps = 1000);

}  // namespace relaydiff
