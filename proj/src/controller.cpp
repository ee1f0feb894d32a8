#include "relaydiff/controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relaydiff/errors.hpp"

namespace relaydiff {

std::vector<std::string> ControllerParams::validate() const {
  std::vector<std::string> out;
  if (beta.empty()) out.emplace_back("controller needs at least one time constant");
  if (beta.size() != initial.size()) out.emplace_back("controller beta and initial-value lists differ in length");
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (!(beta[j] > 0.0) || !std::isfinite(beta[j]))
      out.push_back("controller " + std::to_string(j + 1) + " time constant must be positive");
  }
  for (std::size_t j = 0; j < initial.size(); ++j)
    if (!std::isfinite(initial[j])) out.push_back("controller " + std::to_string(j + 1) + " initial value is not finite");
  return out;
}

std::vector<double> TimeTable::column(std::size_t n) const {
  std::vector<double> out(rows);
  for (std::size_t j = 0; j < rows; ++j) out[j] = (*this)(j, n);
  return out;
}

void TimeTable::set_column(std::size_t n, std::span<const double> col) {
  for (std::size_t j = 0; j < rows; ++j) (*this)(j, n) = col[j];
}

double TimeTable::sup_distance(const TimeTable& a, const TimeTable& b) {
  if (a.rows != b.rows || a.steps != b.steps) throw PreconditionError("time tables differ in shape");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

double controller_step(double kappa, double v, double dt, double beta) {
  const double decay = std::exp(-dt / beta);
  const double gain = -std::expm1(-dt / beta);  // 1 - decay without cancellation
  return decay * kappa + gain * v;
}

TimeTable controller_trajectory(const ControllerParams& params, const TimeTable& v, double dt) {
  if (v.rows != params.size()) throw PreconditionError("selection table rows do not match controller count");
  if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
  TimeTable kappa(v.rows, v.steps);
  for (std::size_t j = 0; j < v.rows; ++j) {
    const double decay = std::exp(-dt / params.beta[j]);
    const double gain = -std::expm1(-dt / params.beta[j]);
    double k = params.initial[j];
    kappa(j, 0) = k;
    for (std::size_t n = 1; n < v.steps; ++n) {
      k = decay * k + gain * v(j, n);
      kappa(j, n) = k;
    }
  }
  return kappa;
}

BoundsReport a_priori_bounds(const ControllerParams& params, std::span<const double> C) {
  if (C.size() != params.size()) throw PreconditionError("law bounds do not match controller count");
  BoundsReport rep;
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (!(C[j] > 0.0)) throw PreconditionError("law bounds must be positive");
    const double a = std::abs(params.initial[j]);
    const double b = params.beta[j];
    rep.law_bound.push_back(C[j]);
    rep.kappa_bound.push_back(a + C[j]);
    rep.derivative_bound.push_back((a + 2.0 * C[j]) / b);
    rep.S = std::max(rep.S, a + C[j] + (a + 2.0 * C[j]) / b);
    rep.S_printed = std::max(rep.S_printed, a + C[j] + (a + 2.0) / b);
    if (C[j] != 1.0) rep.printed_formula_differs = true;
  }
  return rep;
}

MembershipResult in_M_S(const TimeTable& kappa, double S, double dt, const ControllerParams& params,
                        std::span<const double> C) {
  if (kappa.rows != params.size() || C.size() != params.size())
    throw PreconditionError("in_M_S: controller count mismatch");
  for (std::size_t j = 0; j < kappa.rows; ++j) {
    const double tol = 1e-9 + C[j] * dt / (params.beta[j] * params.beta[j]);
    for (std::size_t n = 0; n < kappa.steps; ++n) {
      const double k = kappa(j, n);
      if (!(std::abs(k) <= S)) {
        std::ostringstream os;
        os << "|kappa_" << j + 1 << "| = " << std::abs(k) << " exceeds S = " << S << " at step " << n;
        return {false, j, n, std::abs(k), os.str()};
      }
      if (n + 1 < kappa.steps) {
        const double q = std::abs(kappa(j, n + 1) - k) / dt;
        if (!(q <= S + tol)) {
          std::ostringstream os;
          os << "difference quotient of kappa_" << j + 1 << " = " << q << " exceeds S = " << S
             << " at step " << n;
          return {false, j, n, q, os.str()};
        }
      }
    }
  }
  return {};
}

}  // namespace relaydiff
