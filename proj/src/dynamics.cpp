#include "relaydiff/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relaydiff/errors.hpp"

namespace relaydiff {

std::string ReactionTerm::name() const {
  switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::linear: return "linear";
    case Kind::allen_cahn: return "allen_cahn";
  }
  return "unknown";
}

GrowthCert ReactionTerm::default_cert() const noexcept {
  switch (kind_) {
    case Kind::zero: return {0.0, 0.0};
    case Kind::linear: return {0.0, std::max(lambda_, 0.0)};
    case Kind::allen_cahn: return {0.0, 1.0};  // s^2 - s^4 <= s^2
  }
  return {};
}

double ReactionTerm::lipschitz_on(double cap) const noexcept {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::linear: return std::abs(lambda_);
    case Kind::allen_cahn: return std::max(1.0, 3.0 * cap * cap - 1.0);  // max |1 - 3 s^2|
  }
  return 0.0;
}

std::optional<double> growth_check(const ReactionTerm& f, const GrowthCert& cert, double s_min,
                                   double s_max, std::size_t samples) {
  if (samples < 2) throw PreconditionError("growth_check needs at least 2 samples");
  if (!std::isfinite(s_min) || !std::isfinite(s_max) || s_max < s_min)
    throw PreconditionError("growth_check needs a finite, ordered range");
  const double step = (s_max - s_min) / static_cast<double>(samples - 1);
  for (std::size_t k = 0; k < samples; ++k) {
    const double s = k + 1 == samples ? s_max : s_min + step * static_cast<double>(k);
    const double lhs = f(s) * s;
    const double rhs = cert.c1 + cert.c2 * s * s;
    // Relative slack absorbs rounding in the two evaluations.
    if (lhs > rhs + 1e-12 * std::max(1.0, std::abs(rhs))) return s;
  }
  return std::nullopt;
}

ImexStepper::ImexStepper(const Grid& grid, double dt, LinearSolveOptions opts)
    : grid_(grid), dt_(dt), opts_(opts) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("time step must be positive");
  const std::size_t n = grid.size();
  if (grid.dim() == 1) {
    // A = I - dt L; sub/super diagonals are -r except the mirrored rows.
    const double r = dt / (grid.spacing(0) * grid.spacing(0));
    auto sup = [&](std::size_t i) { return i == 0 ? -2.0 * r : -r; };
    auto sub = [&](std::size_t i) { return i + 1 == n ? -2.0 * r : -r; };
    const double diag = 1.0 + 2.0 * r;
    c_prime_.resize(n);
    denom_.resize(n);
    denom_[0] = diag;
    c_prime_[0] = sup(0) / diag;
    for (std::size_t i = 1; i < n; ++i) {
      denom_[i] = diag - sub(i) * c_prime_[i - 1];
      c_prime_[i] = i + 1 < n ? sup(i) / denom_[i] : 0.0;
    }
  } else {
    r_.resize(n);
    p_.resize(n);
    ap_.resize(n);
    rhs_.resize(n);
  }
}

void ImexStepper::solve_tridiagonal(std::span<double> d) {
  const std::size_t n = d.size();
  const double r = dt_ / (grid_.spacing(0) * grid_.spacing(0));
  auto sub = [&](std::size_t i) { return i + 1 == n ? -2.0 * r : -r; };
  d[0] /= denom_[0];
  for (std::size_t i = 1; i < n; ++i) d[i] = (d[i] - sub(i) * d[i - 1]) / denom_[i];
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= c_prime_[i] * d[i + 1];
}

void ImexStepper::solve_cg(std::span<const double> rhs, std::span<double> x) {
  const std::size_t n = grid_.size();
  const auto& w = grid_.weights();
  const double hx2 = grid_.spacing(0) * grid_.spacing(0);
  const double hy2 = grid_.spacing(1) * grid_.spacing(1);
  // Diagonal of W (I - dt L), used as a Jacobi preconditioner.
  const double diag_a = 1.0 + 2.0 * dt_ / hx2 + 2.0 * dt_ / hy2;

  auto apply = [&](std::span<const double> in, std::span<double> out) {
    apply_laplacian(grid_, in, out);
    for (std::size_t k = 0; k < n; ++k) out[k] = w[k] * (in[k] - dt_ * out[k]);
  };

  std::vector<double>& z = rhs_;  // reused as preconditioned residual
  double bnorm = 0.0;
  for (std::size_t k = 0; k < n; ++k) bnorm += (w[k] * rhs[k]) * (w[k] * rhs[k]);
  bnorm = std::sqrt(bnorm);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return;
  }

  apply(x, ap_);
  double rz = 0.0, rnorm2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    r_[k] = w[k] * rhs[k] - ap_[k];
    z[k] = r_[k] / (w[k] * diag_a);
    p_[k] = z[k];
    rz += r_[k] * z[k];
    rnorm2 += r_[k] * r_[k];
  }
  std::size_t it = 0;
  while (std::sqrt(rnorm2) > opts_.rel_tol * bnorm) {
    if (it++ >= opts_.max_iter) {
      std::ostringstream os;
      os << "conjugate gradients did not converge in " << opts_.max_iter
         << " iterations (relative residual " << std::sqrt(rnorm2) / bnorm << ")";
      throw NumericalError(os.str(), std::sqrt(rnorm2) / bnorm);
    }
    apply(p_, ap_);
    double pap = 0.0;
    for (std::size_t k = 0; k < n; ++k) pap += p_[k] * ap_[k];
    const double alpha = rz / pap;
    double rz_new = 0.0;
    rnorm2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p_[k];
      r_[k] -= alpha * ap_[k];
      z[k] = r_[k] / (w[k] * diag_a);
      rz_new += r_[k] * z[k];
      rnorm2 += r_[k] * r_[k];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p_[k] = z[k] + beta * p_[k];
  }
}

void ImexStepper::step(std::span<const double> u, const ReactionTerm& f,
                       std::span<const double> source, std::span<double> out) {
  const std::size_t n = grid_.size();
  if (u.size() != n || source.size() != n || out.size() != n)
    throw PreconditionError("pde_step: state, source and output must live on the stepper grid");
  if (grid_.dim() == 1) {
    for (std::size_t k = 0; k < n; ++k) out[k] = u[k] + dt_ * (f(u[k]) + source[k]);
    solve_tridiagonal(out);
    return;
  }
  std::vector<double> rhs(n);
  for (std::size_t k = 0; k < n; ++k) rhs[k] = u[k] + dt_ * (f(u[k]) + source[k]);
  std::copy(u.begin(), u.end(), out.begin());
  solve_cg(rhs, out);
}

Field pde_step(const Field& u, double dt, const ReactionTerm& f, const Field& source,
               const LinearSolveOptions& opts) {
  if (!(source.grid == u.grid)) throw PreconditionError("pde_step: source lives on a different grid");
  ImexStepper stepper(u.grid, dt, opts);
  Field out(u.grid);
  stepper.step(u.values, f, source.values, out.values);
  return out;
}

}  // namespace relaydiff
