#pragma once

#include <optional>
#include <string>

#include "relaydiff/grid.hpp"

namespace relaydiff {

/// Constants of the one-sided growth bound f(s) s <= c1 + c2 s^2.
struct GrowthCert {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// Pointwise reaction nonlinearity f. Every built-in kind has f(0) = 0.
class ReactionTerm {
 public:
  enum class Kind { zero, linear, allen_cahn };

  static ReactionTerm zero() { return ReactionTerm(Kind::zero, 0.0); }
  static ReactionTerm linear(double lambda) { return ReactionTerm(Kind::linear, lambda); }
  /// f(s) = s - s^3
  static ReactionTerm allen_cahn() { return ReactionTerm(Kind::allen_cahn, 0.0); }

  Kind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  std::string name() const;

  double operator()(double s) const noexcept {
    switch (kind_) {
      case Kind::zero: return 0.0;
      case Kind::linear: return lambda_ * s;
      case Kind::allen_cahn: return s - s * s * s;
    }
    return 0.0;
  }

  /// Certificate valid on the whole real line for the built-in kinds.
  GrowthCert default_cert() const noexcept;

  /// Lipschitz constant of f on [-cap, cap].
  double lipschitz_on(double cap) const noexcept;

 private:
  ReactionTerm(Kind k, double lambda) : kind_(k), lambda_(lambda) {}
  Kind kind_;
  double lambda_;
};

inline double reaction_eval(const ReactionTerm& f, double s) { return f(s); }

/// Samples f(s) s <= c1 + c2 s^2 on a uniform grid of `samples` points over
/// [s_min, s_max]. Returns the first violating s, or nullopt on pass.
std::optional<double> growth_check(const ReactionTerm& f, const GrowthCert& cert, double s_min,
                                   double s_max, std::size_t samples);

struct LinearSolveOptions {
  double rel_tol = 1e-10;
  std::size_t max_iter = 20000;
};

/**
 * One IMEX step: (I - dt L) u_next = u + dt (f(u) + source), L the Neumann
 * Laplacian. 1D uses a direct tridiagonal solve; 2D runs conjugate gradients
 * on the trapezoid-weighted (symmetric positive definite) form of the system
 * and throws NumericalError if the relative residual cap is not reached.
 */
Field pde_step(const Field& u, double dt, const ReactionTerm& f, const Field& source,
               const LinearSolveOptions& opts = {});

/// Reusable workspace variant of pde_step; `out` may not alias `u`.
class ImexStepper {
 public:
  ImexStepper(const Grid& grid, double dt, LinearSolveOptions opts = {});

  void step(std::span<const double> u, const ReactionTerm& f, std::span<const double> source,
            std::span<double> out);

  const Grid& grid() const noexcept { return grid_; }
  double dt() const noexcept { return dt_; }

 private:
  void solve_tridiagonal(std::span<double> rhs_then_solution);
  void solve_cg(std::span<const double> rhs, std::span<double> x);

  Grid grid_;
  double dt_;
  LinearSolveOptions opts_;
  // 1D: pre-factored Thomas coefficients.
  std::vector<double> c_prime_, denom_;
  // 2D: CG workspace.
  std::vector<double> r_, p_, ap_, rhs_;
};

}  // namespace relaydiff
