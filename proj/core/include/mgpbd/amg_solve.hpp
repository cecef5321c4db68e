#pragma once

#include "mgpbd/amg_setup.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace mgpbd {

/// Raised when the preconditioned residual inner product turns non-positive,
/// which means the preconditioner (or A) is not SPD.
class IndefinitePreconditionerError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SolveReport {
  int iterations = 0;
  /// ||b - A x_k|| / ||b|| for k = 0..iterations; history[0] == 1.
  std::vector<double> rel_residual_history{1.0};
  bool converged = false;
  double wall_time = 0.0;
  /// Floating-point operations spent in SpMV, smoothing and vector updates.
  double flops = 0.0;
};

/// Rebuilds the coarse operators from new fine-level values through the cached
/// prolongators, refreshes the Jacobi diagonals and refactors the coarsest level.
/// Prolongators are left as they were at setup; smoother parameters too unless
/// config.refresh_smoother is set.
void refresh_operators(AmgHierarchy& h, const SparseMatrix& a0);

/// One V-cycle from a zero initial guess: z ~= A^-1 b.
/// Throws std::invalid_argument on an empty hierarchy or a length mismatch.
void vcycle(const AmgHierarchy& h, std::span<const double> b, std::span<double> z,
            double* flops = nullptr);
std::vector<double> vcycle(const AmgHierarchy& h, std::span<const double> b);

using Preconditioner = std::function<void(std::span<const double> r, std::span<double> z)>;

/// Preconditioned conjugate gradients from x = 0. Stops when
/// ||b - A x|| <= tol ||b|| or after maxiter iterations.
/// `precond_flops` is added to the report per preconditioner application.
std::vector<double> pcg(const SparseMatrix& a, std::span<const double> b, const Preconditioner& m,
                        double tol, int maxiter, SolveReport& report, double precond_flops = 0.0);

/// PCG with one V-cycle of `h` as the preconditioner. `a` must hold the same
/// values as the hierarchy's finest level.
std::vector<double> mgpcg(const AmgHierarchy& h, const SparseMatrix& a, std::span<const double> b,
                          double tol, int maxiter, SolveReport& report);

/// PCG with the diagonal (Jacobi) preconditioner.
std::vector<double> jacobi_pcg(const SparseMatrix& a, std::span<const double> b, double tol,
                               int maxiter, SolveReport& report);

/// Floating-point operations of one V-cycle.
double vcycle_flops(const AmgHierarchy& h);

/// CSV rows `frame,outer_iteration,pcg_iteration,relative_residual`, no header.
void write_solve_report_csv(std::ostream& os, const SolveReport& r, long frame, int outer_iteration);

}  // namespace mgpbd
