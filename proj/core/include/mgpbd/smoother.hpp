#pragma once

#include "mgpbd/sparse.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mgpbd {

enum class SmootherKind : std::uint8_t { omega_jacobi, chebyshev, gauss_seidel };

std::string_view to_string(SmootherKind k);
/// Throws std::invalid_argument for unknown names.
SmootherKind smoother_kind_from_string(std::string_view s);

struct SmootherConfig {
  SmootherKind kind = SmootherKind::omega_jacobi;
  double lambda_min_est = 0.1;     // stands in for lambda_min(D^-1 A) in the Jacobi weight
  double cheb_lower_frac = 0.25;   // Chebyshev interval is [frac * lambda_max, lambda_max]
  int cheb_degree = 3;
  /// Safety factor on the power-method estimate, capped by the Gershgorin bound.
  double lmax_margin = 1.05;
  int sweeps = 2;
  int power_iters = 100;
  std::uint64_t seed = 0;
};

struct SmootherParams {
  SmootherKind kind = SmootherKind::omega_jacobi;
  double omega = 1.0;
  /// q(t) = sum_i cheb_coeffs[i] t^i; one Chebyshev sweep is x += q(D^-1 A) D^-1 (b - A x).
  std::vector<double> cheb_coeffs;
  double lambda_max = 0.0;
  double lambda_min_est = 0.1;
  int sweeps = 2;
};

/// Weight and polynomial from a power-method estimate of lambda_max(D^-1 A),
/// widened by cfg.lmax_margin and capped by the Gershgorin bound of D^-1 A.
/// Throws std::invalid_argument when A has a non-positive diagonal entry.
SmootherParams compute_smoother_params(const SparseMatrix& a, const SmootherConfig& cfg);

/// Coefficients (ascending powers) of q with 1 - t q(t) the degree-`degree`
/// Chebyshev residual polynomial on [lo, hi].
std::vector<double> chebyshev_coefficients(double lo, double hi, int degree);

/// Applies params.sweeps sweeps to A x = b in place. `inv_diag` holds 1 / A_ii.
/// `scratch` must hold at least 3 * n doubles. `reverse` runs Gauss-Seidel
/// sweeps backward, so a forward pre- and backward post-sweep give a symmetric cycle.
void smooth(const SparseMatrix& a, std::span<const double> inv_diag, std::span<const double> b,
            std::span<double> x, const SmootherParams& params, std::span<double> scratch,
            bool reverse = false);

/// Convenience overload that derives the inverse diagonal and allocates scratch.
std::vector<double> smooth(const SparseMatrix& a, std::span<const double> b,
                           std::span<const double> x, const SmootherParams& params);

/// Floating-point operations of one smooth() call on A, for work accounting.
double smoother_flops(const SparseMatrix& a, const SmootherParams& params);

}  // namespace mgpbd
