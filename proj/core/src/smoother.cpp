#include "mgpbd/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mgpbd {

std::string_view to_string(SmootherKind k) {
  switch (k) {
    case SmootherKind::omega_jacobi: return "omega_jacobi";
    case SmootherKind::chebyshev: return "chebyshev";
    case SmootherKind::gauss_seidel: return "gauss_seidel";
  }
  return "unknown";
}

SmootherKind smoother_kind_from_string(std::string_view s) {
  if (s == "omega_jacobi" || s == "jacobi") return SmootherKind::omega_jacobi;
  if (s == "chebyshev") return SmootherKind::chebyshev;
  if (s == "gauss_seidel" || s == "gs") return SmootherKind::gauss_seidel;
  throw std::invalid_argument("unknown smoother '" + std::string(s) + "'");
}

std::vector<double> chebyshev_coefficients(double lo, double hi, int degree) {
  if (degree < 1 || !(lo > 0.0) || !(hi >= lo))
    throw std::invalid_argument("chebyshev_coefficients: need degree >= 1 and 0 < lo <= hi");
  // Residual polynomial r(t) = prod_i (1 - t / root_i) over the Chebyshev nodes.
  std::vector<double> r{1.0};
  const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
  for (int i = 0; i < degree; ++i) {
    const double root = mid + half * std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * degree));
    std::vector<double> next(r.size() + 1, 0.0);
    for (std::size_t k = 0; k < r.size(); ++k) {
      next[k] += r[k];
      next[k + 1] -= r[k] / root;
    }
    r = std::move(next);
  }
  std::vector<double> q(degree);
  for (int i = 0; i < degree; ++i) q[i] = -r[i + 1];
  return q;
}

SmootherParams compute_smoother_params(const SparseMatrix& a, const SmootherConfig& cfg) {
  if (!a.square()) throw std::invalid_argument("compute_smoother_params: matrix not square");
  if (cfg.sweeps < 1) throw std::invalid_argument("compute_smoother_params: sweeps must be >= 1");
  const auto d = diagonal(a);
  for (double di : d)
    if (!(di > 0.0)) throw std::invalid_argument("compute_smoother_params: non-positive diagonal");
  SmootherParams p;
  p.kind = cfg.kind;
  p.sweeps = cfg.sweeps;
  p.lambda_min_est = cfg.lambda_min_est;
  // The power method approaches lambda_max from below; widen by lmax_margin but
  // never past the Gershgorin bound max_i sum_j |A_ij| / A_ii.
  double gersh = 0.0;
  for (Index i = 0; i < a.n_rows; ++i) {
    double row = 0.0;
    for (double v : a.row_vals(i)) row += std::abs(v);
    gersh = std::max(gersh, row / d[i]);
  }
  const double est = power_method_lmax_jacobi(a, d, cfg.power_iters, cfg.seed);
  p.lambda_max = est > 0.0 ? std::min(cfg.lmax_margin * est, gersh) : gersh;
  if (!(p.lambda_max > 0.0)) p.lambda_max = 1.0;
  p.omega = 2.0 / (p.lambda_max + cfg.lambda_min_est);
  if (cfg.kind == SmootherKind::chebyshev)
    p.cheb_coeffs = chebyshev_coefficients(cfg.cheb_lower_frac * p.lambda_max, p.lambda_max,
                                           cfg.cheb_degree);
  return p;
}

void smooth(const SparseMatrix& a, std::span<const double> inv_diag, std::span<const double> b,
            std::span<double> x, const SmootherParams& params, std::span<double> scratch,
            bool reverse) {
  const Index n = a.n_rows;
  if (inv_diag.size() != static_cast<std::size_t>(n) || b.size() != inv_diag.size() ||
      x.size() != inv_diag.size() || scratch.size() < 3 * inv_diag.size())
    throw std::invalid_argument("smooth: dimension mismatch");
  auto r = scratch.subspan(0, n);
  auto y = scratch.subspan(n, n);
  auto t = scratch.subspan(2 * static_cast<std::size_t>(n), n);

  switch (params.kind) {
    case SmootherKind::omega_jacobi:
      for (int s = 0; s < params.sweeps; ++s) {
        residual(a, x, b, r);
        for (Index i = 0; i < n; ++i) x[i] += params.omega * inv_diag[i] * r[i];
      }
      break;
    case SmootherKind::chebyshev: {
      const auto& q = params.cheb_coeffs;
      if (q.empty()) throw std::invalid_argument("smooth: Chebyshev coefficients not computed");
      const int deg = static_cast<int>(q.size());
      for (int s = 0; s < params.sweeps; ++s) {
        residual(a, x, b, r);
        for (Index i = 0; i < n; ++i) r[i] *= inv_diag[i];
        // Horner: y = q_{d-1} z, then y = q_k z + D^-1 A y.
        for (Index i = 0; i < n; ++i) y[i] = q[deg - 1] * r[i];
        for (int k = deg - 2; k >= 0; --k) {
          spmv(a, y, t);
          for (Index i = 0; i < n; ++i) y[i] = q[k] * r[i] + inv_diag[i] * t[i];
        }
        for (Index i = 0; i < n; ++i) x[i] += y[i];
      }
      break;
    }
    case SmootherKind::gauss_seidel:
      for (int s = 0; s < params.sweeps; ++s) {
        for (Index step = 0; step < n; ++step) {
          const Index i = reverse ? n - 1 - step : step;
          double acc = b[i];
          for (Index k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
            const Index j = a.col_indices[k];
            if (j != i) acc -= a.values[k] * x[j];
          }
          x[i] = acc * inv_diag[i];
        }
      }
      break;
  }
}

std::vector<double> smooth(const SparseMatrix& a, std::span<const double> b,
                           std::span<const double> x, const SmootherParams& params) {
  auto d = diagonal(a);
  for (auto& di : d) {
    if (!(di != 0.0)) throw std::invalid_argument("smooth: zero diagonal entry");
    di = 1.0 / di;
  }
  std::vector<double> out(x.begin(), x.end());
  std::vector<double> scratch(3 * static_cast<std::size_t>(a.n_rows));
  smooth(a, d, b, out, params, scratch);
  return out;
}

double smoother_flops(const SparseMatrix& a, const SmootherParams& params) {
  const double nnz = a.nnz(), n = a.n_rows;
  double per_sweep = 0.0;
  switch (params.kind) {
    case SmootherKind::omega_jacobi: per_sweep = 2.0 * nnz + 4.0 * n; break;
    case SmootherKind::chebyshev: {
      const double deg = static_cast<double>(params.cheb_coeffs.size());
      per_sweep = 2.0 * nnz * deg + 3.0 * n * deg + 2.0 * n;
      break;
    }
    case SmootherKind::gauss_seidel: per_sweep = 2.0 * nnz + n; break;
  }
  return per_sweep * params.sweeps;
}

}  // namespace mgpbd
