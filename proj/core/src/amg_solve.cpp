#include "mgpbd/amg_solve.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

namespace mgpbd {

void refresh_operators(AmgHierarchy& h, const SparseMatrix& a0) {
  if (h.empty()) throw std::invalid_argument("refresh_operators: empty hierarchy");
  AmgLevel& fine = h.levels.front();
  if (a0.n_rows != fine.a.n_rows || a0.col_indices != fine.a.col_indices)
    throw std::invalid_argument("refresh_operators: matrix pattern differs from the hierarchy's");
  fine.a.values = a0.values;
  for (std::size_t l = 0; l + 1 < h.levels.size(); ++l)
    h.levels[l].galerkin.apply(h.levels[l].a, h.levels[l + 1].a);
  for (std::size_t l = 0; l < h.levels.size(); ++l) {
    AmgLevel& lev = h.levels[l];
    lev.inv_diag = diagonal(lev.a);
    for (auto& d : lev.inv_diag) d = d != 0.0 ? 1.0 / d : 0.0;
    if (h.config.refresh_smoother && (l + 1 < h.levels.size() || !h.coarse_direct)) {
      SmootherConfig sc = h.config.smoother;
      sc.seed = h.config.smoother.seed + l;
      lev.smoother = compute_smoother_params(lev.a, sc);
    }
  }
  if (h.coarse_direct) h.coarse_solver.factor(to_dense(h.levels.back().a));
}

namespace {

void cycle(const AmgHierarchy& h, std::size_t l, std::span<const double> b, std::span<double> z,
           double& flops) {
  const AmgLevel& lev = h.levels[l];
  if (l + 1 == h.levels.size() && !h.coarse_direct) {
    std::fill(z.begin(), z.end(), 0.0);
    std::vector<double> scratch(3 * static_cast<std::size_t>(lev.size()));
    smooth(lev.a, lev.inv_diag, b, z, lev.smoother, scratch);
    smooth(lev.a, lev.inv_diag, b, z, lev.smoother, scratch, true);
    flops += 2.0 * smoother_flops(lev.a, lev.smoother);
    return;
  }
  if (l + 1 == h.levels.size()) {
    h.coarse_solver.solve(b, z);
    const double n = lev.size();
    flops += 2.0 * n * n;
    return;
  }
  const Index n = lev.size();
  std::fill(z.begin(), z.end(), 0.0);
  std::vector<double> scratch(3 * static_cast<std::size_t>(n));
  smooth(lev.a, lev.inv_diag, b, z, lev.smoother, scratch);

  std::vector<double> r(n);
  residual(lev.a, z, b, r);
  const SparseMatrix& pt = lev.galerkin.restrictor();
  const SparseMatrix& p = *lev.p;
  std::vector<double> bc(pt.n_rows), zc(pt.n_rows);
  spmv(pt, r, bc);
  cycle(h, l + 1, bc, zc, flops);
  std::vector<double> corr(n);
  spmv(p, zc, corr);
  for (Index i = 0; i < n; ++i) z[i] += corr[i];

  smooth(lev.a, lev.inv_diag, b, z, lev.smoother, scratch, true);
  flops += 2.0 * smoother_flops(lev.a, lev.smoother) + 2.0 * lev.a.nnz() + n +
           4.0 * p.nnz() + n;
}

}  // namespace

void vcycle(const AmgHierarchy& h, std::span<const double> b, std::span<double> z, double* flops) {
  if (h.empty()) throw std::invalid_argument("vcycle: empty hierarchy");
  if (b.size() != static_cast<std::size_t>(h.fine_size()) || z.size() != b.size())
    throw std::invalid_argument("vcycle: vector length != finest level size");
  double f = 0.0;
  cycle(h, 0, b, z, f);
  if (flops) *flops += f;
}

std::vector<double> vcycle(const AmgHierarchy& h, std::span<const double> b) {
  std::vector<double> z(b.size());
  vcycle(h, b, z);
  return z;
}

double vcycle_flops(const AmgHierarchy& h) {
  if (h.empty()) return 0.0;
  double f = 0.0;
  for (std::size_t l = 0; l + 1 < h.levels.size(); ++l) {
    const AmgLevel& lev = h.levels[l];
    const double n = lev.size();
    f += 2.0 * smoother_flops(lev.a, lev.smoother) + 2.0 * lev.a.nnz() + n + 4.0 * lev.p->nnz() + n;
  }
  const double nc = h.levels.back().size();
  return f + 2.0 * nc * nc;
}

std::vector<double> pcg(const SparseMatrix& a, std::span<const double> b, const Preconditioner& m,
                        double tol, int maxiter, SolveReport& report, double precond_flops) {
  if (!a.square() || b.size() != static_cast<std::size_t>(a.n_rows))
    throw std::invalid_argument("pcg: dimension mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("pcg: tol must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = a.n_rows;
  report = SolveReport{};
  std::vector<double> x(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    report.converged = true;
    return x;
  }
  const double nnz2 = 2.0 * a.nnz();
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), ap(n);
  m(r, z);
  report.flops += precond_flops;
  double rz = dot(r, z);
  if (!(rz > 0.0))
    throw IndefinitePreconditionerError("pcg: <r, M r> = " + std::to_string(rz) + " at iteration 0");
  p = z;
  for (int it = 0; it < maxiter; ++it) {
    spmv(a, p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0))
      throw IndefinitePreconditionerError("pcg: <p, A p> = " + std::to_string(pap) +
                                          " at iteration " + std::to_string(it));
    const double alpha = rz / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    const double rel = norm2(r) / bnorm;
    report.rel_residual_history.push_back(rel);
    report.iterations = it + 1;
    report.flops += nnz2 + 10.0 * n;
    if (rel <= tol) {
      report.converged = true;
      break;
    }
    m(r, z);
    report.flops += precond_flops;
    const double rz_new = dot(r, z);
    if (!(rz_new > 0.0))
      throw IndefinitePreconditionerError("pcg: <r, M r> = " + std::to_string(rz_new) +
                                          " at iteration " + std::to_string(it + 1));
    const double beta = rz_new / rz;
    rz = rz_new;
    for (Index i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    report.flops += 4.0 * n;
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return x;
}

std::vector<double> mgpcg(const AmgHierarchy& h, const SparseMatrix& a, std::span<const double> b,
                          double tol, int maxiter, SolveReport& report) {
  if (h.empty()) throw std::invalid_argument("mgpcg: empty hierarchy");
  if (a.n_rows != h.fine_size()) throw std::invalid_argument("mgpcg: A does not match hierarchy");
  const double vf = vcycle_flops(h);
  return pcg(
      a, b, [&h](std::span<const double> r, std::span<double> z) { vcycle(h, r, z); }, tol, maxiter,
      report, vf);
}

std::vector<double> jacobi_pcg(const SparseMatrix& a, std::span<const double> b, double tol,
                               int maxiter, SolveReport& report) {
  auto inv = diagonal(a);
  for (auto& d : inv) {
    if (!(d > 0.0)) throw std::invalid_argument("jacobi_pcg: non-positive diagonal");
    d = 1.0 / d;
  }
  return pcg(
      a, b,
      [&inv](std::span<const double> r, std::span<double> z) {
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv[i] * r[i];
      },
      tol, maxiter, report, static_cast<double>(a.n_rows));
}

void write_solve_report_csv(std::ostream& os, const SolveReport& r, long frame, int outer_iteration) {
  for (std::size_t k = 0; k < r.rel_residual_history.size(); ++k)
    os << frame << ',' << outer_iteration << ',' << k << ',' << r.rel_residual_history[k] << '\n';
}

}  // namespace mgpbd
