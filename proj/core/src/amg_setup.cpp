#include "mgpbd/amg_setup.hpp"

#include "mgpbd/random.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mgpbd {

SparseMatrix strength_filter(const SparseMatrix& a, double theta_s) {
  if (!a.square()) throw std::invalid_argument("strength_filter: matrix not square");
  if (theta_s < 0.0) throw std::invalid_argument("strength_filter: theta_s must be >= 0");
  const auto d = diagonal(a);
  SparseMatrix s(a.n_rows, a.n_cols);
  std::vector<std::pair<Index, double>> row;
  for (Index i = 0; i < a.n_rows; ++i) {
    row.clear();
    for (Index k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
      const Index j = a.col_indices[k];
      const double v = a.values[k];
      if (j == i || v == 0.0) continue;
      // A zero diagonal makes the threshold 0, so every nonzero coupling is kept.
      if (std::abs(v) >= theta_s * std::sqrt(std::abs(d[i]) * std::abs(d[j]))) row.emplace_back(j, v);
    }
    std::sort(row.begin(), row.end());
    for (const auto& [j, v] : row) {
      s.col_indices.push_back(j);
      s.values.push_back(v);
    }
    s.row_offsets[i + 1] = s.nnz();
  }
  return s;
}

Aggregation aggregate(const SparseMatrix& strength) {
  const Index n = strength.n_rows;
  constexpr Index kNone = -1;
  Aggregation out;
  out.agg.assign(n, kNone);

  // Pass 1: seed aggregates in ascending node order.
  for (Index i = 0; i < n; ++i) {
    if (out.agg[i] != kNone) continue;
    const auto nbrs = strength.row_cols(i);
    if (nbrs.empty()) {
      out.agg[i] = out.n_agg++;
      continue;
    }
    const bool touches = std::any_of(nbrs.begin(), nbrs.end(), [&](Index j) { return out.agg[j] != kNone; });
    if (touches) continue;
    const Index id = out.n_agg++;
    out.agg[i] = id;
    for (Index j : nbrs) out.agg[j] = id;
  }

  // Pass 2: leftovers join the neighbouring pass-1 aggregate with the strongest coupling.
  const std::vector<Index> first = out.agg;
  for (Index i = 0; i < n; ++i) {
    if (first[i] != kNone) continue;
    const auto nbrs = strength.row_cols(i);
    const auto vals = strength.row_vals(i);
    Index best = kNone;
    double best_w = -1.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const Index a = first[nbrs[k]];
      if (a == kNone) continue;
      const double w = std::abs(vals[k]);
      if (w > best_w || (w == best_w && a < best)) {
        best_w = w;
        best = a;
      }
    }
    // Cannot happen for symmetric S: a pass-1 skip implies an aggregated neighbour.
    out.agg[i] = best != kNone ? best : out.n_agg++;
  }
  return out;
}

DenseBlock ones_kernel(Index n, int k) {
  DenseBlock b(n, k);
  std::fill(b.values.begin(), b.values.end(), 1.0);
  return b;
}

DenseBlock bootstrap_near_kernel(const SparseMatrix& a, int k, int sweeps, std::uint64_t seed) {
  if (!a.square()) throw std::invalid_argument("bootstrap_near_kernel: matrix not square");
  if (k < 1 || sweeps < 1) throw std::invalid_argument("bootstrap_near_kernel: k and sweeps must be >= 1");
  const Index n = a.n_rows;
  double amax = 0.0;
  for (double v : a.values) amax = std::max(amax, std::abs(v));
  if (amax == 0.0) amax = 1.0;
  const auto d = diagonal(a);

  DenseBlock b(n, k);
  std::vector<double> x(n);
  for (int c = 0; c < k; ++c) {
    Rng rng(seed ^ static_cast<std::uint64_t>(c));
    for (auto& xi : x) xi = amax * rng.open01();
    for (int s = 0; s < sweeps; ++s) {
      for (Index i = 0; i < n; ++i) {
        if (d[i] == 0.0) continue;
        double acc = 0.0;
        for (Index q = a.row_offsets[i]; q < a.row_offsets[i + 1]; ++q) {
          const Index j = a.col_indices[q];
          if (j != i) acc -= a.values[q] * x[j];
        }
        x[i] = acc / d[i];
      }
    }
    if (norm2(x) < 1e-14 * n) std::fill(x.begin(), x.end(), 1.0);
    for (Index i = 0; i < n; ++i) b(i, c) = x[i];
  }
  return b;
}

Prolongation build_prolongator(std::span<const Index> agg, Index n_agg, const DenseBlock& b) {
  const Index n = static_cast<Index>(agg.size());
  if (b.rows != n) throw std::invalid_argument("build_prolongator: B rows != node count");
  const Index k = b.cols;

  // Nodes of each aggregate, ascending.
  std::vector<Index> member_offsets(n_agg + 1, 0);
  for (Index a : agg) {
    if (a < 0 || a >= n_agg) throw std::invalid_argument("build_prolongator: aggregate id out of range");
    ++member_offsets[a + 1];
  }
  for (Index a = 0; a < n_agg; ++a) member_offsets[a + 1] += member_offsets[a];
  std::vector<Index> members(n);
  {
    std::vector<Index> fill(member_offsets.begin(), member_offsets.end() - 1);
    for (Index i = 0; i < n; ++i) members[fill[agg[i]]++] = i;
  }

  // Per-node row of P: (coarse column, value) pairs, plus rows of the next B.
  std::vector<std::vector<std::pair<Index, double>>> prow(n);
  std::vector<double> bnext;
  Prolongation out;
  out.offsets.assign(n_agg + 1, 0);

  std::vector<std::vector<double>> q;  // kept orthonormal columns of the current block
  std::vector<double> v, coeff;
  for (Index a = 0; a < n_agg; ++a) {
    const Index begin = member_offsets[a], size = member_offsets[a + 1] - begin;
    q.clear();
    std::vector<std::vector<double>> rrows;  // R rows of kept columns, length k each
    for (Index c = 0; c < k; ++c) {
      v.assign(size, 0.0);
      for (Index r = 0; r < size; ++r) v[r] = b(members[begin + r], c);
      const double orig = norm2(v);
      coeff.assign(q.size(), 0.0);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t j = 0; j < q.size(); ++j) {
          const double s = dot(q[j], v);
          axpy(-s, q[j], v);
          coeff[j] += s;
        }
      for (std::size_t j = 0; j < q.size(); ++j) rrows[j][c] = coeff[j];
      const double rem = norm2(v);
      if (orig == 0.0 || rem <= 1e-10 * orig || static_cast<Index>(q.size()) == size) continue;
      for (auto& vi : v) vi /= rem;
      q.push_back(v);
      rrows.emplace_back(k, 0.0);
      rrows.back()[c] = rem;
    }
    if (q.empty()) {
      // Zero block: keep one unit column so every node stays represented.
      q.emplace_back(size, 1.0 / std::sqrt(static_cast<double>(size)));
      rrows.emplace_back(k, 0.0);
    }
    const Index col0 = out.offsets[a];
    out.offsets[a + 1] = col0 + static_cast<Index>(q.size());
    for (Index r = 0; r < size; ++r)
      for (std::size_t j = 0; j < q.size(); ++j)
        prow[members[begin + r]].emplace_back(col0 + static_cast<Index>(j), q[j][r]);
    for (const auto& rr : rrows) bnext.insert(bnext.end(), rr.begin(), rr.end());
  }

  const Index m = out.offsets[n_agg];
  out.p = SparseMatrix(n, m);
  for (Index i = 0; i < n; ++i) {
    for (const auto& [col, val] : prow[i]) {
      out.p.col_indices.push_back(col);
      out.p.values.push_back(val);
    }
    out.p.row_offsets[i + 1] = out.p.nnz();
  }
  out.b_next = DenseBlock(m, k);
  out.b_next.values = std::move(bnext);
  return out;
}

AmgHierarchy build_hierarchy(const SparseMatrix& a0, const AmgConfig& cfg) {
  if (!a0.square()) throw std::invalid_argument("build_hierarchy: matrix not square");
  if (cfg.n_kernel_vecs < 1) throw std::invalid_argument("build_hierarchy: need at least one kernel vector");
  AmgHierarchy h;
  h.config = cfg;
  h.levels.emplace_back();
  h.levels.back().a = a0;
  h.levels.back().b = cfg.kernel == KernelSource::bootstrap
                          ? bootstrap_near_kernel(a0, cfg.n_kernel_vecs, cfg.bootstrap_sweeps, cfg.seed)
                          : ones_kernel(a0.n_rows, cfg.n_kernel_vecs);

  while (static_cast<int>(h.levels.size()) < cfg.max_levels) {
    AmgLevel& fine = h.levels.back();
    if (fine.size() < cfg.min_coarse_size) break;
    const SparseMatrix s = strength_filter(fine.a, cfg.theta_s);
    Aggregation ag = aggregate(s);
    Prolongation pro = build_prolongator(ag.agg, ag.n_agg, fine.b);
    if (pro.p.n_cols > cfg.stall_ratio * fine.size()) {
      h.stalled = true;
      break;
    }
    fine.galerkin = GalerkinPlan(pro.p, fine.a);
    AmgLevel coarse;
    coarse.a = fine.galerkin.apply(fine.a);
    coarse.b = std::move(pro.b_next);
    fine.agg = std::move(ag.agg);
    fine.n_agg = ag.n_agg;
    fine.p = std::move(pro.p);
    h.levels.push_back(std::move(coarse));
  }

  h.coarse_direct = h.levels.back().size() <= cfg.max_direct_size;
  double nnz = 0.0;
  for (std::size_t l = 0; l < h.levels.size(); ++l) {
    AmgLevel& lev = h.levels[l];
    nnz += lev.a.nnz();
    lev.inv_diag = diagonal(lev.a);
    for (auto& d : lev.inv_diag) d = d != 0.0 ? 1.0 / d : 0.0;
    if (l + 1 < h.levels.size() || !h.coarse_direct) {
      SmootherConfig sc = cfg.smoother;
      sc.seed = cfg.smoother.seed + l;
      lev.smoother = compute_smoother_params(lev.a, sc);
    }
  }
  h.operator_complexity = a0.nnz() > 0 ? nnz / a0.nnz() : 1.0;
  if (h.coarse_direct) h.coarse_solver.factor(to_dense(h.levels.back().a));
  return h;
}

void write_hierarchy_report(std::ostream& os, const AmgHierarchy& h) {
  os << "levels " << h.levels.size() << '\n';
  os << "operator_complexity " << h.operator_complexity << '\n';
  os << "stalled " << (h.stalled ? 1 : 0) << '\n';
  os << "frame_built " << h.frame_built << '\n';
  os << "level,size,nnz,kernel_vectors,aggregates,omega,lambda_max\n";
  for (std::size_t l = 0; l < h.levels.size(); ++l) {
    const AmgLevel& lev = h.levels[l];
    os << l << ',' << lev.size() << ',' << lev.a.nnz() << ',' << lev.b.cols << ',' << lev.n_agg << ','
       << lev.smoother.omega << ',' << lev.smoother.lambda_max << '\n';
  }
}

}  // namespace mgpbd
