#include "mgpbd/constraints.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace mgpbd {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

Mat3 edge_matrix(const std::vector<Vec3>& x, std::span<const Index> t) {
  Mat3 d;
  d.col(0) = x[t[1]] - x[t[0]];
  d.col(1) = x[t[2]] - x[t[0]];
  d.col(2) = x[t[3]] - x[t[0]];
  return d;
}

}  // namespace

void ParticleState::validate() const {
  const std::size_t n = x.size();
  require(x_pred.size() == n && x_old.size() == n && v.size() == n && inv_mass.size() == n,
          "ParticleState: array lengths differ");
  for (double w : inv_mass) require(w >= 0.0, "ParticleState: negative inverse mass");
}

void ConstraintSet::resize_state() {
  const auto m = static_cast<std::size_t>(size());
  lambda.assign(m, 0.0);
  c.assign(m, 0.0);
  grads.assign(m * static_cast<std::size_t>(arity()), Vec3::Zero());
  degenerate.assign(m, 0);
  if (alpha_tilde.size() != m) alpha_tilde.assign(m, 0.0);
}

void ConstraintSet::validate(std::size_t n_vertices) const {
  require(topology.size() % static_cast<std::size_t>(arity()) == 0,
          "ConstraintSet: topology length not a multiple of arity");
  const auto m = static_cast<std::size_t>(size());
  for (Index v : topology)
    require(v >= 0 && static_cast<std::size_t>(v) < n_vertices, "ConstraintSet: vertex out of range");
  require(alpha_tilde.size() == m && lambda.size() == m && c.size() == m &&
              grads.size() == m * static_cast<std::size_t>(arity()) && degenerate.size() == m,
          "ConstraintSet: per-constraint array lengths differ");
  for (double a : alpha_tilde) require(a >= 0.0, "ConstraintSet: negative compliance");
  if (kind == ConstraintKind::distance) {
    require(rest_length.size() == m, "ConstraintSet: rest_length length");
  } else {
    require(rest_inv.size() == m && rest_volume.size() == m, "ConstraintSet: ARAP rest data length");
    for (std::size_t j = 0; j < m; ++j) {
      require(rest_volume[j] > 0.0, "ConstraintSet: non-positive rest volume");
      require(rest_inv[j].allFinite(), "ConstraintSet: non-invertible rest shape");
    }
  }
}

ConstraintSet ConstraintSet::distance(std::vector<Index> edges, const std::vector<Vec3>& rest) {
  ConstraintSet cs;
  cs.kind = ConstraintKind::distance;
  cs.topology = std::move(edges);
  const Index m = cs.size();
  cs.rest_length.resize(m);
  for (Index j = 0; j < m; ++j) {
    const auto e = cs.vertices(j);
    cs.rest_length[j] = (rest[e[0]] - rest[e[1]]).norm();
  }
  cs.resize_state();
  return cs;
}

ConstraintSet ConstraintSet::arap(std::vector<Index> tets, const std::vector<Vec3>& rest) {
  ConstraintSet cs;
  cs.kind = ConstraintKind::arap;
  cs.topology = std::move(tets);
  const Index m = cs.size();
  cs.rest_inv.resize(m);
  cs.rest_volume.resize(m);
  for (Index j = 0; j < m; ++j) {
    const Mat3 dm = edge_matrix(rest, cs.vertices(j));
    const double vol = dm.determinant() / 6.0;
    if (!(vol > 0.0)) throw std::invalid_argument("ConstraintSet::arap: tetrahedron not positively oriented");
    cs.rest_volume[j] = vol;
    cs.rest_inv[j] = dm.inverse();
  }
  cs.resize_state();
  return cs;
}

// ---------------------------------------------------------------------------

void eval_distance(const ParticleState& state, ConstraintSet& cs) {
  require(cs.kind == ConstraintKind::distance, "eval_distance: wrong constraint kind");
  const Index m = cs.size();
  for (Index j = 0; j < m; ++j) {
    const auto e = cs.vertices(j);
    const Vec3 d = state.x[e[0]] - state.x[e[1]];
    const double len = d.norm();
    cs.c[j] = len - cs.rest_length[j];
    Vec3* g = &cs.grads[static_cast<std::size_t>(j) * 2];
    if (len <= kDegenerateLength) {
      g[0].setZero();
      g[1].setZero();
      cs.degenerate[j] = 1;
      continue;
    }
    cs.degenerate[j] = 0;
    g[0] = d / len;
    g[1] = -g[0];
  }
}

Mat3 polar_rotation(const Mat3& f) {
  if (f.isZero(0.0)) return Mat3::Identity();
  Eigen::JacobiSVD<Mat3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  // Singular values come sorted descending, so column 2 pairs with the smallest.
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

void eval_arap(const ParticleState& state, ConstraintSet& cs) {
  require(cs.kind == ConstraintKind::arap, "eval_arap: wrong constraint kind");
  const Index m = cs.size();
  for (Index j = 0; j < m; ++j) {
    Vec3* g = &cs.grads[static_cast<std::size_t>(j) * 4];
    const Mat3 f = edge_matrix(state.x, cs.vertices(j)) * cs.rest_inv[j];
    if (!f.allFinite()) {
      cs.c[j] = 0.0;
      for (int k = 0; k < 4; ++k) g[k].setZero();
      cs.degenerate[j] = 1;
      continue;
    }
    cs.degenerate[j] = 0;
    const Mat3 diff = f - polar_rotation(f);
    cs.c[j] = diff.squaredNorm();
    // dC/dF = 2 (F - R); the term through dR/dF vanishes for the polar rotation.
    const Mat3 h = 2.0 * diff * cs.rest_inv[j].transpose();
    g[1] = h.col(0);
    g[2] = h.col(1);
    g[3] = h.col(2);
    g[0] = -(g[1] + g[2] + g[3]);
  }
}

void eval_constraints(const ParticleState& state, ConstraintSet& cs) {
  if (cs.kind == ConstraintKind::distance)
    eval_distance(state, cs);
  else
    eval_arap(state, cs);
}

// ---------------------------------------------------------------------------

SparsityPattern build_pattern(const ConstraintSet& cs, std::size_t n_vertices) {
  const Index m = cs.size();
  const int ar = cs.arity();
  for (Index v : cs.topology)
    require(v >= 0 && static_cast<std::size_t>(v) < n_vertices, "build_pattern: vertex out of range");

  // Vertex -> (constraint, slot) incidence.
  std::vector<Index> inc_offsets(n_vertices + 1, 0);
  for (Index v : cs.topology) ++inc_offsets[v + 1];
  for (std::size_t v = 0; v < n_vertices; ++v) inc_offsets[v + 1] += inc_offsets[v];
  std::vector<std::pair<Index, std::uint8_t>> inc(cs.topology.size());
  {
    std::vector<Index> fill(inc_offsets.begin(), inc_offsets.end() - 1);
    for (Index j = 0; j < m; ++j)
      for (int s = 0; s < ar; ++s) {
        const Index v = cs.topology[static_cast<std::size_t>(j) * ar + s];
        inc[fill[v]++] = {j, static_cast<std::uint8_t>(s)};
      }
  }

  SparsityPattern p;
  p.n = m;
  p.row_offsets.assign(m + 1, 0);
  std::vector<std::tuple<Index, Index, std::uint8_t, std::uint8_t>> rec;  // (j, v, si, sj)
  for (Index i = 0; i < m; ++i) {
    rec.clear();
    for (int si = 0; si < ar; ++si) {
      const Index v = cs.topology[static_cast<std::size_t>(i) * ar + si];
      for (Index k = inc_offsets[v]; k < inc_offsets[v + 1]; ++k) {
        const auto [j, sj] = inc[k];
        if (j != i) rec.emplace_back(j, v, static_cast<std::uint8_t>(si), sj);
      }
    }
    std::sort(rec.begin(), rec.end());
    for (std::size_t r = 0; r < rec.size(); ++r) {
      const auto& [j, v, si, sj] = rec[r];
      if (r == 0 || std::get<0>(rec[r - 1]) != j) {
        p.col_indices.push_back(j);
        p.shared_offsets.push_back(p.shared_offsets.back());
      }
      p.shared.push_back({v, si, sj});
      ++p.shared_offsets.back();
    }
    p.col_indices.push_back(i);
    p.shared_offsets.push_back(p.shared_offsets.back());
    p.row_offsets[i + 1] = static_cast<Index>(p.col_indices.size());
  }
  return p;
}

SparseMatrix allocate_system(const SparsityPattern& pattern) {
  SparseMatrix a(pattern.n, pattern.n);
  a.row_offsets = pattern.row_offsets;
  a.col_indices = pattern.col_indices;
  a.values.assign(pattern.col_indices.size(), 0.0);
  a.diag_last = true;
  return a;
}

void assemble_system(const ConstraintSet& cs, std::span<const double> inv_mass,
                     const SparsityPattern& pattern, SparseMatrix& a) {
  const Index m = cs.size();
  const int ar = cs.arity();
  require(pattern.n == m, "assemble_system: pattern/topology size mismatch");
  require(a.n_rows == m && a.n_cols == m && a.col_indices.size() == pattern.col_indices.size() &&
              a.diag_last,
          "assemble_system: matrix not allocated from this pattern");
  for (Index i = 0; i < m; ++i) {
    const Vec3* gi = &cs.grads[static_cast<std::size_t>(i) * ar];
    const Index begin = pattern.row_offsets[i], end = pattern.row_offsets[i + 1];
    require(end > begin && pattern.col_indices[end - 1] == i,
            "assemble_system: pattern/topology mismatch");
    for (Index k = begin; k < end - 1; ++k) {
      const Vec3* gj = &cs.grads[static_cast<std::size_t>(pattern.col_indices[k]) * ar];
      double s = 0.0;
      for (Index q = pattern.shared_offsets[k]; q < pattern.shared_offsets[k + 1]; ++q) {
        const auto& sh = pattern.shared[q];
        s += inv_mass[sh.vertex] * gi[sh.slot_i].dot(gj[sh.slot_j]);
      }
      a.values[k] = s;
    }
    double d = cs.alpha_tilde[i];
    const auto verts = cs.vertices(i);
    for (int s = 0; s < ar; ++s) d += inv_mass[verts[s]] * gi[s].squaredNorm();
    a.values[end - 1] = d;
  }
}

SparseMatrix assemble_system(const ConstraintSet& cs, std::span<const double> inv_mass,
                             const SparsityPattern& pattern) {
  SparseMatrix a = allocate_system(pattern);
  assemble_system(cs, inv_mass, pattern, a);
  return a;
}

void rhs(const ConstraintSet& cs, std::span<double> b) {
  const Index m = cs.size();
  require(b.size() == static_cast<std::size_t>(m), "rhs: length mismatch");
  for (Index j = 0; j < m; ++j) b[j] = -cs.c[j] - cs.alpha_tilde[j] * cs.lambda[j];
}

std::vector<double> rhs(const ConstraintSet& cs) {
  std::vector<double> b(cs.size());
  rhs(cs, b);
  return b;
}

void apply_dx(const ConstraintSet& cs, std::span<const double> inv_mass,
              std::span<const double> dlambda, std::span<Vec3> dx) {
  const Index m = cs.size();
  const int ar = cs.arity();
  require(dlambda.size() == static_cast<std::size_t>(m), "apply_dx: dlambda length mismatch");
  require(dx.size() == inv_mass.size(), "apply_dx: dx length mismatch");
  std::fill(dx.begin(), dx.end(), Vec3::Zero());
  // Serial scatter in constraint order.
  for (Index j = 0; j < m; ++j) {
    const auto verts = cs.vertices(j);
    const Vec3* g = &cs.grads[static_cast<std::size_t>(j) * ar];
    for (int s = 0; s < ar; ++s) dx[verts[s]] += (inv_mass[verts[s]] * dlambda[j]) * g[s];
  }
}

std::vector<Vec3> apply_dx(const ConstraintSet& cs, std::span<const double> inv_mass,
                           std::span<const double> dlambda) {
  std::vector<Vec3> dx(inv_mass.size());
  apply_dx(cs, inv_mass, dlambda, dx);
  return dx;
}

double make_compliance(double mu, double volume, double dt) {
  if (!(mu > 0.0) || !(volume > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("make_compliance: stiffness, volume and dt must be positive");
  return 1.0 / (mu * volume * dt * dt);
}

}  // namespace mgpbd
