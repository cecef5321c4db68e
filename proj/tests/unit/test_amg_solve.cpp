#include "mgpbd/amg_solve.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <sstream>

using namespace mgpbd;

namespace {

AmgConfig two_level_config(SmootherKind kind = SmootherKind::omega_jacobi) {
  AmgConfig cfg;
  cfg.min_coarse_size = 150;
  cfg.n_kernel_vecs = 1;
  cfg.kernel = KernelSource::ones;
  cfg.smoother.kind = kind;
  return cfg;
}

double true_residual(const SparseMatrix& a, const std::vector<double>& x, const std::vector<double>& b) {
  return (oracle::vec(b) - oracle::dense(a) * oracle::vec(x)).norm() / oracle::vec(b).norm();
}

}  // namespace

TEST_CASE("single-level vcycle is the direct solve") {
  Rng rng(2);
  const SparseMatrix a = oracle::random_spd(120, 0.04, rng);
  const AmgHierarchy h = build_hierarchy(a, AmgConfig{});
  REQUIRE(h.levels.size() == 1);
  const auto b = oracle::random_vector(120, rng);
  const auto z = vcycle(h, b);
  const auto x = dense_solve(to_dense(a), b);
  CHECK((oracle::vec(z) - oracle::vec(x)).norm() <= 1e-12 * oracle::vec(x).norm());
  CHECK(vcycle(h, std::vector<double>(120, 0.0)) == std::vector<double>(120, 0.0));
  CHECK_THROWS_AS(vcycle(AmgHierarchy{}, b), std::invalid_argument);
  CHECK_THROWS_AS(vcycle(h, std::vector<double>(3, 1.0)), std::invalid_argument);
}

TEST_CASE("vcycle is linear and symmetric") {
  Rng rng(17);
  const SparseMatrix a = oracle::random_spd(300, 0.01, rng);
  for (SmootherKind kind : {SmootherKind::omega_jacobi, SmootherKind::chebyshev, SmootherKind::gauss_seidel}) {
    const AmgHierarchy h = build_hierarchy(a, two_level_config(kind));
    REQUIRE(h.levels.size() == 2);
    CHECK(vcycle(h, std::vector<double>(300, 0.0)) == std::vector<double>(300, 0.0));
    for (int trial = 0; trial < 20; ++trial) {
      const auto u = oracle::random_vector(300, rng), v = oracle::random_vector(300, rng);
      const Eigen::VectorXd mu = oracle::vec(vcycle(h, u)), mv = oracle::vec(vcycle(h, v));
      const double s = 1.7, t = -0.4;
      std::vector<double> w(300);
      for (int i = 0; i < 300; ++i) w[i] = s * u[i] + t * v[i];
      const Eigen::VectorXd mw = oracle::vec(vcycle(h, w));
      CHECK((mw - (s * mu + t * mv)).norm() <= 1e-10 * mw.norm());
      const double lhs = mu.dot(oracle::vec(v)), rhs = oracle::vec(u).dot(mv);
      CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(lhs));
      CHECK(mu.dot(oracle::vec(u)) > 0.0);
    }
  }
}

TEST_CASE("pcg trivial cases") {
  SolveReport r;
  const SparseMatrix id = SparseMatrix::identity(5);
  const AmgHierarchy h = build_hierarchy(id, AmgConfig{});
  auto x = mgpcg(h, id, std::vector<double>(5, 0.0), 1e-8, 100, r);
  CHECK(x == std::vector<double>(5, 0.0));
  CHECK(r.iterations == 0);
  CHECK(r.converged);
  CHECK(r.rel_residual_history == std::vector<double>{1.0});

  const std::vector<double> b{1, 2, 3, 4, 5};
  x = mgpcg(h, id, b, 1e-8, 100, r);
  CHECK(r.iterations == 1);
  for (int i = 0; i < 5; ++i) CHECK(x[i] == doctest::Approx(b[i]));
  CHECK(r.rel_residual_history.size() == static_cast<std::size_t>(r.iterations + 1));
}

TEST_CASE("mgpcg converges on SPD fixtures") {
  Rng rng(29);
  std::vector<SparseMatrix> fixtures;
  for (int i = 0; i < 5; ++i) fixtures.push_back(oracle::random_spd(300 + 50 * i, 0.01, rng));
  fixtures.push_back(fixture::cloth_system(16, ClothEdges::structural, 2));
  for (const SparseMatrix& a : fixtures) {
    const AmgHierarchy h = build_hierarchy(a, two_level_config());
    const auto b = oracle::random_vector(a.n_rows, rng);
    SolveReport r;
    const auto x = mgpcg(h, a, b, 1e-8, 200, r);
    CHECK(r.converged);
    CHECK(r.iterations <= 200);
    CHECK(r.rel_residual_history.size() == static_cast<std::size_t>(r.iterations + 1));
    CHECK(r.rel_residual_history.back() <= 1e-8);
    CHECK(true_residual(a, x, b) <= 1e-7);
    CHECK(r.flops > 0.0);

    SolveReport again;
    mgpcg(h, a, b, 1e-8, 200, again);
    CHECK(again.rel_residual_history == r.rel_residual_history);
  }
}

TEST_CASE("mgpcg beats diagonal PCG on the cloth system") {
  const SparseMatrix a = fixture::cloth_system(64, ClothEdges::shear, 1);
  AmgConfig cfg;
  cfg.n_kernel_vecs = 1;
  cfg.smoother.kind = SmootherKind::chebyshev;
  const AmgHierarchy h = build_hierarchy(a, cfg);
  Rng rng(1);
  const auto b = oracle::random_vector(a.n_rows, rng);
  SolveReport mg, jac;
  mgpcg(h, a, b, 1e-4, 2000, mg);
  jacobi_pcg(a, b, 1e-4, 2000, jac);
  CHECK(mg.converged);
  CHECK(mg.iterations < jac.iterations);
}

TEST_CASE("indefinite preconditioner is reported") {
  const SparseMatrix id = SparseMatrix::identity(3);
  SolveReport r;
  const Preconditioner flip = [](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = -in[i];
  };
  CHECK_THROWS_AS(pcg(id, std::vector<double>{1, 1, 1}, flip, 1e-8, 10, r), IndefinitePreconditionerError);
}

TEST_CASE("refresh follows new fine values") {
  Rng rng(8);
  const SparseMatrix a = oracle::random_spd(300, 0.01, rng);
  AmgHierarchy h = build_hierarchy(a, two_level_config());
  SparseMatrix scaled = a;
  for (auto& v : scaled.values) v *= 3.0;
  refresh_operators(h, scaled);
  const AmgHierarchy fresh = build_hierarchy(scaled, two_level_config());
  for (std::size_t l = 0; l < h.levels.size(); ++l)
    CHECK(oracle::rel_diff(oracle::dense(h.levels[l].a), oracle::dense(fresh.levels[l].a)) <= 1e-12);
  const auto b = oracle::random_vector(300, rng);
  SolveReport r;
  mgpcg(h, scaled, b, 1e-8, 200, r);
  CHECK(r.converged);
}

TEST_CASE("solve report csv") {
  SolveReport r;
  r.iterations = 2;
  r.rel_residual_history = {1.0, 0.5, 0.25};
  std::ostringstream os;
  write_solve_report_csv(os, r, 3, 1);
  CHECK(os.str() == "3,1,0,1\n3,1,1,0.5\n3,1,2,0.25\n");
}
