// Kernels on cloth dual systems of growing size: SpMV, Galerkin product,
// one V-cycle, system assembly and full setup.

#include "mgpbd/amg_solve.hpp"
#include "mgpbd/scenes.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace mgpbd;

namespace {

struct Cloth {
  ParticleState state;
  ConstraintSet cs;
  SparsityPattern pattern;
  SparseMatrix a;
  AmgConfig amg;
};

// Frame-0 system of the n x n structural cloth preset, built once per size.
const Cloth& cloth(Index n) {
  static std::map<Index, Cloth> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const SceneDef s = preset("cloth" + std::to_string(n));
  Cloth c{make_state(s), make_constraints(s), {}, {}, s.sim.amg};
  eval_constraints(c.state, c.cs);
  c.pattern = build_pattern(c.cs, c.state.size());
  c.a = assemble_system(c.cs, c.state.inv_mass, c.pattern);
  return cache.emplace(n, std::move(c)).first->second;
}

std::vector<double> ones(Index n) { return std::vector<double>(static_cast<std::size_t>(n), 1.0); }

void set_counters(benchmark::State& st, const SparseMatrix& a) {
  st.counters["rows"] = static_cast<double>(a.n_rows);
  st.counters["nnz"] = static_cast<double>(a.nnz());
}

void BM_Spmv(benchmark::State& st) {
  const Cloth& c = cloth(st.range(0));
  const auto x = ones(c.a.n_cols);
  std::vector<double> y(c.a.n_rows);
  for (auto _ : st) {
    spmv(c.a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  set_counters(st, c.a);
  st.SetItemsProcessed(st.iterations() * c.a.nnz());
}

void BM_Assemble(benchmark::State& st) {
  const Cloth& c = cloth(st.range(0));
  SparseMatrix a = allocate_system(c.pattern);
  for (auto _ : st) {
    assemble_system(c.cs, c.state.inv_mass, c.pattern, a);
    benchmark::DoNotOptimize(a.values.data());
  }
  set_counters(st, a);
}

void BM_Galerkin(benchmark::State& st) {
  const Cloth& c = cloth(st.range(0));
  const AmgHierarchy h = build_hierarchy(c.a, c.amg);
  const SparseMatrix& p = *h.levels.front().p;
  for (auto _ : st) benchmark::DoNotOptimize(galerkin_product(p, c.a));
  set_counters(st, c.a);
}

void BM_Refresh(benchmark::State& st) {
  const Cloth& c = cloth(st.range(0));
  AmgHierarchy h = build_hierarchy(c.a, c.amg);
  for (auto _ : st) refresh_operators(h, c.a);
  set_counters(st, c.a);
}

void BM_Setup(benchmark::State& st) {
  const Cloth& c = cloth(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(build_hierarchy(c.a, c.amg));
  set_counters(st, c.a);
}

void BM_Vcycle(benchmark::State& st) {
  const Cloth& c = cloth(st.range(0));
  const AmgHierarchy h = build_hierarchy(c.a, c.amg);
  const auto b = ones(c.a.n_rows);
  std::vector<double> z(b.size());
  for (auto _ : st) {
    vcycle(h, b, z);
    benchmark::DoNotOptimize(z.data());
  }
  set_counters(st, c.a);
  st.counters["flops"] = vcycle_flops(h);
}

}  // namespace

BENCHMARK(BM_Spmv)->Arg(16)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_Assemble)->Arg(16)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_Galerkin)->Arg(16)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Refresh)->Arg(16)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Setup)->Arg(16)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Vcycle)->Arg(16)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
