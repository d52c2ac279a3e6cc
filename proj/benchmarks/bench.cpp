// Microbenchmarks for the inner-loop hot spots: genome expression and scoring,
// Sobol draws, GP fitting and prediction, archive offers, and LBM stepping.
#include <benchmark/benchmark.h>

#include <vector>

#include "sphen/archive.hpp"
#include "sphen/domains.hpp"
#include "sphen/genome.hpp"
#include "sphen/gp.hpp"
#include "sphen/lbm.hpp"
#include "sphen/rng.hpp"
#include "sphen/sobol.hpp"

namespace {

using namespace sphen;

Genome random_genome(Rng& rng) {
  Genome g;
  for (int d = 0; d < Genome::kDim; ++d)
    g.v[d] = Genome::lower(d) + rng.next_double() * Genome::range(d);
  return g;
}

void bm_polygon_eval(benchmark::State& state) {
  PolygonDomain dom;
  Rng rng(7);
  const Genome g = random_genome(rng);
  for (auto _ : state) benchmark::DoNotOptimize(dom.evaluate_precise(g));
}
BENCHMARK(bm_polygon_eval);

void bm_sobol_next(benchmark::State& state) {
  SobolStream sob(16);
  for (auto _ : state) benchmark::DoNotOptimize(sob.next());
}
BENCHMARK(bm_sobol_next);

void bm_gp_fit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), dim = Genome::kDim;
  Rng rng(11);
  std::vector<double> X(static_cast<std::size_t>(n) * dim), y(n);
  for (double& v : X) v = rng.next_double();
  for (int i = 0; i < n; ++i) y[i] = X[i * dim] * X[i * dim + 3];
  for (auto _ : state) benchmark::DoNotOptimize(GpModel::fit(X, dim, y));
}
BENCHMARK(bm_gp_fit)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void bm_gp_predict(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), dim = Genome::kDim;
  Rng rng(13);
  std::vector<double> X(static_cast<std::size_t>(n) * dim), y(n), q(dim);
  for (double& v : X) v = rng.next_double();
  for (int i = 0; i < n; ++i) y[i] = X[i * dim] - X[i * dim + 5];
  for (double& v : q) v = rng.next_double();
  const GpModel m = GpModel::fit(X, dim, y);
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(q));
}
BENCHMARK(bm_gp_predict)->Arg(64)->Arg(1024);

void bm_archive_offer(benchmark::State& state) {
  Rng rng(17);
  std::vector<Elite> cands;
  for (int i = 0; i < 4096; ++i)
    cands.push_back({random_genome(rng), rng.next_double(), rng.next_double(),
                     rng.next_double(), false});
  for (auto _ : state) {
    NicheMap map(16, 16);
    for (const Elite& e : cands) benchmark::DoNotOptimize(map.offer(e));
  }
}
BENCHMARK(bm_archive_offer);

void bm_lbm_step(benchmark::State& state) {
  FlowConfig cfg = flow_desk_preset();
  Rng rng(19);
  const auto raster = rasterize(express(random_genome(rng)), cfg.raster_cells);
  Lattice lat(cfg, place_obstacle(raster, cfg.raster_cells, cfg));
  for (auto _ : state) lat.step();
  state.SetItemsProcessed(state.iterations() * cfg.nx * cfg.ny);
}
BENCHMARK(bm_lbm_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
