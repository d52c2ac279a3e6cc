#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "sphen/domains.hpp"
#include "sphen/qd.hpp"
#include "sphen/rng.hpp"
#include "sphen/sobol.hpp"

using namespace sphen;

namespace {

bool genome_in_bounds(const Genome& g) {
  for (int d = 0; d < Genome::kDim; ++d)
    if (g.v[d] < Genome::lower(d) || g.v[d] > Genome::upper(d)) return false;
  return true;
}

bool maps_identical(const NicheMap& a, const NicheMap& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const auto fa = a.filled_indices(), fb = b.filled_indices();
  if (fa != fb) return false;
  for (auto idx : fa) {
    const Elite &x = *a.bin(idx), &y = *b.bin(idx);
    if (std::memcmp(x.genome.v.data(), y.genome.v.data(), sizeof x.genome.v) != 0)
      return false;
    if (x.f1 != y.f1 || x.f2 != y.f2 || x.performance != y.performance ||
        x.surrogate != y.surrogate)
      return false;
  }
  return true;
}

QdConfig micro_me() {
  QdConfig c = qd_preset(Algorithm::map_elites);
  c.generations = 8;
  c.descendants = 16;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("algorithm names round trip and reject unknowns") {
  for (Algorithm a : {Algorithm::map_elites, Algorithm::sail, Algorithm::sail_restricted,
                      Algorithm::sphen})
    CHECK(algorithm_from_name(algorithm_name(a)) == a);
  CHECK(std::string(algorithm_name(Algorithm::map_elites)) == "map-elites");
  CHECK_THROWS_AS(algorithm_from_name("map_elites"), std::invalid_argument);
  CHECK_THROWS_AS(algorithm_from_name(""), std::invalid_argument);
}

TEST_CASE("presets carry the canonical per-algorithm settings") {
  const QdConfig me = qd_preset(Algorithm::map_elites);
  CHECK(me.generations == 4095);
  CHECK(me.descendants == 16);
  CHECK(me.acquisition_resolution == 16);

  const QdConfig sail = qd_preset(Algorithm::sail);
  CHECK(sail.generations == 1024);
  CHECK(sail.descendants == 32);
  CHECK(sail.acquisition_resolution == 16);

  const QdConfig sr = qd_preset(Algorithm::sail_restricted);
  CHECK(sr.generations == 63);
  CHECK(sr.descendants == 16);

  const QdConfig sp = qd_preset(Algorithm::sphen);
  CHECK(sp.generations == 1024);
  CHECK(sp.descendants == 32);
  CHECK(sp.acquisition_resolution == 32);

  for (Algorithm a : {Algorithm::map_elites, Algorithm::sail, Algorithm::sail_restricted,
                      Algorithm::sphen}) {
    const QdConfig c = qd_preset(a);
    CHECK(c.budget == 1024);
    CHECK(c.initial_samples == 16);
    CHECK(c.samples_per_iteration == 16);
    CHECK(c.prediction_resolution == 16);
    CHECK(c.kappa_acquisition == 20.0);
    CHECK(c.seed == 1);
  }
}

TEST_CASE("one map-elites generation accounts for exactly seed + children") {
  PolygonDomain dom;
  QdConfig cfg = micro_me();
  cfg.generations = 1;
  const RunResult r = run_map_elites(dom, cfg);
  REQUIRE(!r.log.rows.empty());
  CHECK(r.log.ledger.pe == 32);   // 16 seeds + 1 x 16 children, all valid
  CHECK(r.log.ledger.pfe == 32);
  const LogRow& last = r.log.rows.back();
  CHECK(last.iteration == 1);
  CHECK(last.pe == 32);
  CHECK(last.pfe == 32);
  CHECK(last.filled_fraction > 0.0);
  CHECK(std::isnan(last.nll_perf));  // no models in a plain run
  const auto st = r.prediction_map.stats();
  CHECK(st.filled > 0);
  CHECK(st.mean_performance > 0.0);
  for (auto idx : r.prediction_map.filled_indices()) {
    const Elite& e = *r.prediction_map.bin(idx);
    CHECK(genome_in_bounds(e.genome));
    CHECK_FALSE(e.surrogate);
  }
}

TEST_CASE("map-elites children stay clamped under violent mutation") {
  PolygonDomain dom;
  QdConfig cfg = micro_me();
  cfg.mutation_sigma = 0.9;
  const RunResult r = run_map_elites(dom, cfg);
  for (auto idx : r.prediction_map.filled_indices())
    CHECK(genome_in_bounds(r.prediction_map.bin(idx)->genome));
}

TEST_CASE("map-elites resume from a checkpoint matches the straight run") {
  PolygonDomain dom;
  const QdConfig cfg = micro_me();
  const RunResult straight = run_map_elites(dom, cfg);

  MapElitesState captured;
  bool have = false;
  run_map_elites(dom, cfg, nullptr,
                 [&](const MapElitesState& st) {
                   if (st.generation == 3) {
                     captured = st;
                     have = true;
                   }
                 },
                 1);
  REQUIRE(have);
  CHECK(captured.seeded);
  CHECK(captured.log.ledger.pe == 16 + 3 * 16);

  MapElitesState resume = captured;
  const RunResult rest = run_map_elites(dom, cfg, &resume);
  CHECK(maps_identical(straight.prediction_map, rest.prediction_map));
  REQUIRE(straight.log.rows.size() == rest.log.rows.size());
  for (std::size_t i = 0; i < straight.log.rows.size(); ++i) {
    CHECK(straight.log.rows[i].pe == rest.log.rows[i].pe);
    CHECK(straight.log.rows[i].filled_fraction == rest.log.rows[i].filled_fraction);
    CHECK(straight.log.rows[i].mean_performance == rest.log.rows[i].mean_performance);
  }
}

TEST_CASE("sail with the budget at the seed size runs zero acquisition rounds") {
  PolygonDomain dom;
  QdConfig cfg = qd_preset(Algorithm::sail);
  cfg.budget = cfg.initial_samples;
  cfg.generations = 8;
  cfg.descendants = 8;
  cfg.seed = 5;
  const RunResult r = run_sail(dom, cfg);
  CHECK(r.log.ledger.pe == 16);
  CHECK(r.log.ledger.pfe == 16);
  CHECK(r.samples.size() == 16);
  CHECK(r.models.perf.n() == 16);
  CHECK(r.prediction_map.stats().filled > 0);
}

TEST_CASE("a short sphen run spends its budget exactly and flags model scores") {
  PolygonDomain dom;
  QdConfig cfg = qd_preset(Algorithm::sphen);
  cfg.budget = 48;
  cfg.generations = 8;
  cfg.descendants = 8;
  cfg.acquisition_resolution = 16;
  cfg.prediction_resolution = 8;
  cfg.seed = 3;
  const RunResult r = run_sphen(dom, cfg);
  CHECK(r.log.ledger.pe == 48);   // 16 seeds + 2 rounds of 16
  CHECK(r.log.ledger.pfe == 48);  // features ride along with each precise run
  CHECK(r.samples.size() == 48);
  CHECK(r.sample_perf.size() == 48);
  CHECK(r.models.perf.n() == 48);
  CHECK(r.models.f1.n() == 48);
  CHECK(r.models.f2.n() == 48);
  REQUIRE(r.log.rows.size() >= 3);
  CHECK(std::isfinite(r.log.rows.back().nll_perf));
  CHECK(std::isfinite(r.log.rows.back().rmse_perf));

  CHECK(r.prediction_map.rows() == 8);
  CHECK(r.raw_prediction_map.rows() == 16);
  CHECK(r.prediction_map.stats().filled > 0);
  for (auto idx : r.prediction_map.filled_indices()) {
    const Elite& e = *r.prediction_map.bin(idx);
    CHECK(e.surrogate);  // model-scored deliverable
    CHECK(genome_in_bounds(e.genome));
    CHECK(e.f1 >= 0.0);
    CHECK(e.f1 <= 1.0);
  }
}

TEST_CASE("sphen resume from a checkpoint matches the straight run") {
  PolygonDomain dom;
  QdConfig cfg = qd_preset(Algorithm::sphen);
  cfg.budget = 64;
  cfg.generations = 6;
  cfg.descendants = 8;
  cfg.acquisition_resolution = 16;
  cfg.prediction_resolution = 16;
  cfg.seed = 9;
  const RunResult straight = run_sphen(dom, cfg);

  SurrogateState captured;
  bool have = false;
  run_sphen(dom, cfg, nullptr, [&](const SurrogateState& st) {
    if (!st.finished && st.outer_iter == 1 && !have) {
      captured = st;
      have = true;
    }
  });
  REQUIRE(have);

  SurrogateState resume = captured;
  const RunResult rest = run_sphen(dom, cfg, &resume);
  CHECK(maps_identical(straight.prediction_map, rest.prediction_map));
  CHECK(straight.log.ledger.pe == rest.log.ledger.pe);
  CHECK(straight.log.ledger.pfe == rest.log.ledger.pfe);
}

TEST_CASE("batch evaluation is thread-count invariant") {
  PolygonDomain dom;
  SobolStream sob(Genome::kDim);
  std::vector<Genome> gs;
  for (int i = 0; i < 20; ++i) {
    const auto u = sob.next();
    Genome g;
    for (int d = 0; d < Genome::kDim; ++d)
      g.v[d] = Genome::lower(d) + u[d] * Genome::range(d);
    gs.push_back(g);
  }
  const auto one = evaluate_batch(dom, gs, 1);
  const auto three = evaluate_batch(dom, gs, 3);
  REQUIRE(one.size() == three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].valid == three[i].valid);
    CHECK(one[i].performance == three[i].performance);
    CHECK(one[i].features == three[i].features);
  }
}

TEST_CASE("the plain-domain prediction map holds true-scored elites") {
  PolygonDomain dom;
  QdConfig cfg;
  cfg.generations = 16;
  cfg.descendants = 8;
  cfg.prediction_resolution = 8;
  cfg.seed = 21;
  SobolStream sob(Genome::kDim);
  std::vector<Genome> seeds;
  for (int i = 0; i < 32; ++i) {
    const auto u = sob.next();
    Genome g;
    for (int d = 0; d < Genome::kDim; ++d)
      g.v[d] = Genome::lower(d) + u[d] * Genome::range(d);
    seeds.push_back(g);
  }
  const NicheMap m = build_prediction_map(dom, seeds, cfg, 77);
  CHECK(m.rows() == 8);
  const auto st = m.stats();
  CHECK(st.filled > 8);
  for (auto idx : m.filled_indices()) {
    const Elite& e = *m.bin(idx);
    CHECK_FALSE(e.surrogate);
    const DomainEval ev = dom.evaluate_precise(e.genome);
    CHECK(ev.performance == e.performance);  // stored scores are the true ones
  }
}

TEST_CASE("inner map-elites with zero generations returns the seed map") {
  NicheMap seeded(4, 4);
  seeded.offer({Genome{}, 0.1, 0.9, 0.5, false});
  InnerParams p;
  p.generations = 0;
  int calls = 0;
  BatchScorer scorer = [&](const std::vector<Genome>&, std::vector<Elite>&) { ++calls; };
  const NicheMap out = map_elites_inner(seeded, scorer, p);
  CHECK(calls == 0);
  CHECK(out.stats().filled == 1);
}
