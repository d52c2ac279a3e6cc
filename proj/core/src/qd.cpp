#include "sphen/qd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "sphen/rng.hpp"
#include "sphen/sobol.hpp"

namespace sphen {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<double> flatten(const std::vector<Genome>& gs) {
  std::vector<double> out;
  out.reserve(gs.size() * Genome::kDim);
  for (const auto& g : gs) out.insert(out.end(), g.v.begin(), g.v.end());
  return out;
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

Genome mutate(const Genome& parent, Rng& rng, double sigma_frac) {
  Genome g = parent;
  for (int i = 0; i < Genome::kDim; ++i)
    g.v[i] += sigma_frac * Genome::range(i) * rng.next_normal();
  g.clamp();
  return g;
}

Genome genome_from_unit(const std::vector<double>& u, std::size_t offset) {
  Genome g;
  for (int i = 0; i < Genome::kDim; ++i)
    g.v[i] = Genome::lower(i) + u[offset + i] * Genome::range(i);
  return g;
}

double batch_rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.empty() || pred.size() != truth.size()) return kNan;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    s += d * d;
  }
  return std::sqrt(s / pred.size());
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::map_elites: return "map-elites";
    case Algorithm::sail: return "sail";
    case Algorithm::sail_restricted: return "sail-restricted";
    case Algorithm::sphen: return "sphen";
  }
  return "?";
}

Algorithm algorithm_from_name(const std::string& s) {
  if (s == "map-elites") return Algorithm::map_elites;
  if (s == "sail") return Algorithm::sail;
  if (s == "sail-restricted") return Algorithm::sail_restricted;
  if (s == "sphen") return Algorithm::sphen;
  throw std::invalid_argument("unknown algorithm: " + s);
}

QdConfig qd_preset(Algorithm a) {
  QdConfig c;
  switch (a) {
    case Algorithm::map_elites:
      // seed round + 4,095 child generations of 16 = 65,536 evaluations
      c.generations = 4095;
      c.descendants = 16;
      c.acquisition_resolution = 16;
      break;
    case Algorithm::sail:
      c.generations = 1024;
      c.descendants = 32;
      c.acquisition_resolution = 16;
      break;
    case Algorithm::sail_restricted:
      c.generations = 63;
      c.descendants = 16;
      c.acquisition_resolution = 16;
      break;
    case Algorithm::sphen:
      c.generations = 1024;
      c.descendants = 32;
      c.acquisition_resolution = 32;
      break;
  }
  return c;
}

std::array<double, 2> Domain::exact_features(const Genome&) const {
  throw std::logic_error("domain has no cheap exact features");
}

LogRow::LogRow()
    : nll_perf(kNan), nll_f1(kNan), nll_f2(kNan), rmse_perf(kNan), rmse_f1(kNan),
      rmse_f2(kNan), pred_filled(kNan), pred_mean(kNan) {}

std::vector<DomainEval> evaluate_batch(const Domain& domain,
                                       const std::vector<Genome>& genomes, int threads) {
  std::vector<DomainEval> out(genomes.size());
  const int nt = std::min<int>(std::max(threads, 1), static_cast<int>(genomes.size()));
  if (nt <= 1) {
    for (std::size_t i = 0; i < genomes.size(); ++i)
      out[i] = domain.evaluate_precise(genomes[i]);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < genomes.size(); i += nt)
        out[i] = domain.evaluate_precise(genomes[i]);
    });
  for (auto& th : pool) th.join();
  return out;
}

NicheMap map_elites_inner(NicheMap map, const BatchScorer& scorer, const InnerParams& p) {
  SobolStream picker(1, p.sobol_start);
  std::vector<Genome> children;
  std::vector<Elite> scored;
  for (int gen = p.start_generation; gen < p.start_generation + p.generations; ++gen) {
    const auto filled = map.filled_indices();
    if (!filled.empty()) {
      const auto picks = picker.pick_indices(filled.size(), p.descendants);
      Rng rng(derive_stream(p.rng_seed, "gen", static_cast<std::uint64_t>(gen)));
      children.clear();
      for (auto idx : picks)
        children.push_back(mutate(map.bin(filled[idx])->genome, rng, p.mutation_sigma));
      scored.clear();
      scorer(children, scored);
      for (const auto& e : scored) map.offer(e);
    }
    if (p.on_generation) p.on_generation(gen, map);
  }
  return map;
}

// ---------------------------------------------------------------- map-elites

RunResult run_map_elites(const Domain& domain, const QdConfig& cfg, MapElitesState* resume,
                         const MapElitesCheckpoint& checkpoint, int checkpoint_every) {
  MapElitesState st;
  if (resume && resume->seeded) {
    st = *resume;
  } else {
    st.map = NicheMap(cfg.prediction_resolution, cfg.prediction_resolution);
    SobolStream s(Genome::kDim, 0);
    const auto u = s.next_points(static_cast<std::size_t>(cfg.initial_samples));
    std::vector<Genome> seeds;
    for (int i = 0; i < cfg.initial_samples; ++i)
      seeds.push_back(genome_from_unit(u, static_cast<std::size_t>(i) * Genome::kDim));
    const auto evals = evaluate_batch(domain, seeds, cfg.eval_threads);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      st.log.ledger.pe += 1;
      st.log.ledger.pfe += 1;
      if (!evals[i].valid) continue;
      st.map.offer({seeds[i], evals[i].features[0], evals[i].features[1],
                    evals[i].performance, false});
    }
    LogRow row;
    row.iteration = 0;
    row.pe = st.log.ledger.pe;
    row.pfe = st.log.ledger.pfe;
    const auto ms = st.map.stats();
    row.filled_fraction = ms.filled_fraction;
    row.mean_performance = ms.mean_performance;
    st.log.rows.push_back(row);
    st.seeded = true;
    if (checkpoint) checkpoint(st);
  }

  BatchScorer scorer = [&](const std::vector<Genome>& children, std::vector<Elite>& out) {
    const auto evals = evaluate_batch(domain, children, cfg.eval_threads);
    for (std::size_t i = 0; i < children.size(); ++i) {
      st.log.ledger.pe += 1;
      st.log.ledger.pfe += 1;
      if (!evals[i].valid) continue;
      out.push_back({children[i], evals[i].features[0], evals[i].features[1],
                     evals[i].performance, false});
    }
  };

  InnerParams p;
  p.generations = cfg.generations - st.generation;
  p.start_generation = st.generation;
  p.descendants = cfg.descendants;
  p.mutation_sigma = cfg.mutation_sigma;
  p.rng_seed = derive_stream(cfg.seed, "me");
  p.sobol_start = static_cast<std::uint64_t>(st.generation) *
                  static_cast<std::uint64_t>(cfg.descendants);
  p.on_generation = [&](int gen, const NicheMap& m) {
    LogRow row;
    row.iteration = gen + 1;
    row.pe = st.log.ledger.pe;
    row.pfe = st.log.ledger.pfe;
    const auto ms = m.stats();
    row.filled_fraction = ms.filled_fraction;
    row.mean_performance = ms.mean_performance;
    st.log.rows.push_back(row);
    st.generation = gen + 1;
    if (checkpoint && checkpoint_every > 0 && (gen + 1) % checkpoint_every == 0 &&
        gen + 1 < cfg.generations) {
      st.map = m;
      checkpoint(st);
    }
  };

  st.map = map_elites_inner(std::move(st.map), scorer, p);
  if (checkpoint) checkpoint(st);

  RunResult res;
  res.prediction_map = st.map;
  res.raw_prediction_map = std::move(st.map);
  res.log = std::move(st.log);
  return res;
}

// ---------------------------------------------------------------- surrogate loops

namespace {

struct FitOutcome {
  GpModel model;
  std::array<double, 2> hyp;
};

FitOutcome fit_model(const std::vector<double>& Xflat, const std::vector<double>& y,
                     const std::array<double, 2>& warm, bool grid_first_fit) {
  GpFitOptions opt;
  opt.init_length_scale = warm[0];
  opt.init_signal_variance = warm[1];  // negative selects target variance
  GpModel m;
  if (grid_first_fit && warm[1] < 0.0) {
    double var = 0.0, mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (double v : y) var += (v - mean) * (v - mean);
    var = std::max(var / static_cast<double>(y.size()), 1e-12);
    std::vector<std::pair<double, double>> grid;
    for (double l : {0.5, 1.0, 2.0, 4.0})
      for (double f : {0.5, 1.0, 2.0}) grid.emplace_back(l, f * var);
    m = GpModel::fit_with_grid_search(Xflat, Genome::kDim, y, grid, opt);
  } else {
    m = GpModel::fit(Xflat, Genome::kDim, y, opt);
  }
  return {std::move(m), {0.0, 0.0}};
}

void update_warm(FitOutcome& f) {
  f.hyp = {f.model.length_scale(), f.model.signal_variance()};
}

// scores genomes with model means (kappa 0), clamping features into [0,1]
void offer_predicted_seeds(NicheMap& map, const SurrogateModels& models,
                           const std::vector<Genome>& genomes) {
  if (genomes.empty()) return;
  std::vector<double> score, f1, f2;
  predict_triple(models.perf, models.f1, models.f2, flatten(genomes), 0.0, score, f1, f2);
  for (std::size_t i = 0; i < genomes.size(); ++i)
    map.offer({genomes[i], clamp01(f1[i]), clamp01(f2[i]), score[i], true});
}

// sail flavor: exact stored features, predicted-mean performance
void offer_exact_seeds(NicheMap& map, const GpModel& perf, const std::vector<Genome>& genomes,
                       const std::vector<std::array<double, 2>>& feats) {
  if (genomes.empty()) return;
  std::vector<double> mu;
  perf.predict_batch(flatten(genomes), mu, nullptr);
  for (std::size_t i = 0; i < genomes.size(); ++i)
    map.offer({genomes[i], feats[i][0], feats[i][1], mu[i], true});
}

NicheMap build_pred_raw(const SurrogateModels& models, const Domain* exact_domain,
                        const std::vector<Genome>& seeds,
                        const std::vector<std::array<double, 2>>* seed_exact_feats,
                        const QdConfig& cfg, std::uint64_t stream_tag) {
  NicheMap map(cfg.acquisition_resolution, cfg.acquisition_resolution);
  if (exact_domain && seed_exact_feats) {
    offer_exact_seeds(map, models.perf, seeds, *seed_exact_feats);
  } else {
    offer_predicted_seeds(map, models, seeds);
  }
  BatchScorer scorer = [&](const std::vector<Genome>& children, std::vector<Elite>& out) {
    std::vector<double> mu;
    if (exact_domain) {
      models.perf.predict_batch(flatten(children), mu, nullptr);
      for (std::size_t i = 0; i < children.size(); ++i) {
        const auto f = exact_domain->exact_features(children[i]);
        out.push_back({children[i], f[0], f[1], mu[i], true});
      }
    } else {
      std::vector<double> f1, f2;
      predict_triple(models.perf, models.f1, models.f2, flatten(children), 0.0, mu, f1, f2);
      for (std::size_t i = 0; i < children.size(); ++i)
        out.push_back({children[i], clamp01(f1[i]), clamp01(f2[i]), mu[i], true});
    }
  };
  InnerParams p;
  p.generations = cfg.effective_prediction_generations();
  p.descendants = cfg.descendants;
  p.mutation_sigma = cfg.mutation_sigma;
  p.rng_seed = derive_stream(cfg.seed, "pred", stream_tag);
  return map_elites_inner(std::move(map), scorer, p);
}

struct LoopMode {
  bool sail = false;
};

RunResult run_surrogate_loop(const Domain& domain, const QdConfig& cfg, LoopMode mode,
                             SurrogateState* resume, const SurrogateCheckpoint& checkpoint) {
  if (mode.sail && !domain.cheap_features())
    throw std::invalid_argument(
        "sail needs exact features that are computable without a precise run");

  SurrogateState st;
  if (resume && (resume->outer_iter > 0 || !resume->X.empty())) {
    st = *resume;
  } else {
    st.acquisition = NicheMap(cfg.acquisition_resolution, cfg.acquisition_resolution);
    SobolStream s(Genome::kDim, 0);
    const auto u = s.next_points(static_cast<std::size_t>(cfg.initial_samples));
    st.init_sobol_index = s.index();
    std::vector<Genome> seeds;
    for (int i = 0; i < cfg.initial_samples; ++i)
      seeds.push_back(genome_from_unit(u, static_cast<std::size_t>(i) * Genome::kDim));
    const auto evals = evaluate_batch(domain, seeds, cfg.eval_threads);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      st.ledger.pe += 1;
      st.ledger.pfe += 1;
      if (!evals[i].valid) {
        ++st.invalid_evals;
        continue;
      }
      st.X.push_back(seeds[i]);
      st.perf.push_back(evals[i].performance);
      st.feats.push_back(evals[i].features);
    }
    LogRow row;
    row.iteration = 0;
    row.pe = st.ledger.pe;
    row.pfe = st.ledger.pfe;
    st.log.rows.push_back(row);
    st.log.ledger = st.ledger;
    if (checkpoint) checkpoint(st);
  }

  const long long sail_rounds =
      cfg.budget <= cfg.initial_samples ? 0 : cfg.budget / cfg.samples_per_iteration;

  SurrogateModels models;

  // update_warm_state is false for the final fit: a replay from the finished
  // checkpoint must warm-start it from the same stored hyperparameters as the
  // uninterrupted run did
  auto fit_all = [&](bool update_warm_state) {
    if (st.X.size() < 2)
      throw GpError("surrogate loop: fewer than two valid samples to train on");
    const auto Xflat = flatten(st.X);
    FitOutcome p = fit_model(Xflat, st.perf, st.hyp_perf, false);
    update_warm(p);
    if (update_warm_state) st.hyp_perf = p.hyp;
    models.perf = std::move(p.model);
    if (!mode.sail) {
      std::vector<double> y1(st.X.size()), y2(st.X.size());
      for (std::size_t i = 0; i < st.X.size(); ++i) {
        y1[i] = st.feats[i][0];
        y2[i] = st.feats[i][1];
      }
      FitOutcome m1 = fit_model(Xflat, y1, st.hyp_f1, cfg.feature_grid_search);
      update_warm(m1);
      if (update_warm_state) st.hyp_f1 = m1.hyp;
      models.f1 = std::move(m1.model);
      FitOutcome m2 = fit_model(Xflat, y2, st.hyp_f2, cfg.feature_grid_search);
      update_warm(m2);
      if (update_warm_state) st.hyp_f2 = m2.hyp;
      models.f2 = std::move(m2.model);
    }
  };

  auto keep_running = [&]() {
    if (mode.sail) return static_cast<long long>(st.outer_iter) < sail_rounds;
    return st.ledger.pe < cfg.budget;
  };

  while (keep_running()) {
    const int iter = st.outer_iter;
    fit_all(true);

    // acquisition map: UCB performance, feature models or exact features
    NicheMap acq(cfg.acquisition_resolution, cfg.acquisition_resolution);
    std::vector<Genome> elite_genomes;
    std::vector<std::array<double, 2>> elite_feats;
    for (auto idx : st.acquisition.filled_indices()) {
      const auto& e = *st.acquisition.bin(idx);
      elite_genomes.push_back(e.genome);
      elite_feats.push_back({e.f1, e.f2});
    }
    if (mode.sail) {
      offer_exact_seeds(acq, models.perf, st.X, st.feats);
      offer_exact_seeds(acq, models.perf, elite_genomes, elite_feats);
    } else {
      offer_predicted_seeds(acq, models, st.X);
      offer_predicted_seeds(acq, models, elite_genomes);
    }

    BatchScorer scorer = [&](const std::vector<Genome>& children, std::vector<Elite>& out) {
      if (mode.sail) {
        std::vector<double> mu, sg;
        models.perf.predict_batch(flatten(children), mu, &sg);
        st.ledger.pfe += static_cast<long long>(children.size());
        for (std::size_t i = 0; i < children.size(); ++i) {
          const auto f = domain.exact_features(children[i]);
          out.push_back({children[i], f[0], f[1],
                         mu[i] + cfg.kappa_acquisition * sg[i], true});
        }
      } else {
        std::vector<double> score, f1, f2;
        predict_triple(models.perf, models.f1, models.f2, flatten(children),
                       cfg.kappa_acquisition, score, f1, f2);
        for (std::size_t i = 0; i < children.size(); ++i)
          out.push_back({children[i], clamp01(f1[i]), clamp01(f2[i]), score[i], true});
      }
    };
    InnerParams p;
    p.generations = cfg.generations;
    p.descendants = cfg.descendants;
    p.mutation_sigma = cfg.mutation_sigma;
    p.rng_seed = derive_stream(cfg.seed, "acq", static_cast<std::uint64_t>(iter));
    st.acquisition = map_elites_inner(std::move(acq), scorer, p);

    // Sobol bin selection over the filled acquisition bins (row-major order)
    const auto filled = st.acquisition.filled_indices();
    long long batch = cfg.samples_per_iteration;
    if (!mode.sail) batch = std::min<long long>(batch, cfg.budget - st.ledger.pe);
    SobolStream pick(1, st.pick_sobol_index);
    const auto picks = pick.pick_indices(filled.size(), static_cast<std::size_t>(batch));
    st.pick_sobol_index = pick.index();

    std::vector<Genome> selected;
    selected.reserve(picks.size());
    for (auto b : picks) selected.push_back(st.acquisition.bin(filled[b])->genome);

    // re-picking an already evaluated genome wastes a simulation; such picks
    // are perturbed once and evaluated regardless of where they land
    Rng dedup_rng(derive_stream(cfg.seed, "dedup", static_cast<std::uint64_t>(iter)));
    auto near = [](const Genome& a, const Genome& b) {
      for (int i = 0; i < Genome::kDim; ++i)
        if (std::fabs(a.v[i] - b.v[i]) > 1e-12) return false;
      return true;
    };
    for (std::size_t i = 0; i < selected.size(); ++i) {
      bool dup = false;
      for (const auto& x : st.X)
        if (near(selected[i], x)) {
          dup = true;
          break;
        }
      for (std::size_t j = 0; !dup && j < i; ++j)
        if (near(selected[i], selected[j])) dup = true;
      if (dup) selected[i] = mutate(selected[i], dedup_rng, cfg.mutation_sigma);
    }

    // selection-time model means, for the honest prediction-error log columns
    std::vector<double> pred_perf, pred_f1, pred_f2;
    if (mode.sail) {
      models.perf.predict_batch(flatten(selected), pred_perf, nullptr);
    } else {
      predict_triple(models.perf, models.f1, models.f2, flatten(selected), 0.0, pred_perf,
                     pred_f1, pred_f2);
    }

    const auto evals = evaluate_batch(domain, selected, cfg.eval_threads);
    std::vector<double> tp, tf1, tf2, pp, pf1, pf2;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      st.ledger.pe += 1;
      st.ledger.pfe += 1;
      if (!evals[i].valid) {
        ++st.invalid_evals;
        continue;
      }
      st.X.push_back(selected[i]);
      st.perf.push_back(evals[i].performance);
      st.feats.push_back(evals[i].features);
      tp.push_back(evals[i].performance);
      pp.push_back(pred_perf[i]);
      if (!mode.sail) {
        tf1.push_back(evals[i].features[0]);
        tf2.push_back(evals[i].features[1]);
        pf1.push_back(clamp01(pred_f1[i]));
        pf2.push_back(clamp01(pred_f2[i]));
      }
    }

    LogRow row;
    row.iteration = iter + 1;
    row.pe = st.ledger.pe;
    row.pfe = st.ledger.pfe;
    const auto ms = st.acquisition.stats();
    row.filled_fraction = ms.filled_fraction;
    row.mean_performance = ms.mean_performance;
    row.nll_perf = models.perf.nll();
    if (!mode.sail) {
      row.nll_f1 = models.f1.nll();
      row.nll_f2 = models.f2.nll();
    }
    row.rmse_perf = batch_rmse(pp, tp);
    if (!mode.sail) {
      row.rmse_f1 = batch_rmse(pf1, tf1);
      row.rmse_f2 = batch_rmse(pf2, tf2);
    }
    if (cfg.log_prediction_curve && !mode.sail) {
      NicheMap raw = build_pred_raw(models, nullptr, st.X, nullptr, cfg,
                                    0x70000000ull + static_cast<std::uint64_t>(iter));
      const auto ps = (cfg.acquisition_resolution == cfg.prediction_resolution
                           ? raw
                           : raw.reduce(cfg.prediction_resolution, cfg.prediction_resolution))
                          .stats();
      row.pred_filled = ps.filled_fraction;
      row.pred_mean = ps.mean_performance;
    }
    st.log.rows.push_back(row);
    st.log.ledger = st.ledger;
    st.outer_iter = iter + 1;
    if (checkpoint) checkpoint(st);
  }

  // final models over the full sample set; the evaluation ledger is frozen
  // here, prediction-phase scoring is accounting-free by construction
  fit_all(false);

  RunResult res;
  const std::uint64_t tag = 0x7fffffffull;
  if (mode.sail) {
    res.raw_prediction_map = build_pred_raw(models, &domain, st.X, &st.feats, cfg, tag);
  } else {
    res.raw_prediction_map = build_pred_raw(models, nullptr, st.X, nullptr, cfg, tag);
  }
  res.prediction_map =
      cfg.acquisition_resolution == cfg.prediction_resolution
          ? res.raw_prediction_map
          : res.raw_prediction_map.reduce(cfg.prediction_resolution, cfg.prediction_resolution);
  res.log = st.log;
  res.models = std::move(models);
  res.samples = st.X;
  res.sample_perf = st.perf;
  res.sample_feats = st.feats;

  st.finished = true;
  if (checkpoint) checkpoint(st);
  return res;
}

}  // namespace

RunResult run_sail(const Domain& domain, const QdConfig& cfg, SurrogateState* resume,
                   const SurrogateCheckpoint& checkpoint) {
  return run_surrogate_loop(domain, cfg, {.sail = true}, resume, checkpoint);
}

RunResult run_sphen(const Domain& domain, const QdConfig& cfg, SurrogateState* resume,
                    const SurrogateCheckpoint& checkpoint) {
  return run_surrogate_loop(domain, cfg, {.sail = false}, resume, checkpoint);
}

NicheMap build_prediction_map(const SurrogateModels& models, const Domain* exact_feature_domain,
                              const std::vector<Genome>& seeds,
                              const std::vector<std::array<double, 2>>* seed_exact_feats,
                              const QdConfig& cfg, std::uint64_t stream_tag) {
  NicheMap raw =
      build_pred_raw(models, exact_feature_domain, seeds, seed_exact_feats, cfg, stream_tag);
  if (cfg.acquisition_resolution == cfg.prediction_resolution) return raw;
  return raw.reduce(cfg.prediction_resolution, cfg.prediction_resolution);
}

NicheMap build_prediction_map(const Domain& domain, const std::vector<Genome>& seeds,
                              const QdConfig& cfg, std::uint64_t stream_tag) {
  NicheMap map(cfg.prediction_resolution, cfg.prediction_resolution);
  const auto evals = evaluate_batch(domain, seeds, cfg.eval_threads);
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (evals[i].valid)
      map.offer({seeds[i], evals[i].features[0], evals[i].features[1],
                 evals[i].performance, false});
  BatchScorer scorer = [&](const std::vector<Genome>& children, std::vector<Elite>& out) {
    const auto ev = evaluate_batch(domain, children, cfg.eval_threads);
    for (std::size_t i = 0; i < children.size(); ++i)
      if (ev[i].valid)
        out.push_back({children[i], ev[i].features[0], ev[i].features[1],
                       ev[i].performance, false});
  };
  InnerParams p;
  p.generations = cfg.effective_prediction_generations();
  p.descendants = cfg.descendants;
  p.mutation_sigma = cfg.mutation_sigma;
  p.rng_seed = derive_stream(cfg.seed, "pred", stream_tag);
  return map_elites_inner(std::move(map), scorer, p);
}

}  // namespace sphen
