#pragma once
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sphen/archive.hpp"
#include "sphen/genome.hpp"
#include "sphen/gp.hpp"

namespace sphen {

enum class Algorithm { map_elites, sail, sail_restricted, sphen };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& s);

struct QdConfig {
  int generations = 1024;
  int descendants = 32;
  // sphen: total precise evaluations including the seed set; sail: acquisition
  // selections on top of the seed set (a budget at or below initial_samples
  // degenerates to zero acquisition rounds); unused by map-elites
  int budget = 1024;
  int samples_per_iteration = 16;
  int initial_samples = 16;
  int acquisition_resolution = 32;
  int prediction_resolution = 16;
  // < 0 falls back to `generations`; the flow experiment raises it to 4096
  int prediction_generations = -1;
  double kappa_acquisition = 20.0;
  double mutation_sigma = 0.1;  // fraction of each parameter's range
  std::uint64_t seed = 1;
  int eval_threads = 1;
  // per-iteration surrogate-free prediction-map statistics (cheap for
  // model-based scoring only, so it is meant for sphen runs)
  bool log_prediction_curve = false;
  // initial-guess grid search for the two feature models' first fit
  bool feature_grid_search = false;

  int effective_prediction_generations() const {
    return prediction_generations < 0 ? generations : prediction_generations;
  }
};

// canonical per-algorithm settings; map-elites runs a seed round plus 4,095
// generations of 16, totalling the canonical 65,536 evaluations
QdConfig qd_preset(Algorithm a);

struct Ledger {
  long long pe = 0;   // precise performance evaluations
  long long pfe = 0;  // precise performance-or-feature evaluations
};

struct DomainEval {
  bool valid = false;
  double performance = 0.0;
  std::array<double, 2> features{};  // normalized to [0,1]
  std::array<double, 2> raw_features{};
  double aux = 0.0;        // domain extra (flow: trailing-average u_max)
  bool nuisance_ok = true; // flow: u_max within the nuisance threshold
  int fail_step = -1;      // step at which the evaluation diverged, if any
};

// Pluggable problem boundary. evaluate_precise must be deterministic for a
// fixed genome and safe to call concurrently.
class Domain {
 public:
  virtual ~Domain() = default;
  virtual std::string name() const = 0;
  virtual std::array<std::string, 2> feature_names() const = 0;
  virtual DomainEval evaluate_precise(const Genome& g) const = 0;
  // true when exact features are available without a precise run
  virtual bool cheap_features() const = 0;
  virtual std::array<double, 2> exact_features(const Genome& g) const;
};

struct LogRow {
  long long iteration = 0;
  long long pe = 0;
  long long pfe = 0;
  double filled_fraction = 0.0;   // live map (archive for map-elites, acquisition otherwise)
  double mean_performance = 0.0;
  double nll_perf, nll_f1, nll_f2;          // NaN when no model exists
  double rmse_perf, rmse_f1, rmse_f2;       // selection-time prediction vs truth
  double pred_filled, pred_mean;            // optional prediction-curve columns
  LogRow();
};

struct ExperimentLog {
  std::vector<LogRow> rows;
  Ledger ledger;
};

struct SurrogateModels {
  GpModel perf, f1, f2;
};

// Resumable state of the two surrogate loops; everything needed to continue
// from a completed outer iteration. RNG streams are derived from (seed, tag,
// iteration), so no generator state needs persisting beyond the counters.
struct SurrogateState {
  std::vector<Genome> X;                        // valid precisely evaluated samples
  std::vector<double> perf;                     // true performance per sample
  std::vector<std::array<double, 2>> feats;     // true normalized features per sample
  long long invalid_evals = 0;
  Ledger ledger;
  int outer_iter = 0;
  std::uint64_t init_sobol_index = 0;           // 16-D stream position
  std::uint64_t pick_sobol_index = 0;           // 1-D selection stream position
  // warm-started hyperparameters (length scale, signal variance); negative
  // signal variance selects the target-variance default
  std::array<double, 2> hyp_perf{1.0, -1.0};
  std::array<double, 2> hyp_f1{1.0, -1.0};
  std::array<double, 2> hyp_f2{1.0, -1.0};
  NicheMap acquisition;                         // surviving acquisition elites
  ExperimentLog log;
  bool finished = false;
};

struct MapElitesState {
  NicheMap map;
  int generation = 0;  // completed child generations
  ExperimentLog log;
  bool seeded = false;
};

struct RunResult {
  NicheMap prediction_map;       // final deliverable archive
  NicheMap raw_prediction_map;   // pre-reduction map when resolutions differ
  ExperimentLog log;
  SurrogateModels models;        // fitted on the full sample set (surrogate runs)
  std::vector<Genome> samples;
  std::vector<double> sample_perf;
  std::vector<std::array<double, 2>> sample_feats;
};

// Scores a batch of children, appending only valid results.
using BatchScorer =
    std::function<void(const std::vector<Genome>&, std::vector<Elite>&)>;

struct InnerParams {
  int generations = 0;         // generations to run in this call
  int descendants = 16;
  double mutation_sigma = 0.1;
  std::uint64_t rng_seed = 1;  // stream for Gaussian perturbations
  // resume support: first generation index (drives per-generation RNG
  // derivation) and the parent-pick Sobol stream position
  int start_generation = 0;
  std::uint64_t sobol_start = 0;
  // called after each generation (logging hooks)
  std::function<void(int, const NicheMap&)> on_generation;
};

// Core MAP-Elites iteration: Sobol parent picks over the filled bins, Gaussian
// perturbation clamped to bounds, batch scoring, archive offers. The map
// arrives pre-seeded; with zero generations it is returned unchanged. A
// generation whose children all score invalid is skipped, never fatal.
NicheMap map_elites_inner(NicheMap seeded_map, const BatchScorer& scorer,
                          const InnerParams& params);

using SurrogateCheckpoint = std::function<void(const SurrogateState&)>;
using MapElitesCheckpoint = std::function<void(const MapElitesState&)>;

// Plain quality diversity on true evaluations. checkpoint_every <= 0 disables
// the hook. A non-null resume state continues a previous run.
RunResult run_map_elites(const Domain& domain, const QdConfig& cfg,
                         MapElitesState* resume = nullptr,
                         const MapElitesCheckpoint& checkpoint = {},
                         int checkpoint_every = 0);

RunResult run_sail(const Domain& domain, const QdConfig& cfg,
                   SurrogateState* resume = nullptr,
                   const SurrogateCheckpoint& checkpoint = {});

RunResult run_sphen(const Domain& domain, const QdConfig& cfg,
                    SurrogateState* resume = nullptr,
                    const SurrogateCheckpoint& checkpoint = {});

// kappa = 0 archive build from fitted models. exact_feature_domain switches
// child features from model means to exact domain features (the cheap-feature
// loop's final map); null keeps the fully model-based variant.
NicheMap build_prediction_map(const SurrogateModels& models,
                              const Domain* exact_feature_domain,
                              const std::vector<Genome>& seeds,
                              const std::vector<std::array<double, 2>>* seed_exact_feats,
                              const QdConfig& cfg, std::uint64_t stream_tag);

// plain-domain variant: true performance and features, no models involved
NicheMap build_prediction_map(const Domain& domain, const std::vector<Genome>& seeds,
                              const QdConfig& cfg, std::uint64_t stream_tag);

// deterministic batch evaluation helper; results land in input order
std::vector<DomainEval> evaluate_batch(const Domain& domain,
                                       const std::vector<Genome>& genomes, int threads);

}  // namespace sphen
