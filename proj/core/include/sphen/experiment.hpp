#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "sphen/lbm.hpp"
#include "sphen/metrics.hpp"
#include "sphen/qd.hpp"

namespace sphen {

// Fully resolved run description. Serialized next to every run's outputs so
// any artifact can be traced back to the exact settings that produced it.
struct ExperimentConfig {
  Algorithm algorithm = Algorithm::sphen;
  std::string domain = "polygon";   // "polygon" | "flow"
  std::string flow_scale = "desk";  // preset the flow block was resolved from
  QdConfig qd;
  FlowConfig flow;
  int replicates = 1;
  std::uint64_t seed = 1;
  std::string output_dir = "runs/out";
  int checkpoint_every = 256;  // plain-loop generations between checkpoints
  int threads = 1;             // parallel precise evaluations within a batch
};

// algorithm preset + domain adjustments (the flow experiment runs its final
// archive build longer and grid-searches the first feature-model fit)
ExperimentConfig default_config(Algorithm a, const std::string& domain);

// strict JSON round trip: unknown keys are rejected, missing keys keep the
// preset-resolved defaults
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

// throws std::invalid_argument on contradictions (the cheap-feature loop has
// no exact features on the flow domain, so sail + flow is rejected)
void validate_config(const ExperimentConfig& cfg);

// FNV-1a hash of the canonical serialization, as a 16-digit hex string
std::string config_fingerprint(const ExperimentConfig& cfg);

struct ReplicateResult {
  int replicate = 0;
  std::string dir;
  RunResult run;
};

// Runs one replicate (seed = config seed + replicate index), resuming from
// dir/state.json when present, and writes config.json, log.csv, map.csv,
// map_raw.csv (when the resolutions differ) and model dumps into dir.
ReplicateResult run_replicate(const ExperimentConfig& cfg, int replicate);

// all replicates sequentially under <output_dir>/replicate-NN/
std::vector<ReplicateResult> run_experiment(const ExperimentConfig& cfg);

// ---- flow validation sweeps (9 circles + 9 stars) ----

struct SweepRow {
  std::string set;  // "circle" | "star"
  double param = 0.0;  // radius or deformation amplitude, world units
  bool valid = false;
  int fail_step = -1;
  // trailing-window averages as of the configured step count (what a QD
  // evaluation at this scale observes)
  double u_max = 0.0, enstrophy = 0.0;
  // final-window averages at the extended end of the convergence run
  double u_max_conv = 0.0, enstrophy_conv = 0.0;
  // worst |final window / doubled window - 1| over both observables,
  // measured at the extended end where the impulsive-start transient has
  // left both windows
  double window_dev = 0.0;
};

struct FlowValidation {
  std::vector<SweepRow> rows;
  // Spearman rank correlation of the sweep parameter vs each observable
  double circle_rho_umax = 0.0, circle_rho_enstrophy = 0.0;
  double star_rho_umax = 0.0, star_rho_enstrophy = 0.0;
  // leave-one-out cross-validation error of 1-D surrogate fits per set
  double mape_umax_circle = 0.0, mape_umax_star = 0.0;
  double mape_enstrophy_circle = 0.0, mape_enstrophy_star = 0.0;
  double max_window_dev = 0.0;  // worst |window avg / doubled-window avg - 1|
  FeatureRange enstrophy_range;  // desk-scale normalization estimate
  FeatureRange umax_range;
  int diverged = 0;
  std::string report;
};

// analytic obstacle masks on the configured grid (no genome involved)
std::vector<std::uint8_t> circle_mask(const FlowConfig& cfg, double radius);
std::vector<std::uint8_t> star_mask(const FlowConfig& cfg, double radius, double amplitude,
                                    int lobes = 5);

// Runs both sweeps at the given scale; when out_dir is non-empty, writes
// per-shape observable CSVs, a summary CSV, and the plain-text report there.
// Each shape simulates convergence_multiplier * cfg.steps steps: rank and
// cross-validation statistics come from the running averages at cfg.steps,
// the window-convergence check from the final windows of the extended run
// (at cfg.steps the doubled window still contains the startup transient).
FlowValidation validate_flow(const FlowConfig& cfg, const std::string& out_dir = "",
                             int convergence_multiplier = 5);

}  // namespace sphen
