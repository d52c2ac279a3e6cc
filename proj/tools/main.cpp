// Experiment driver: configuration, replicate orchestration, resumable runs,
// map evaluation and export, standalone flow simulations.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sphen/domains.hpp"
#include "sphen/experiment.hpp"
#include "sphen/io.hpp"
#include "sphen/metrics.hpp"

namespace {

using namespace sphen;

FlowConfig scale_preset(const std::string& scale) {
  if (scale == "desk") return flow_desk_preset();
  if (scale == "full") return flow_full_preset();
  throw std::invalid_argument("scale must be desk or full");
}

Genome parse_genome_values(const std::string& text) {
  Genome g;
  std::string norm = text;
  for (char& c : norm)
    if (c == ',') c = ' ';
  std::istringstream is(norm);
  for (int i = 0; i < Genome::kDim; ++i)
    if (!(is >> g.v[i]))
      throw std::invalid_argument("genome needs 16 numeric values");
  double extra;
  if (is >> extra) throw std::invalid_argument("genome needs exactly 16 values");
  if (!g.within_bounds()) throw std::invalid_argument("genome outside parameter bounds");
  return g;
}

struct RunFlags {
  std::string config_path, algorithm, domain, flow_scale, output_dir;
  int replicates = 0, checkpoint_every = 0, threads = 0;
  std::uint64_t seed = 0;
  // qd overrides
  int generations = 0, descendants = 0, budget = 0, samples_per_iteration = 0,
      initial_samples = 0, acquisition_resolution = 0, prediction_resolution = 0,
      prediction_generations = 0;
  double kappa = 0.0, mutation_sigma = 0.0;
  bool log_prediction_curve = false, feature_grid_search = false;
  // flow overrides
  int nx = 0, ny = 0, steps = 0, measure_every = 0, averaging_window = 0, raster_cells = 0;
  double mach = 0.0, reynolds = 0.0, smagorinsky = -1.0, enstrophy_lo = 0.0,
         enstrophy_hi = 0.0;
};

int cmd_run(const CLI::App& sub, const RunFlags& fl) {
  auto given = [&](const std::string& name) { return sub.count(name) > 0; };

  ExperimentConfig cfg;
  if (given("--config")) cfg = load_config(fl.config_path);
  else cfg = default_config(Algorithm::sphen, "polygon");

  // --algorithm / --domain re-resolve the preset before field overrides apply
  if (given("--algorithm") || given("--domain") || !given("--config")) {
    const Algorithm a =
        given("--algorithm") ? algorithm_from_name(fl.algorithm) : cfg.algorithm;
    const std::string dom = given("--domain") ? fl.domain : cfg.domain;
    ExperimentConfig fresh = default_config(a, dom);
    if (given("--config")) {
      fresh.flow = cfg.flow;
      fresh.flow_scale = cfg.flow_scale;
      fresh.replicates = cfg.replicates;
      fresh.seed = cfg.seed;
      fresh.output_dir = cfg.output_dir;
      fresh.checkpoint_every = cfg.checkpoint_every;
      fresh.threads = cfg.threads;
      if (!given("--algorithm") && !given("--domain")) fresh.qd = cfg.qd;
    }
    cfg = fresh;
  }
  if (given("--flow-scale")) {
    cfg.flow_scale = fl.flow_scale;
    cfg.flow = scale_preset(fl.flow_scale);
  }
  if (given("--replicates")) cfg.replicates = fl.replicates;
  if (given("--seed")) cfg.seed = fl.seed;
  if (given("--out")) cfg.output_dir = fl.output_dir;
  if (given("--checkpoint-every")) cfg.checkpoint_every = fl.checkpoint_every;
  if (given("--threads")) cfg.threads = fl.threads;

  if (given("--generations")) cfg.qd.generations = fl.generations;
  if (given("--descendants")) cfg.qd.descendants = fl.descendants;
  if (given("--budget")) cfg.qd.budget = fl.budget;
  if (given("--samples-per-iteration"))
    cfg.qd.samples_per_iteration = fl.samples_per_iteration;
  if (given("--initial-samples")) cfg.qd.initial_samples = fl.initial_samples;
  if (given("--acquisition-resolution"))
    cfg.qd.acquisition_resolution = fl.acquisition_resolution;
  if (given("--prediction-resolution"))
    cfg.qd.prediction_resolution = fl.prediction_resolution;
  if (given("--prediction-generations"))
    cfg.qd.prediction_generations = fl.prediction_generations;
  if (given("--kappa")) cfg.qd.kappa_acquisition = fl.kappa;
  if (given("--mutation-sigma")) cfg.qd.mutation_sigma = fl.mutation_sigma;
  if (given("--log-prediction-curve")) cfg.qd.log_prediction_curve = true;
  if (given("--feature-grid-search")) cfg.qd.feature_grid_search = true;

  if (given("--nx")) cfg.flow.nx = fl.nx;
  if (given("--ny")) cfg.flow.ny = fl.ny;
  if (given("--steps")) cfg.flow.steps = fl.steps;
  if (given("--measure-every")) cfg.flow.measure_every = fl.measure_every;
  if (given("--averaging-window")) cfg.flow.averaging_window = fl.averaging_window;
  if (given("--raster-cells")) cfg.flow.raster_cells = fl.raster_cells;
  if (given("--mach")) cfg.flow.mach = fl.mach;
  if (given("--reynolds")) cfg.flow.reynolds = fl.reynolds;
  if (given("--smagorinsky")) cfg.flow.smagorinsky = fl.smagorinsky;
  if (given("--enstrophy-lo")) cfg.flow.enstrophy_lo = fl.enstrophy_lo;
  if (given("--enstrophy-hi")) cfg.flow.enstrophy_hi = fl.enstrophy_hi;

  validate_config(cfg);
  const auto results = run_experiment(cfg);
  for (const auto& r : results) {
    const auto s = r.run.prediction_map.stats();
    std::printf("replicate %d: %s\n", r.replicate, r.dir.c_str());
    std::printf("  pe %lld  pfe %lld  map fill %.4f  mean performance %.6f\n",
                r.run.log.ledger.pe, r.run.log.ledger.pfe, s.filled_fraction,
                s.mean_performance);
  }
  return 0;
}

int cmd_validate_flow(const std::string& scale, const std::string& out_dir, int steps,
                      int nx, int ny, int conv_mult) {
  FlowConfig cfg = scale_preset(scale);
  if (steps > 0) cfg.steps = steps;
  if (nx > 0) cfg.nx = nx;
  if (ny > 0) cfg.ny = ny;
  if (cfg.averaging_window > cfg.steps / 2) cfg.averaging_window = cfg.steps / 2;
  const FlowValidation v = validate_flow(cfg, out_dir, conv_mult);
  std::fputs(v.report.c_str(), stdout);
  if (v.diverged > 0) {
    std::fprintf(stderr, "validate-flow: %d diverged shapes\n", v.diverged);
    return 3;
  }
  return 0;
}

int cmd_eval_map(const std::string& map_path, const std::string& domain,
                 const std::string& scale, const std::string& out_path, int threads) {
  const NicheMap map = read_map_csv(map_path);
  MapEvaluation ev;
  if (domain == "polygon") {
    ev = ground_truth_eval(map, PolygonDomain{}, threads);
  } else if (domain == "flow") {
    ev = ground_truth_eval(map, FlowDomain{scale_preset(scale)}, threads);
  } else {
    throw std::invalid_argument("eval-map: domain must be polygon or flow");
  }
  std::printf("bins evaluated %d (failed %d)\n", ev.evaluated, ev.failed);
  std::printf("rmse: performance %.6f  f1 %.6f  f2 %.6f\n", ev.rmse_performance, ev.rmse_f1,
              ev.rmse_f2);
  std::printf("misclassified bins %.4f  performance tau %.4f\n", ev.misclassified_fraction,
              ev.tau_performance);
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + out_path);
    f << "row,col,valid,pred_performance,true_performance,pred_f1,true_f1,pred_f2,true_f2,"
         "true_row,true_col\n";
    for (const auto& b : ev.bins) {
      f << b.row << ',' << b.col << ',' << (b.valid ? 1 : 0) << ','
        << format_double(b.pred_performance) << ',' << format_double(b.true_performance)
        << ',' << format_double(b.pred_f1) << ',' << format_double(b.true_f1) << ','
        << format_double(b.pred_f2) << ',' << format_double(b.true_f2) << ',' << b.true_row
        << ',' << b.true_col << '\n';
    }
  }
  return 0;
}

int cmd_export_map(const std::string& map_path, const std::string& format,
                   const std::string& out_path) {
  const NicheMap map = read_map_csv(map_path);
  if (format == "csv") write_map_csv(out_path, map);
  else if (format == "vertices") write_vertices_csv(out_path, map);
  else throw std::invalid_argument("export-map: format must be csv or vertices");
  std::printf("wrote %s (%zu elites)\n", out_path.c_str(), map.stats().filled);
  return 0;
}

int cmd_lbm_sim(const CLI::App& sub, const std::string& scale, int steps,
                const std::string& circle, const std::string& star,
                const std::string& genome_text, const std::string& genome_file,
                int snapshot_every, const std::string& out_dir) {
  FlowConfig cfg = scale_preset(scale);
  if (steps > 0) {
    cfg.steps = steps;
    if (cfg.averaging_window > steps) cfg.averaging_window = steps;
  }
  cfg.validate();
  if (snapshot_every > 0 && snapshot_every % cfg.measure_every != 0)
    throw std::invalid_argument("lbm-sim: snapshot interval must be a multiple of " +
                                std::to_string(cfg.measure_every));
  const int shape_flags = static_cast<int>(sub.count("--circle") > 0) +
                          static_cast<int>(sub.count("--star") > 0) +
                          static_cast<int>(sub.count("--genome") > 0) +
                          static_cast<int>(sub.count("--genome-file") > 0);
  if (shape_flags != 1)
    throw std::invalid_argument(
        "lbm-sim: give exactly one of --circle, --star, --genome, --genome-file");

  std::filesystem::create_directories(out_dir);
  FlowObserver observer;
  if (snapshot_every > 0)
    observer = [&](const Lattice& lat, int step) {
      if (step % snapshot_every != 0) return;
      char name[48];
      std::snprintf(name, sizeof name, "snapshot_%07d.bin", step);
      write_snapshot((std::filesystem::path(out_dir) / name).string(), lat, step);
    };

  FlowResult res;
  if (sub.count("--circle") > 0) {
    const double r = std::stod(circle);
    res = run_flow(cfg, circle_mask(cfg, r), observer);
  } else if (sub.count("--star") > 0) {
    double r = 0, a = 0;
    if (std::sscanf(star.c_str(), "%lf,%lf", &r, &a) != 2)
      throw std::invalid_argument("lbm-sim: --star wants RADIUS,AMPLITUDE");
    res = run_flow(cfg, star_mask(cfg, r, a), observer);
  } else {
    std::string text = genome_text;
    if (sub.count("--genome-file") > 0) {
      std::ifstream f(genome_file);
      if (!f) throw std::invalid_argument("lbm-sim: cannot read " + genome_file);
      std::ostringstream os;
      os << f.rdbuf();
      text = os.str();
    }
    const Genome g = parse_genome_values(text);
    const auto raster = rasterize(express(g), cfg.raster_cells);
    bool any = false;
    for (auto v : raster) any = any || v != 0;
    if (!any) throw std::invalid_argument("lbm-sim: genome rasterizes to an empty obstacle");
    res = run_flow(cfg, place_obstacle(raster, cfg.raster_cells, cfg), observer);
  }

  write_observables_csv((std::filesystem::path(out_dir) / "observables.csv").string(),
                        res.series);
  if (!res.valid) {
    std::fprintf(stderr, "lbm-sim: diverged at step %d\n", res.fail_step);
    return 3;
  }
  std::printf("u_max %.6f  enstrophy %.6f (trailing averages over %d steps)\n",
              res.u_max_avg, res.enstrophy_avg, cfg.averaging_window);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quality-diversity optimization with surrogate-assisted features"};
  app.require_subcommand(1);

  RunFlags fl;
  auto* run = app.add_subcommand("run", "run or resume an optimization experiment");
  run->add_option("--config", fl.config_path, "JSON config file (flags override it)");
  run->add_option("--algorithm", fl.algorithm,
                  "map-elites | sail | sail-restricted | sphen (re-resolves presets)");
  run->add_option("--domain", fl.domain, "polygon | flow");
  run->add_option("--flow-scale", fl.flow_scale, "desk | full");
  run->add_option("--replicates", fl.replicates, "independent repetitions");
  run->add_option("--seed", fl.seed, "base seed; replicate r uses seed + r");
  run->add_option("--out", fl.output_dir, "output directory");
  run->add_option("--checkpoint-every", fl.checkpoint_every,
                  "plain-loop generations between checkpoints");
  run->add_option("--threads", fl.threads, "parallel precise evaluations");
  run->add_option("--generations", fl.generations, "inner-loop generations");
  run->add_option("--descendants", fl.descendants, "children per generation");
  run->add_option("--budget", fl.budget, "precise evaluation budget");
  run->add_option("--samples-per-iteration", fl.samples_per_iteration,
                  "selections per outer iteration");
  run->add_option("--initial-samples", fl.initial_samples, "seed sample count");
  run->add_option("--acquisition-resolution", fl.acquisition_resolution,
                  "acquisition archive resolution");
  run->add_option("--prediction-resolution", fl.prediction_resolution,
                  "final archive resolution");
  run->add_option("--prediction-generations", fl.prediction_generations,
                  "generations of the final archive build (-1: same as --generations)");
  run->add_option("--kappa", fl.kappa, "UCB exploration weight");
  run->add_option("--mutation-sigma", fl.mutation_sigma,
                  "Gaussian step as a fraction of each parameter range");
  run->add_flag("--log-prediction-curve", fl.log_prediction_curve,
                "log per-iteration prediction-map statistics (model-based runs)");
  run->add_flag("--feature-grid-search", fl.feature_grid_search,
                "grid-search initial hyperparameters of the first feature fits");
  run->add_option("--nx", fl.nx, "flow grid width");
  run->add_option("--ny", fl.ny, "flow grid height");
  run->add_option("--steps", fl.steps, "flow time steps");
  run->add_option("--measure-every", fl.measure_every, "observable sampling stride");
  run->add_option("--averaging-window", fl.averaging_window, "trailing averaging window");
  run->add_option("--raster-cells", fl.raster_cells, "obstacle raster extent");
  run->add_option("--mach", fl.mach, "inlet Mach number");
  run->add_option("--reynolds", fl.reynolds, "Reynolds number");
  run->add_option("--smagorinsky", fl.smagorinsky, "subgrid model constant");
  run->add_option("--enstrophy-lo", fl.enstrophy_lo, "turbulence normalization lower edge");
  run->add_option("--enstrophy-hi", fl.enstrophy_hi, "turbulence normalization upper edge");

  std::string vf_scale = "desk", vf_out;
  int vf_steps = 0, vf_nx = 0, vf_ny = 0, vf_conv = 5;
  auto* vf = app.add_subcommand("validate-flow",
                                "circle/star sweeps: orderings, convergence, model error");
  vf->add_option("--scale", vf_scale, "desk | full");
  vf->add_option("--out", vf_out, "directory for sweep CSVs and the report");
  vf->add_option("--steps", vf_steps, "override simulation steps");
  vf->add_option("--nx", vf_nx, "override grid width");
  vf->add_option("--ny", vf_ny, "override grid height");
  vf->add_option("--convergence-multiplier", vf_conv,
                 "extend convergence runs to this multiple of the scale's steps")
      ->check(CLI::PositiveNumber);

  std::string em_map, em_domain = "polygon", em_scale = "desk", em_out;
  int em_threads = 1;
  auto* em = app.add_subcommand("eval-map", "precisely re-evaluate every elite of a map");
  em->add_option("--map", em_map, "map CSV file")->required();
  em->add_option("--domain", em_domain, "polygon | flow");
  em->add_option("--scale", em_scale, "flow preset when --domain flow");
  em->add_option("--out", em_out, "per-bin evaluation CSV");
  em->add_option("--threads", em_threads, "parallel evaluations");

  std::string xm_map, xm_format = "csv", xm_out;
  auto* xm = app.add_subcommand("export-map", "re-emit a map as CSV or vertex lists");
  xm->add_option("--map", xm_map, "map CSV file")->required();
  xm->add_option("--format", xm_format, "csv | vertices");
  xm->add_option("--out", xm_out, "output file")->required();

  std::string ls_scale = "desk", ls_circle, ls_star, ls_genome, ls_genome_file,
              ls_out = "lbm-out";
  int ls_steps = 0, ls_snap = 0;
  auto* ls = app.add_subcommand("lbm-sim", "single flow simulation with snapshot dumps");
  ls->add_option("--scale", ls_scale, "desk | full");
  ls->add_option("--steps", ls_steps, "override simulation steps");
  ls->add_option("--circle", ls_circle, "circle obstacle of RADIUS (world units, < 0.5)");
  ls->add_option("--star", ls_star, "star obstacle RADIUS,AMPLITUDE");
  ls->add_option("--genome", ls_genome, "16 comma-separated genome values");
  ls->add_option("--genome-file", ls_genome_file, "file with 16 genome values");
  ls->add_option("--snapshot-every", ls_snap,
                 "steps between velocity-field snapshots (0 disables)");
  ls->add_option("--out", ls_out, "output directory");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(*run, fl);
    if (vf->parsed())
      return cmd_validate_flow(vf_scale, vf_out, vf_steps, vf_nx, vf_ny, vf_conv);
    if (em->parsed()) return cmd_eval_map(em_map, em_domain, em_scale, em_out, em_threads);
    if (xm->parsed()) return cmd_export_map(xm_map, xm_format, xm_out);
    if (ls->parsed())
      return cmd_lbm_sim(*ls, ls_scale, ls_steps, ls_circle, ls_star, ls_genome,
                         ls_genome_file, ls_snap, ls_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
