#include "sphen/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sphen/domains.hpp"
#include "sphen/io.hpp"
#include "sphen/rng.hpp"

namespace sphen {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
  }
}

json qd_to_json(const QdConfig& q) {
  return json{{"generations", q.generations},
              {"descendants", q.descendants},
              {"budget", q.budget},
              {"samples_per_iteration", q.samples_per_iteration},
              {"initial_samples", q.initial_samples},
              {"acquisition_resolution", q.acquisition_resolution},
              {"prediction_resolution", q.prediction_resolution},
              {"prediction_generations", q.prediction_generations},
              {"kappa_acquisition", q.kappa_acquisition},
              {"mutation_sigma", q.mutation_sigma},
              {"log_prediction_curve", q.log_prediction_curve},
              {"feature_grid_search", q.feature_grid_search}};
}

void qd_from_json(const json& j, QdConfig& q) {
  reject_unknown(j,
                 {"generations", "descendants", "budget", "samples_per_iteration",
                  "initial_samples", "acquisition_resolution", "prediction_resolution",
                  "prediction_generations", "kappa_acquisition", "mutation_sigma",
                  "log_prediction_curve", "feature_grid_search"},
                 "qd");
  if (j.contains("generations")) q.generations = j["generations"].get<int>();
  if (j.contains("descendants")) q.descendants = j["descendants"].get<int>();
  if (j.contains("budget")) q.budget = j["budget"].get<int>();
  if (j.contains("samples_per_iteration"))
    q.samples_per_iteration = j["samples_per_iteration"].get<int>();
  if (j.contains("initial_samples")) q.initial_samples = j["initial_samples"].get<int>();
  if (j.contains("acquisition_resolution"))
    q.acquisition_resolution = j["acquisition_resolution"].get<int>();
  if (j.contains("prediction_resolution"))
    q.prediction_resolution = j["prediction_resolution"].get<int>();
  if (j.contains("prediction_generations"))
    q.prediction_generations = j["prediction_generations"].get<int>();
  if (j.contains("kappa_acquisition"))
    q.kappa_acquisition = j["kappa_acquisition"].get<double>();
  if (j.contains("mutation_sigma")) q.mutation_sigma = j["mutation_sigma"].get<double>();
  if (j.contains("log_prediction_curve"))
    q.log_prediction_curve = j["log_prediction_curve"].get<bool>();
  if (j.contains("feature_grid_search"))
    q.feature_grid_search = j["feature_grid_search"].get<bool>();
}

json flow_to_json(const FlowConfig& f) {
  return json{{"nx", f.nx},
              {"ny", f.ny},
              {"steps", f.steps},
              {"measure_every", f.measure_every},
              {"averaging_window", f.averaging_window},
              {"mach", f.mach},
              {"reynolds", f.reynolds},
              {"smagorinsky", f.smagorinsky},
              {"raster_cells", f.raster_cells},
              {"obstacle_x", f.obstacle_x},
              {"obstacle_y", f.obstacle_y},
              {"enstrophy_lo", f.enstrophy_lo},
              {"enstrophy_hi", f.enstrophy_hi},
              {"u_max_nuisance", f.u_max_nuisance}};
}

void flow_from_json(const json& j, FlowConfig& f) {
  reject_unknown(j,
                 {"nx", "ny", "steps", "measure_every", "averaging_window", "mach",
                  "reynolds", "smagorinsky", "raster_cells", "obstacle_x", "obstacle_y",
                  "enstrophy_lo", "enstrophy_hi", "u_max_nuisance"},
                 "flow");
  if (j.contains("nx")) f.nx = j["nx"].get<int>();
  if (j.contains("ny")) f.ny = j["ny"].get<int>();
  if (j.contains("steps")) f.steps = j["steps"].get<int>();
  if (j.contains("measure_every")) f.measure_every = j["measure_every"].get<int>();
  if (j.contains("averaging_window"))
    f.averaging_window = j["averaging_window"].get<int>();
  if (j.contains("mach")) f.mach = j["mach"].get<double>();
  if (j.contains("reynolds")) f.reynolds = j["reynolds"].get<double>();
  if (j.contains("smagorinsky")) f.smagorinsky = j["smagorinsky"].get<double>();
  if (j.contains("raster_cells")) f.raster_cells = j["raster_cells"].get<int>();
  if (j.contains("obstacle_x")) f.obstacle_x = j["obstacle_x"].get<double>();
  if (j.contains("obstacle_y")) f.obstacle_y = j["obstacle_y"].get<double>();
  if (j.contains("enstrophy_lo")) f.enstrophy_lo = j["enstrophy_lo"].get<double>();
  if (j.contains("enstrophy_hi")) f.enstrophy_hi = j["enstrophy_hi"].get<double>();
  if (j.contains("u_max_nuisance")) f.u_max_nuisance = j["u_max_nuisance"].get<double>();
}

std::string replicate_dir(const ExperimentConfig& cfg, int r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "replicate-%02d", r);
  return (fs::path(cfg.output_dir) / buf).string();
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << text;
}

}  // namespace

ExperimentConfig default_config(Algorithm a, const std::string& domain) {
  ExperimentConfig cfg;
  cfg.algorithm = a;
  cfg.domain = domain;
  cfg.qd = qd_preset(a);
  cfg.flow = flow_desk_preset();
  if (domain == "flow") {
    // final archive distillation runs longer on flow and the feature models
    // get restart help on their first fit
    cfg.qd.prediction_generations = 4096;
    cfg.qd.feature_grid_search = true;
  } else if (domain != "polygon") {
    throw std::invalid_argument("config: unknown domain '" + domain + "'");
  }
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.domain != "polygon" && cfg.domain != "flow")
    throw std::invalid_argument("config: unknown domain '" + cfg.domain + "'");
  if ((cfg.algorithm == Algorithm::sail || cfg.algorithm == Algorithm::sail_restricted) &&
      cfg.domain == "flow")
    throw std::invalid_argument(
        "config: sail needs cheap exact features; the flow domain has none");
  if (cfg.replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
  if (cfg.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  const auto& q = cfg.qd;
  if (q.generations < 0 || q.descendants < 1 || q.initial_samples < 1 ||
      q.samples_per_iteration < 1 || q.acquisition_resolution < 1 ||
      q.prediction_resolution < 1 || q.budget < 0)
    throw std::invalid_argument("config: qd sizes must be positive");
  if (q.acquisition_resolution % q.prediction_resolution != 0)
    throw std::invalid_argument(
        "config: acquisition resolution must be a multiple of the prediction resolution");
  if (!(q.mutation_sigma > 0.0))
    throw std::invalid_argument("config: mutation sigma must be positive");
  if (cfg.domain == "flow") cfg.flow.validate();
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j = json::parse(text);
  // fingerprint / replicate / replicate_seed are bookkeeping the writer adds
  // to per-replicate config.json files; tolerated so those files reload
  reject_unknown(j,
                 {"algorithm", "domain", "flow_scale", "qd", "flow", "replicates", "seed",
                  "output_dir", "checkpoint_every", "threads", "fingerprint", "replicate",
                  "replicate_seed"},
                 "top level");
  const Algorithm a = algorithm_from_name(
      j.contains("algorithm") ? j["algorithm"].get<std::string>() : "sphen");
  const std::string domain =
      j.contains("domain") ? j["domain"].get<std::string>() : "polygon";
  ExperimentConfig cfg = default_config(a, domain);
  if (j.contains("flow_scale")) {
    cfg.flow_scale = j["flow_scale"].get<std::string>();
    if (cfg.flow_scale == "desk") cfg.flow = flow_desk_preset();
    else if (cfg.flow_scale == "full") cfg.flow = flow_full_preset();
    else throw std::invalid_argument("config: flow_scale must be desk or full");
  }
  if (j.contains("qd")) qd_from_json(j["qd"], cfg.qd);
  if (j.contains("flow")) flow_from_json(j["flow"], cfg.flow);
  if (j.contains("replicates")) cfg.replicates = j["replicates"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("checkpoint_every")) cfg.checkpoint_every = j["checkpoint_every"].get<int>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  validate_config(cfg);
  return cfg;
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json j;
  j["algorithm"] = algorithm_name(cfg.algorithm);
  j["domain"] = cfg.domain;
  j["flow_scale"] = cfg.flow_scale;
  j["qd"] = qd_to_json(cfg.qd);
  j["flow"] = flow_to_json(cfg.flow);
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["threads"] = cfg.threads;
  return j.dump(1) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return config_from_json_text(os.str());
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  // identity of the produced data only: where it is stored and how the work is
  // scheduled (output_dir, threads, checkpoint cadence, replicate count) must
  // not change the fingerprint stamped into the artifacts
  json j;
  j["algorithm"] = algorithm_name(cfg.algorithm);
  j["domain"] = cfg.domain;
  j["flow_scale"] = cfg.flow_scale;
  j["qd"] = qd_to_json(cfg.qd);
  j["flow"] = flow_to_json(cfg.flow);
  j["seed"] = cfg.seed;
  const std::uint64_t h = fnv1a(j.dump());
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ReplicateResult run_replicate(const ExperimentConfig& cfg, int replicate) {
  validate_config(cfg);
  ReplicateResult out;
  out.replicate = replicate;
  out.dir = replicate_dir(cfg, replicate);
  fs::create_directories(out.dir);
  const std::string fp = config_fingerprint(cfg);
  {
    json j = json::parse(config_to_json_text(cfg));
    j["fingerprint"] = fp;
    j["replicate"] = replicate;
    j["replicate_seed"] = cfg.seed + static_cast<std::uint64_t>(replicate);
    write_text((fs::path(out.dir) / "config.json").string(), j.dump(1) + "\n");
  }

  QdConfig qd = cfg.qd;
  qd.seed = cfg.seed + static_cast<std::uint64_t>(replicate);
  qd.eval_threads = cfg.threads;

  PolygonDomain polygon;
  FlowDomain flow_domain(cfg.domain == "flow" ? cfg.flow : flow_desk_preset());
  const Domain& domain =
      cfg.domain == "flow" ? static_cast<const Domain&>(flow_domain)
                           : static_cast<const Domain&>(polygon);

  const std::string state_path = (fs::path(out.dir) / "state.json").string();
  if (cfg.algorithm == Algorithm::map_elites) {
    MapElitesState st;
    MapElitesState* resume = load_map_elites_state(state_path, st) ? &st : nullptr;
    out.run = run_map_elites(domain, qd, resume,
                             [&](const MapElitesState& s) {
                               save_map_elites_state(state_path, s);
                             },
                             cfg.checkpoint_every);
  } else {
    SurrogateState st;
    SurrogateState* resume = load_surrogate_state(state_path, st) ? &st : nullptr;
    auto save = [&](const SurrogateState& s) { save_surrogate_state(state_path, s); };
    if (cfg.algorithm == Algorithm::sphen) out.run = run_sphen(domain, qd, resume, save);
    else out.run = run_sail(domain, qd, resume, save);
  }

  write_log_csv((fs::path(out.dir) / "log.csv").string(), out.run.log, fp);
  write_map_csv((fs::path(out.dir) / "map.csv").string(), out.run.prediction_map, fp);
  if (out.run.raw_prediction_map.rows() != out.run.prediction_map.rows())
    write_map_csv((fs::path(out.dir) / "map_raw.csv").string(), out.run.raw_prediction_map,
                  fp);
  if (out.run.models.perf.fitted())
    save_model((fs::path(out.dir) / "model_perf.csv").string(), out.run.models.perf);
  if (out.run.models.f1.fitted())
    save_model((fs::path(out.dir) / "model_f1.csv").string(), out.run.models.f1);
  if (out.run.models.f2.fitted())
    save_model((fs::path(out.dir) / "model_f2.csv").string(), out.run.models.f2);
  return out;
}

std::vector<ReplicateResult> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  fs::create_directories(cfg.output_dir);
  {
    json j = json::parse(config_to_json_text(cfg));
    j["fingerprint"] = config_fingerprint(cfg);
    write_text((fs::path(cfg.output_dir) / "config.json").string(), j.dump(1) + "\n");
  }
  std::vector<ReplicateResult> out;
  for (int r = 0; r < cfg.replicates; ++r) out.push_back(run_replicate(cfg, r));
  return out;
}

// ---- flow validation ----

std::vector<std::uint8_t> circle_mask(const FlowConfig& cfg, double radius) {
  const int cells = cfg.raster_cells;
  std::vector<std::uint8_t> raster(static_cast<std::size_t>(cells) * cells, 0);
  const double inv = 1.0 / cells;
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) {
      const double x = (i + 0.5) * inv - 0.5;
      const double y = (j + 0.5) * inv - 0.5;
      if (x * x + y * y <= radius * radius)
        raster[static_cast<std::size_t>(j) * cells + i] = 1;
    }
  return place_obstacle(raster, cells, cfg);
}

std::vector<std::uint8_t> star_mask(const FlowConfig& cfg, double radius, double amplitude,
                                    int lobes) {
  const int cells = cfg.raster_cells;
  std::vector<std::uint8_t> raster(static_cast<std::size_t>(cells) * cells, 0);
  const double inv = 1.0 / cells;
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) {
      const double x = (i + 0.5) * inv - 0.5;
      const double y = (j + 0.5) * inv - 0.5;
      const double r = std::sqrt(x * x + y * y);
      const double limit = radius * (1.0 + amplitude * std::cos(lobes * std::atan2(y, x)));
      if (r <= limit) raster[static_cast<std::size_t>(j) * cells + i] = 1;
    }
  return place_obstacle(raster, cells, cfg);
}

FlowValidation validate_flow(const FlowConfig& cfg, const std::string& out_dir,
                             int convergence_multiplier) {
  cfg.validate();
  if (convergence_multiplier < 1)
    throw std::invalid_argument("validate_flow: convergence_multiplier must be >= 1");
  FlowConfig run_cfg = cfg;
  run_cfg.steps = cfg.steps * convergence_multiplier;
  FlowValidation v;

  struct Shape {
    std::string set;
    double param;
    std::vector<std::uint8_t> mask;
  };
  std::vector<Shape> shapes;
  for (int i = 0; i < 9; ++i) {
    const double r = 0.10 + i * 0.04;  // radii 0.10 .. 0.42 world units
    shapes.push_back({"circle", r, circle_mask(cfg, r)});
  }
  for (int i = 0; i < 9; ++i) {
    const double a = 0.05 + i * 0.05;  // deformation amplitudes 0.05 .. 0.45
    shapes.push_back({"star", a, star_mask(cfg, 0.30, a)});
  }

  // sample index of the configured (non-extended) endpoint in the series
  const std::size_t scale_sample = static_cast<std::size_t>(cfg.steps / cfg.measure_every) - 1;
  for (const auto& sh : shapes) {
    const FlowResult r = run_flow(run_cfg, sh.mask);
    SweepRow row;
    row.set = sh.set;
    row.param = sh.param;
    row.valid = r.valid;
    row.fail_step = r.fail_step;
    if (r.valid) {
      row.u_max = r.series[scale_sample].u_max_ravg;
      row.enstrophy = r.series[scale_sample].enstrophy_ravg;
      row.u_max_conv = r.u_max_avg;
      row.enstrophy_conv = r.enstrophy_avg;
      row.window_dev = 0.0;
      if (r.u_max_avg2 > 0.0)
        row.window_dev = std::fabs(r.u_max_avg / r.u_max_avg2 - 1.0);
      if (r.enstrophy_avg2 > 0.0)
        row.window_dev =
            std::max(row.window_dev, std::fabs(r.enstrophy_avg / r.enstrophy_avg2 - 1.0));
    } else {
      ++v.diverged;
    }
    if (!out_dir.empty() && r.valid) {
      char name[64];
      std::snprintf(name, sizeof name, "%s-%0.2f.csv", sh.set.c_str(), sh.param);
      write_observables_csv((fs::path(out_dir) / name).string(), r.series);
    }
    v.rows.push_back(std::move(row));
  }

  auto collect = [&](const std::string& set, auto field) {
    std::pair<std::vector<double>, std::vector<double>> out;  // param, value
    for (const auto& row : v.rows)
      if (row.set == set && row.valid) {
        out.first.push_back(row.param);
        out.second.push_back(field(row));
      }
    return out;
  };
  auto umax_of = [](const SweepRow& r) { return r.u_max; };
  auto ens_of = [](const SweepRow& r) { return r.enstrophy; };

  const auto cu = collect("circle", umax_of);
  const auto ce = collect("circle", ens_of);
  const auto su = collect("star", umax_of);
  const auto se = collect("star", ens_of);
  if (cu.first.size() >= 2) {
    v.circle_rho_umax = spearman_rho(cu.first, cu.second);
    v.circle_rho_enstrophy = spearman_rho(ce.first, ce.second);
  }
  if (su.first.size() >= 2) {
    v.star_rho_umax = spearman_rho(su.first, su.second);
    v.star_rho_enstrophy = spearman_rho(se.first, se.second);
  }

  auto set_mape = [&](const std::pair<std::vector<double>, std::vector<double>>& d) {
    if (d.first.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    double var = 0.0, mean = 0.0;
    for (double y : d.second) mean += y;
    mean /= static_cast<double>(d.second.size());
    for (double y : d.second) var += (y - mean) * (y - mean);
    var = std::max(var / static_cast<double>(d.second.size()), 1e-12);
    std::vector<std::pair<double, double>> grid;
    for (double l : {0.05, 0.1, 0.2, 0.4}) grid.emplace_back(l, var);
    return GpModel::loocv_mape(d.first, 1, d.second, {}, grid);
  };
  v.mape_umax_circle = set_mape(cu);
  v.mape_umax_star = set_mape(su);
  v.mape_enstrophy_circle = set_mape(ce);
  v.mape_enstrophy_star = set_mape(se);

  std::vector<double> all_ens, all_umax;
  for (const auto& row : v.rows) {
    if (!row.valid) continue;
    all_ens.push_back(row.enstrophy);
    all_umax.push_back(row.u_max);
    v.max_window_dev = std::max(v.max_window_dev, row.window_dev);
  }
  if (all_ens.size() >= 2) {
    v.enstrophy_range = estimate_feature_range(all_ens);
    v.umax_range = estimate_feature_range(all_umax);
  }

  std::ostringstream os;
  os << "flow validation at " << cfg.nx << "x" << cfg.ny << ", " << cfg.steps
     << " steps (convergence runs: " << run_cfg.steps << ")\n";
  os << "set     param    u_max        enstrophy    u_max_conv   enstr_conv   window_dev\n";
  for (const auto& row : v.rows) {
    char line[200];
    if (row.valid) {
      std::snprintf(line, sizeof line, "%-7s %-8.2f %-12.6f %-12.6f %-12.6f %-12.6f %.4f\n",
                    row.set.c_str(), row.param, row.u_max, row.enstrophy, row.u_max_conv,
                    row.enstrophy_conv, row.window_dev);
    } else {
      std::snprintf(line, sizeof line, "%-7s %-8.2f diverged at step %d\n", row.set.c_str(),
                    row.param, row.fail_step);
    }
    os << line;
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "spearman circle: u_max %.4f enstrophy %.4f | star: u_max %.4f enstrophy "
                "%.4f\n",
                v.circle_rho_umax, v.circle_rho_enstrophy, v.star_rho_umax,
                v.star_rho_enstrophy);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "loocv mape %%: u_max circle %.2f star %.2f | enstrophy circle %.2f star "
                "%.2f\n",
                v.mape_umax_circle, v.mape_umax_star, v.mape_enstrophy_circle,
                v.mape_enstrophy_star);
  os << buf;
  std::snprintf(buf, sizeof buf, "max trailing-window deviation: %.4f\n", v.max_window_dev);
  os << buf;
  os << "enstrophy range estimate: [" << format_double(v.enstrophy_range.lo) << ", "
     << format_double(v.enstrophy_range.hi) << "]\n";
  os << "u_max range estimate: [" << format_double(v.umax_range.lo) << ", "
     << format_double(v.umax_range.hi) << "]\n";
  v.report = os.str();

  if (!out_dir.empty()) {
    std::ostringstream csv;
    csv << "set,param,valid,u_max,enstrophy,u_max_conv,enstrophy_conv,window_dev,fail_step\n";
    for (const auto& row : v.rows)
      csv << row.set << ',' << format_double(row.param) << ',' << (row.valid ? 1 : 0) << ','
          << format_double(row.u_max) << ',' << format_double(row.enstrophy) << ','
          << format_double(row.u_max_conv) << ',' << format_double(row.enstrophy_conv) << ','
          << format_double(row.window_dev) << ',' << row.fail_step << '\n';
    write_text((fs::path(out_dir) / "sweep_summary.csv").string(), csv.str());
    write_text((fs::path(out_dir) / "report.txt").string(), v.report);
  }
  return v;
}

}  // namespace sphen
