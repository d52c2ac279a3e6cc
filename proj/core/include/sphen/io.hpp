#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "sphen/archive.hpp"
#include "sphen/gp.hpp"
#include "sphen/lbm.hpp"
#include "sphen/qd.hpp"

namespace sphen {

// shortest exact decimal form (%.17g); parsing it recovers the same double,
// which is what makes rerun outputs byte-comparable
std::string format_double(double v);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Archive CSV: a "# niche-map rows cols" header line, an optional
// "# config <fingerprint>" line, a column-name row, then one row per filled
// bin: row, col, the 16 genome values, f1, f2, performance, and a 0/1
// value-source flag (1 = surrogate-scored).
void write_map_csv(const std::string& path, const NicheMap& map,
                   const std::string& fingerprint = "");
NicheMap read_map_csv(const std::string& path);

// per-elite outlines for external rendering: row, col, vertex index, x, y
void write_vertices_csv(const std::string& path, const NicheMap& map);

// Optimization log CSV: iteration, pe, pfe, filled fraction, mean
// performance, per-model NLL and selection-time RMSE columns, prediction
// curve columns. Missing values are written as nan.
void write_log_csv(const std::string& path, const ExperimentLog& log,
                   const std::string& fingerprint = "");
ExperimentLog read_log_csv(const std::string& path);

void write_observables_csv(const std::string& path,
                           const std::vector<FlowObservation>& series,
                           const std::string& fingerprint = "");

// velocity-field snapshot: plain-text "nx ny step" line, then three raw
// little-endian float32 planes (density, ux, uy), row-major
void write_snapshot(const std::string& path, const Lattice& lat, int step);

struct Snapshot {
  int nx = 0, ny = 0, step = 0;
  std::vector<float> rho, ux, uy;
};
Snapshot read_snapshot(const std::string& path);

// Model dump: "# gp-model n dim" plus a documented hyperparameter header
// line, then one CSV row per training sample (inputs, target). Loading
// refits at the stored hyperparameters without optimization, which
// reproduces the original model exactly.
void save_model(const std::string& path, const GpModel& m);
GpModel load_model(const std::string& path);

// JSON checkpoints carrying everything a loop needs to continue from the
// last completed outer iteration
void save_surrogate_state(const std::string& path, const SurrogateState& st);
bool load_surrogate_state(const std::string& path, SurrogateState& st);
void save_map_elites_state(const std::string& path, const MapElitesState& st);
bool load_map_elites_state(const std::string& path, MapElitesState& st);

}  // namespace sphen
