#pragma once
#include <cstdint>
#include <functional>
#include <vector>

#include "sphen/genome.hpp"

namespace sphen {

// D2Q9 air-flow simulation settings. Lattice units throughout: dx = dt = 1,
// sound speed 1/sqrt(3). The relaxation time follows from the Reynolds number
// taken w.r.t. the obstacle raster extent (the largest possible shape spans
// the full raster) and the inlet velocity Ma/sqrt(3).
struct FlowConfig {
  int nx = 150;
  int ny = 100;
  int steps = 20000;
  int measure_every = 50;
  int averaging_window = 10000;  // trailing steps entering the converged averages
  double mach = 0.075;
  double reynolds = 10000.0;
  double smagorinsky = 0.17;  // C_s; 0 disables the subgrid model exactly
  int raster_cells = 32;
  // obstacle raster center as a fraction of the grid extent
  double obstacle_x = 0.25;
  double obstacle_y = 0.5;
  // turbulence feature normalization: clamp((E - lo) / (hi - lo), 0, 1)
  double enstrophy_lo = 0.15;
  double enstrophy_hi = 1.1;
  double u_max_nuisance = 0.12;  // acceptable-wind threshold on averaged u_max
  // test hook: > 0 overrides the Reynolds-derived relaxation time
  double tau_override = -1.0;
  // periodic wrap on all four walls, no inlet forcing (physics validation)
  bool periodic = false;

  double inlet_velocity() const;
  double tau0() const;
  // throws std::invalid_argument on Ma >= 0.3, steps not divisible by
  // measure_every, or a window/grid mismatch
  void validate() const;
};

// desk scale: preserves the qualitative circle/star orderings in ~10 s per run
FlowConfig flow_desk_preset();
// paper scale: 300x200, 100,000 steps, trailing 50,000-step window, 64 raster
FlowConfig flow_full_preset();

struct FlowObservation {
  int step = 0;
  double u_max = 0.0;
  double enstrophy = 0.0;
  double u_max_ravg = 0.0;      // trailing-window running average up to here
  double enstrophy_ravg = 0.0;
};

struct FlowResult {
  bool valid = false;
  int fail_step = -1;  // step at which the density left [0.5, 2], if any
  double u_max_avg = 0.0;      // trailing window
  double enstrophy_avg = 0.0;
  double u_max_avg2 = 0.0;     // doubled trailing window (convergence check)
  double enstrophy_avg2 = 0.0;
  std::vector<FlowObservation> series;
};

// BGK + Smagorinsky D2Q9 lattice with full bounce-back at solid cells.
// Streaming is fused into the collision pass (push scheme); open-flow walls
// are rewritten to inlet equilibrium after each step, periodic mode wraps.
class Lattice {
 public:
  Lattice(const FlowConfig& cfg, std::vector<std::uint8_t> solid);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const std::vector<std::uint8_t>& solid() const { return solid_; }

  // overwrite every cell with equilibrium populations of the given fields
  // (constant or per-cell); used for initialization and synthetic injection
  void set_equilibrium(double rho, double ux, double uy);
  void set_equilibrium_field(const std::vector<double>& rho, const std::vector<double>& ux,
                             const std::vector<double>& uy);

  void step();
  int steps_done() const { return step_; }

  // paired-summation macroscopic fields; solid cells report rho = 1, u = 0
  void macroscopics(std::vector<double>& rho, std::vector<double>& ux,
                    std::vector<double>& uy) const;

  double total_mass() const;
  // all densities finite and within [0.5, 2]
  bool density_in_bounds() const;

  // u_max over fluid cells and one-half the sum of squared central-difference
  // vorticity over fluid cells (one-sided next to walls and solid cells)
  void measure(double& u_max, double& enstrophy) const;

  double kinetic_energy() const;  // sum of rho/2 * |u|^2 over fluid cells

  const std::vector<double>& plane(int i) const { return f_[cur_][i]; }

 private:
  FlowConfig cfg_;
  int nx_, ny_;
  std::size_t ncell_;
  std::vector<std::uint8_t> solid_;
  std::vector<double> f_[2][9];
  std::vector<std::int32_t> nbr_[9];  // scatter targets, -1 drops (open walls)
  int cur_ = 0;
  int step_ = 0;
  double tau0_;
  double u_in_;

  void rebuild_neighbors();
  void apply_open_boundaries(int buf);
};

// even-odd rasterization of a unit-diameter shape onto cells x cells, cell
// centers sampled; returns row-major flags, 1 = solid
std::vector<std::uint8_t> rasterize(const Polygon& p, int cells);

// embeds the raster into an nx x ny mask centered at the configured fraction
std::vector<std::uint8_t> place_obstacle(const std::vector<std::uint8_t>& raster, int cells,
                                         const FlowConfig& cfg);

using FlowObserver = std::function<void(const Lattice&, int step)>;

// full simulation: initializes to inlet equilibrium, steps, samples
// observables every measure_every steps, aborts on divergence. The optional
// observer fires after each sampled step (snapshot hooks).
FlowResult run_flow(const FlowConfig& cfg, std::vector<std::uint8_t> solid,
                    const FlowObserver& observer = {});

struct FlowEval {
  bool valid = false;
  int fail_step = -1;
  double performance = 0.0;     // 2 / (1 + u_max_avg) - 1
  double area_norm = 0.0;       // exact shape feature
  double turbulence_norm = 0.0; // normalized trailing-average enstrophy
  double u_max_avg = 0.0;
  double enstrophy_avg = 0.0;
  bool nuisance_ok = false;     // u_max_avg within the acceptable-wind bound
  double u_max_avg2 = 0.0;
  double enstrophy_avg2 = 0.0;
};

// rasterize + simulate + score; an empty raster or a diverged run comes back
// invalid with everything else zeroed
FlowEval evaluate_flow(const Genome& g, const FlowConfig& cfg,
                       const FlowObserver& observer = {});

}  // namespace sphen
