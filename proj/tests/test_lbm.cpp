#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "sphen/genome.hpp"
#include "sphen/lbm.hpp"

using namespace sphen;

namespace {

FlowConfig periodic_box(int nx, int ny, double tau, double smag = 0.0) {
  FlowConfig c;
  c.nx = nx;
  c.ny = ny;
  c.periodic = true;
  c.tau_override = tau;
  c.smagorinsky = smag;
  return c;
}

Genome regular_octagon(double dr, double dth = 0.0) {
  Genome g;
  for (int j = 0; j < 8; ++j) {
    g.v[j] = dr;
    g.v[8 + j] = dth;
  }
  return g;
}

std::size_t count_solid(const std::vector<std::uint8_t>& m) {
  std::size_t n = 0;
  for (auto v : m) n += v;
  return n;
}

}  // namespace

TEST_CASE("configuration validation") {
  FlowConfig c = flow_desk_preset();
  CHECK_NOTHROW(c.validate());
  CHECK(c.inlet_velocity() == doctest::Approx(0.075 / std::sqrt(3.0)).epsilon(1e-15));
  // tau follows from Re via nu = u_in * raster / Re
  CHECK(c.tau0() ==
        doctest::Approx(3.0 * c.inlet_velocity() * 32.0 / 10000.0 + 0.5).epsilon(1e-15));

  c.mach = 0.3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = flow_desk_preset();
  c.steps = 12345;  // not a multiple of measure_every
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = flow_desk_preset();
  c.averaging_window = c.steps + 50;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = flow_desk_preset();
  c.tau_override = 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  const FlowConfig full = flow_full_preset();
  CHECK(full.nx == 300);
  CHECK(full.steps == 100000);
  CHECK_NOTHROW(full.validate());
}

TEST_CASE("a resting fluid is a bitwise fixed point of the update") {
  for (auto [nx, ny] : std::vector<std::pair<int, int>>{{16, 12}, {48, 64}}) {
    FlowConfig c = periodic_box(nx, ny, 0.6, 0.17);
    // a solid blob exercises the bounce-back branch too
    std::vector<std::uint8_t> solid(static_cast<std::size_t>(nx) * ny, 0);
    for (int y = ny / 3; y < ny / 2; ++y)
      for (int x = nx / 3; x < nx / 2; ++x) solid[static_cast<std::size_t>(y) * nx + x] = 1;
    Lattice lat(c, solid);
    lat.set_equilibrium(1.0, 0.0, 0.0);

    std::vector<std::vector<double>> before;
    for (int i = 0; i < 9; ++i) before.push_back(lat.plane(i));
    const double mass0 = lat.total_mass();

    for (int s = 0; s < 10; ++s) lat.step();
    for (int i = 0; i < 9; ++i) {
      const auto& now = lat.plane(i);
      REQUIRE(now.size() == before[i].size());
      CHECK(std::memcmp(now.data(), before[i].data(), now.size() * sizeof(double)) == 0);
    }
    CHECK(lat.total_mass() == mass0);
  }
}

TEST_CASE("periodic flow conserves mass to 1e-10 over 1000 steps") {
  const int nx = 48, ny = 36;
  FlowConfig c = periodic_box(nx, ny, 0.6, 0.17);
  Lattice lat(c, {});
  std::vector<double> rho(static_cast<std::size_t>(nx) * ny, 1.0);
  std::vector<double> ux(rho.size()), uy(rho.size());
  const double pi2 = 2.0 * std::acos(-1.0);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      ux[static_cast<std::size_t>(y) * nx + x] = 0.05 * std::sin(pi2 * y / ny);
      uy[static_cast<std::size_t>(y) * nx + x] = 0.02 * std::cos(pi2 * x / nx);
    }
  lat.set_equilibrium_field(rho, ux, uy);
  const double mass0 = lat.total_mass();
  for (int s = 0; s < 1000; ++s) lat.step();
  CHECK(std::fabs(lat.total_mass() - mass0) / mass0 <= 1e-10);
  CHECK(lat.density_in_bounds());
}

TEST_CASE("taylor-green vortex decays at the analytic viscous rate") {
  const int n = 64;
  const double tau = 0.8, nu = (tau - 0.5) / 3.0, amp = 0.04;
  FlowConfig c = periodic_box(n, n, tau, 0.0);  // subgrid model off: nu is exact
  Lattice lat(c, {});

  const double k = 2.0 * std::acos(-1.0) / n;
  std::vector<double> rho(static_cast<std::size_t>(n) * n), ux(rho.size()), uy(rho.size());
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * n + x;
      ux[i] = -amp * std::cos(k * x) * std::sin(k * y);
      uy[i] = amp * std::sin(k * x) * std::cos(k * y);
      rho[i] = 1.0 - 3.0 * amp * amp / 4.0 * (std::cos(2 * k * x) + std::cos(2 * k * y));
    }
  lat.set_equilibrium_field(rho, ux, uy);

  const int t1 = 200, t2 = 600;
  for (int s = 0; s < t1; ++s) lat.step();
  const double ke1 = lat.kinetic_energy();
  for (int s = t1; s < t2; ++s) lat.step();
  const double ke2 = lat.kinetic_energy();

  const double expected = std::exp(-2.0 * nu * (k * k + k * k) * (t2 - t1));
  CHECK(ke2 / ke1 == doctest::Approx(expected).epsilon(0.05));

  // same physics at a smaller grid
  const int m = 32;
  FlowConfig c2 = periodic_box(m, m, tau, 0.0);
  Lattice lat2(c2, {});
  const double k2 = 2.0 * std::acos(-1.0) / m;
  std::vector<double> r2(static_cast<std::size_t>(m) * m), u2(r2.size()), v2(r2.size());
  for (int y = 0; y < m; ++y)
    for (int x = 0; x < m; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * m + x;
      u2[i] = -amp * std::cos(k2 * x) * std::sin(k2 * y);
      v2[i] = amp * std::sin(k2 * x) * std::cos(k2 * y);
      r2[i] = 1.0 - 3.0 * amp * amp / 4.0 * (std::cos(2 * k2 * x) + std::cos(2 * k2 * y));
    }
  lat2.set_equilibrium_field(r2, u2, v2);
  for (int s = 0; s < 150; ++s) lat2.step();
  const double ka = lat2.kinetic_energy();
  for (int s = 150; s < 300; ++s) lat2.step();
  const double kb = lat2.kinetic_energy();
  CHECK(kb / ka ==
        doctest::Approx(std::exp(-2.0 * nu * 2.0 * k2 * k2 * 150)).epsilon(0.05));
}

TEST_CASE("measure reproduces rigid-rotation enstrophy and the quiescent zeros") {
  const int nx = 100, ny = 80;
  FlowConfig c;
  c.nx = nx;
  c.ny = ny;
  c.tau_override = 1.0;
  Lattice lat(c, {});

  double um, en;
  lat.measure(um, en);
  CHECK(um == 0.0);
  CHECK(en == 0.0);

  const double omega = 1e-3, xc = (nx - 1) / 2.0, yc = (ny - 1) / 2.0;
  std::vector<double> rho(static_cast<std::size_t>(nx) * ny, 1.0), ux(rho.size()),
      uy(rho.size());
  double expect_umax = 0.0;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * nx + x;
      ux[i] = -omega * (y - yc);
      uy[i] = omega * (x - xc);
      expect_umax = std::max(expect_umax, std::hypot(ux[i], uy[i]));
    }
  lat.set_equilibrium_field(rho, ux, uy);
  lat.measure(um, en);
  // vorticity of a rigid rotation is 2*omega everywhere; central and
  // one-sided differences are exact on a linear field
  const double expect_en = 0.5 * (2 * omega) * (2 * omega) * nx * ny;
  CHECK(en == doctest::Approx(expect_en).epsilon(0.01));
  CHECK(um == doctest::Approx(expect_umax).epsilon(1e-12));
}

TEST_CASE("rasterization matches octagon geometry") {
  const Polygon oct = express(regular_octagon(1.0));
  const int cells = 64;
  const auto r = rasterize(oct, cells);
  REQUIRE(r.size() == static_cast<std::size_t>(cells) * cells);
  const double frac = static_cast<double>(count_solid(r)) / (cells * cells);
  CHECK(frac == doctest::Approx(2.0 * std::sqrt(2.0) * 0.25).epsilon(0.02));

  // rotating by 22.5 degrees resamples the same area
  const auto r2 = rasterize(express(regular_octagon(1.0, Genome::kPi4 / 2.0)), cells);
  CHECK(static_cast<double>(count_solid(r2)) ==
        doctest::Approx(static_cast<double>(count_solid(r))).epsilon(0.03));

  // a near-point shape covers no cell center
  const auto tiny = rasterize(express(regular_octagon(0.01)), 32);
  CHECK(count_solid(tiny) == 0);
}

TEST_CASE("obstacle placement centers the raster and rejects oversized ones") {
  FlowConfig c = flow_desk_preset();
  const auto raster = rasterize(express(regular_octagon(1.0)), c.raster_cells);
  const auto mask = place_obstacle(raster, c.raster_cells, c);
  REQUIRE(mask.size() == static_cast<std::size_t>(c.nx) * c.ny);
  CHECK(count_solid(mask) == count_solid(raster));

  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < c.ny; ++y)
    for (int x = 0; x < c.nx; ++x)
      if (mask[static_cast<std::size_t>(y) * c.nx + x]) {
        sx += x;
        sy += y;
        ++n;
      }
  CHECK(sx / n == doctest::Approx(0.25 * c.nx).epsilon(0.05));
  CHECK(sy / n == doctest::Approx(0.5 * c.ny).epsilon(0.05));

  FlowConfig small = c;
  small.nx = 40;
  small.ny = 30;
  CHECK_THROWS_AS(place_obstacle(raster, c.raster_cells, small), std::invalid_argument);
}

TEST_CASE("divergence is detected and reported") {
  FlowConfig c;
  c.nx = 64;
  c.ny = 48;
  c.steps = 3000;
  c.measure_every = 50;
  c.averaging_window = 1000;
  c.mach = 0.25;
  c.smagorinsky = 0.0;      // no subgrid stabilization
  c.tau_override = 0.5001;  // effectively inviscid: the run must blow up
  c.raster_cells = 16;

  std::vector<std::uint8_t> raster(16 * 16, 0);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) raster[static_cast<std::size_t>(y) * 16 + x] = 1;
  const FlowResult r = run_flow(c, place_obstacle(raster, 16, c));
  CHECK_FALSE(r.valid);
  CHECK(r.fail_step > 0);
  CHECK(r.fail_step <= c.steps);
}

TEST_CASE("nan densities never pass the bounds check") {
  FlowConfig c = periodic_box(16, 16, 0.6);
  Lattice lat(c, {});
  CHECK(lat.density_in_bounds());
  std::vector<double> rho(256, 1.0), ux(256, 0.0), uy(256, 0.0);
  rho[40] = std::nan("");
  lat.set_equilibrium_field(rho, ux, uy);
  CHECK_FALSE(lat.density_in_bounds());
}

TEST_CASE("full evaluation scores a desk-scale octagon") {
  FlowConfig c = flow_desk_preset();
  const Genome g = regular_octagon(0.6);
  const FlowEval ev = evaluate_flow(g, c);
  REQUIRE(ev.valid);
  CHECK(ev.performance ==
        doctest::Approx(2.0 / (1.0 + ev.u_max_avg) - 1.0).epsilon(1e-12));
  CHECK(ev.area_norm ==
        doctest::Approx(shape_features(express(g)).area_norm).epsilon(1e-15));
  CHECK(ev.turbulence_norm >= 0.0);
  CHECK(ev.turbulence_norm <= 1.0);
  CHECK(ev.nuisance_ok == (ev.u_max_avg <= c.u_max_nuisance));
  CHECK(ev.u_max_avg > 0.0);
  CHECK(ev.enstrophy_avg > 0.0);

  // unrasterizable genomes come back invalid without touching the lattice
  const FlowEval degenerate = evaluate_flow(regular_octagon(0.01), c);
  CHECK_FALSE(degenerate.valid);
}
