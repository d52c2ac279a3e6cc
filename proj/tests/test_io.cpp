#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sphen/io.hpp"
#include "sphen/rng.hpp"

using namespace sphen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("sphen-io-test-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

NicheMap sample_map() {
  NicheMap m(8, 8);
  Rng rng(derive_stream(31, "io-map"));
  for (int i = 0; i < 30; ++i) {
    Elite e;
    for (int d = 0; d < Genome::kDim; ++d)
      e.genome.v[d] = Genome::lower(d) + rng.next_double() * Genome::range(d);
    e.f1 = rng.next_double();
    e.f2 = rng.next_double();
    e.performance = rng.next_double();
    e.surrogate = (i % 3 == 0);
    m.offer(e);
  }
  return m;
}

}  // namespace

TEST_CASE("format_double survives the round trip for awkward values") {
  // strtod instead of stod: stod throws out_of_range on subnormals because
  // strtod flags ERANGE underflow even though the value is representable
  for (double v : {0.1, 1.0 / 3.0, 1e300, 5e-324, -2.5, 0.0, 123456789.123456789,
                   0.082897619646586373}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("map csv round trips bitwise and rewrites byte-identically") {
  TempDir td;
  const NicheMap m = sample_map();
  const std::string p1 = td.file("map.csv"), p2 = td.file("map2.csv");
  write_map_csv(p1, m, "0123456789abcdef");
  const NicheMap back = read_map_csv(p1);
  CHECK(back.rows() == m.rows());
  CHECK(back.stats().filled == m.stats().filled);
  for (auto idx : m.filled_indices()) {
    REQUIRE(back.bin(idx).has_value());
    const Elite &a = *m.bin(idx), &b = *back.bin(idx);
    CHECK(a.genome.v == b.genome.v);
    CHECK(a.f1 == b.f1);
    CHECK(a.f2 == b.f2);
    CHECK(a.performance == b.performance);
    CHECK(a.surrogate == b.surrogate);
  }
  write_map_csv(p2, back, "0123456789abcdef");
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("log csv keeps every column including missing model values") {
  TempDir td;
  ExperimentLog log;
  for (int i = 0; i < 10; ++i) {
    LogRow r;  // model columns NaN by construction
    r.iteration = i;
    r.pe = 16 * (i + 1);
    r.pfe = 16 * (i + 1);
    r.filled_fraction = 0.1 * i;
    r.mean_performance = 0.05 * i;
    if (i % 2 == 0) {
      r.nll_perf = -1.5 * i;
      r.rmse_perf = 0.01 * i;
      r.pred_filled = 0.2 * i;
      r.pred_mean = 0.1 * i + 1.0 / 3.0;
    }
    log.rows.push_back(r);
  }
  log.ledger.pe = 160;
  log.ledger.pfe = 160;

  const std::string p = td.file("log.csv");
  write_log_csv(p, log, "feedbeeffeedbeef");
  const ExperimentLog back = read_log_csv(p);
  REQUIRE(back.rows.size() == log.rows.size());
  CHECK(back.ledger.pe == 160);
  CHECK(back.ledger.pfe == 160);
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const LogRow &a = log.rows[i], &b = back.rows[i];
    CHECK(a.iteration == b.iteration);
    CHECK(a.pe == b.pe);
    CHECK(a.filled_fraction == b.filled_fraction);
    CHECK(a.mean_performance == b.mean_performance);
    CHECK((std::isnan(a.nll_perf) ? std::isnan(b.nll_perf) : a.nll_perf == b.nll_perf));
    CHECK((std::isnan(a.nll_f1) && std::isnan(b.nll_f1)));
    CHECK((std::isnan(a.pred_mean) ? std::isnan(b.pred_mean) : a.pred_mean == b.pred_mean));
  }
  const std::string p2 = td.file("log2.csv");
  write_log_csv(p2, back, "feedbeeffeedbeef");
  CHECK(slurp(p) == slurp(p2));
}

TEST_CASE("vertices export lists eight corners per elite") {
  TempDir td;
  const NicheMap m = sample_map();
  const std::string p = td.file("vertices.csv");
  write_vertices_csv(p, m);
  const std::string text = slurp(p);
  std::size_t lines = 0;
  for (char c : text) lines += (c == '\n');
  CHECK(lines == 1 + 8 * m.stats().filled);  // header + 8 rows per elite
}

TEST_CASE("observables csv carries the series") {
  TempDir td;
  std::vector<FlowObservation> series;
  for (int i = 1; i <= 5; ++i)
    series.push_back({50 * i, 0.01 * i, 0.2 * i, 0.005 * i, 0.1 * i});
  const std::string p = td.file("obs.csv");
  write_observables_csv(p, series, "cafe");
  const std::string text = slurp(p);
  CHECK(text.find("step,u_max,enstrophy") != std::string::npos);
  std::size_t lines = 0;
  for (char c : text) lines += (c == '\n');
  CHECK(lines >= 6);
}

TEST_CASE("snapshots store float32 planes losslessly") {
  TempDir td;
  FlowConfig c;
  c.nx = 12;
  c.ny = 9;
  c.periodic = true;
  c.tau_override = 0.7;
  Lattice lat(c, {});
  std::vector<double> rho(108), ux(108), uy(108);
  Rng rng(derive_stream(32, "snap"));
  for (std::size_t i = 0; i < rho.size(); ++i) {
    rho[i] = 0.9 + 0.2 * rng.next_double();
    ux[i] = 0.1 * (rng.next_double() - 0.5);
    uy[i] = 0.1 * (rng.next_double() - 0.5);
  }
  lat.set_equilibrium_field(rho, ux, uy);

  const std::string p = td.file("snap.bin");
  write_snapshot(p, lat, 1234);
  const Snapshot s = read_snapshot(p);
  CHECK(s.nx == 12);
  CHECK(s.ny == 9);
  CHECK(s.step == 1234);
  REQUIRE(s.rho.size() == 108);
  std::vector<double> mrho, mux, muy;
  lat.macroscopics(mrho, mux, muy);
  for (std::size_t i = 0; i < 108; ++i) {
    CHECK(s.rho[i] == static_cast<float>(mrho[i]));
    CHECK(s.ux[i] == static_cast<float>(mux[i]));
    CHECK(s.uy[i] == static_cast<float>(muy[i]));
  }
}

TEST_CASE("saved models predict identically after loading") {
  TempDir td;
  Rng rng(derive_stream(33, "model"));
  const int n = 24, dim = 16;
  std::vector<double> X(static_cast<std::size_t>(n) * dim), y(n);
  for (double& v : X) v = rng.next_double();
  for (int i = 0; i < n; ++i) y[i] = std::sin(4.0 * X[i * dim + 1]) + X[i * dim + 7];
  const GpModel m = GpModel::fit(X, dim, y);

  const std::string p = td.file("model.csv");
  save_model(p, m);
  const GpModel back = load_model(p);
  CHECK(back.n() == m.n());
  CHECK(back.length_scale() == m.length_scale());
  CHECK(back.signal_variance() == m.signal_variance());
  CHECK(back.jitter() == m.jitter());
  CHECK(back.mean_constant() == m.mean_constant());
  for (int t = 0; t < 10; ++t) {
    std::vector<double> q(dim);
    for (double& v : q) v = rng.next_double();
    const GpPrediction a = m.predict(q), b = back.predict(q);
    CHECK(a.mu == b.mu);
    CHECK(a.sigma == b.sigma);
  }
}

TEST_CASE("surrogate state round trips through json") {
  TempDir td;
  SurrogateState st;
  Rng rng(derive_stream(34, "state"));
  for (int i = 0; i < 12; ++i) {
    Genome g;
    for (int d = 0; d < Genome::kDim; ++d)
      g.v[d] = Genome::lower(d) + rng.next_double() * Genome::range(d);
    st.X.push_back(g);
    st.perf.push_back(rng.next_double());
    st.feats.push_back({rng.next_double(), rng.next_double()});
  }
  st.invalid_evals = 3;
  st.ledger = {100, 250};
  st.outer_iter = 7;
  st.init_sobol_index = 16;
  st.pick_sobol_index = 96;
  st.hyp_perf = {0.8, 0.25};
  st.hyp_f1 = {1.2, -1.0};
  st.acquisition = sample_map();
  LogRow row;
  row.iteration = 7;
  row.pe = 100;
  row.nll_perf = -12.5;
  st.log.rows.push_back(row);
  st.log.ledger = st.ledger;
  st.finished = false;

  const std::string p = td.file("state.json");
  save_surrogate_state(p, st);
  SurrogateState back;
  REQUIRE(load_surrogate_state(p, back));
  CHECK(back.X.size() == st.X.size());
  for (std::size_t i = 0; i < st.X.size(); ++i) CHECK(back.X[i].v == st.X[i].v);
  CHECK(back.perf == st.perf);
  CHECK(back.feats == st.feats);
  CHECK(back.invalid_evals == 3);
  CHECK(back.ledger.pe == 100);
  CHECK(back.ledger.pfe == 250);
  CHECK(back.outer_iter == 7);
  CHECK(back.init_sobol_index == 16);
  CHECK(back.pick_sobol_index == 96);
  CHECK(back.hyp_perf == st.hyp_perf);
  CHECK(back.hyp_f1 == st.hyp_f1);
  CHECK(back.acquisition.stats().filled == st.acquisition.stats().filled);
  REQUIRE(back.log.rows.size() == 1);
  CHECK(back.log.rows[0].nll_perf == -12.5);
  CHECK(std::isnan(back.log.rows[0].nll_f1));
  CHECK(back.finished == false);

  SurrogateState missing;
  CHECK_FALSE(load_surrogate_state(td.file("absent.json"), missing));
}

TEST_CASE("map-elites state round trips through json") {
  TempDir td;
  MapElitesState st;
  st.map = sample_map();
  st.generation = 42;
  st.seeded = true;
  LogRow row;
  row.iteration = 42;
  row.pe = 688;
  row.pfe = 688;
  st.log.rows.push_back(row);
  st.log.ledger = {688, 688};

  const std::string p = td.file("me.json");
  save_map_elites_state(p, st);
  MapElitesState back;
  REQUIRE(load_map_elites_state(p, back));
  CHECK(back.generation == 42);
  CHECK(back.seeded);
  CHECK(back.map.stats().filled == st.map.stats().filled);
  CHECK(back.map.stats().mean_performance == st.map.stats().mean_performance);
  CHECK(back.log.ledger.pe == 688);
}

TEST_CASE("read errors raise IoError") {
  TempDir td;
  CHECK_THROWS_AS(read_map_csv(td.file("missing.csv")), IoError);
  const std::string bad = td.file("bad.csv");
  std::ofstream(bad) << "not,a,map\n1,2,3\n";
  CHECK_THROWS_AS(read_map_csv(bad), IoError);
  CHECK_THROWS_AS(read_log_csv(td.file("missing.csv")), IoError);
  CHECK_THROWS_AS(read_snapshot(td.file("missing.bin")), IoError);
  CHECK_THROWS_AS(load_model(td.file("missing.csv")), IoError);
}
