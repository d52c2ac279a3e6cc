#include "sphen/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace sphen {
namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_out(const std::string& path, std::ios::openmode extra = {}) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream f(path, std::ios::out | std::ios::trunc | extra);
  if (!f) throw IoError("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path, std::ios::openmode extra = {}) {
  std::ifstream f(path, std::ios::in | extra);
  if (!f) throw IoError("cannot open for reading: " + path);
  return f;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw IoError("bad numeric field: '" + s + "'");
  return v;
}

// NaN-tolerant json scalar (nlohmann writes NaN as null)
json num(double v) { return std::isfinite(v) ? json(v) : json(); }
double num_back(const json& j) { return j.is_null() ? kNan : j.get<double>(); }

json map_to_json(const NicheMap& m) {
  json elites = json::array();
  for (auto idx : m.filled_indices()) {
    const Elite& e = *m.bin(idx);
    json je;
    je["bin"] = idx;
    je["g"] = e.genome.v;
    je["f1"] = e.f1;
    je["f2"] = e.f2;
    je["p"] = e.performance;
    je["s"] = e.surrogate ? 1 : 0;
    elites.push_back(std::move(je));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"elites", std::move(elites)}};
}

NicheMap map_from_json(const json& j) {
  NicheMap m(j.at("rows").get<int>(), j.at("cols").get<int>());
  for (const auto& je : j.at("elites")) {
    Elite e;
    const auto& g = je.at("g");
    for (int i = 0; i < Genome::kDim; ++i) e.genome.v[i] = g.at(i).get<double>();
    e.f1 = je.at("f1").get<double>();
    e.f2 = je.at("f2").get<double>();
    e.performance = je.at("p").get<double>();
    e.surrogate = je.at("s").get<int>() != 0;
    // offers re-derive the bin from the features; identical by construction
    m.offer(e);
  }
  return m;
}

json log_to_json(const ExperimentLog& log) {
  json rows = json::array();
  for (const auto& r : log.rows)
    rows.push_back(json::array({r.iteration, r.pe, r.pfe, r.filled_fraction,
                                r.mean_performance, num(r.nll_perf), num(r.nll_f1),
                                num(r.nll_f2), num(r.rmse_perf), num(r.rmse_f1),
                                num(r.rmse_f2), num(r.pred_filled), num(r.pred_mean)}));
  return json{{"rows", std::move(rows)},
              {"ledger", json::array({log.ledger.pe, log.ledger.pfe})}};
}

ExperimentLog log_from_json(const json& j) {
  ExperimentLog log;
  for (const auto& r : j.at("rows")) {
    LogRow row;
    row.iteration = r.at(0).get<long long>();
    row.pe = r.at(1).get<long long>();
    row.pfe = r.at(2).get<long long>();
    row.filled_fraction = r.at(3).get<double>();
    row.mean_performance = r.at(4).get<double>();
    row.nll_perf = num_back(r.at(5));
    row.nll_f1 = num_back(r.at(6));
    row.nll_f2 = num_back(r.at(7));
    row.rmse_perf = num_back(r.at(8));
    row.rmse_f1 = num_back(r.at(9));
    row.rmse_f2 = num_back(r.at(10));
    row.pred_filled = num_back(r.at(11));
    row.pred_mean = num_back(r.at(12));
    log.rows.push_back(row);
  }
  log.ledger.pe = j.at("ledger").at(0).get<long long>();
  log.ledger.pfe = j.at("ledger").at(1).get<long long>();
  return log;
}

void write_json_atomic(const std::string& path, const json& j) {
  const std::string tmp = path + ".tmp";
  {
    auto f = open_out(tmp);
    f << j.dump(1) << '\n';
    if (!f) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

bool load_json(const std::string& path, json& j) {
  std::ifstream f(path);
  if (!f) return false;
  j = json::parse(f, nullptr, true);
  return true;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_map_csv(const std::string& path, const NicheMap& map,
                   const std::string& fingerprint) {
  auto f = open_out(path);
  f << "# niche-map " << map.rows() << ' ' << map.cols() << '\n';
  if (!fingerprint.empty()) f << "# config " << fingerprint << '\n';
  f << "row,col";
  for (int i = 0; i < Genome::kDim; ++i) f << ",g" << i;
  f << ",f1,f2,performance,surrogate\n";
  for (auto idx : map.filled_indices()) {
    const Elite& e = *map.bin(idx);
    f << static_cast<int>(idx) / map.cols() << ',' << static_cast<int>(idx) % map.cols();
    for (int i = 0; i < Genome::kDim; ++i) f << ',' << format_double(e.genome.v[i]);
    f << ',' << format_double(e.f1) << ',' << format_double(e.f2) << ','
      << format_double(e.performance) << ',' << (e.surrogate ? 1 : 0) << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

NicheMap read_map_csv(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("# niche-map ", 0) != 0)
    throw IoError("not a map CSV: " + path);
  int rows = 0, cols = 0;
  if (std::sscanf(line.c_str(), "# niche-map %d %d", &rows, &cols) != 2 || rows < 1 ||
      cols < 1)
    throw IoError("bad map header: " + path);
  NicheMap map(rows, cols);
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("row,", 0) == 0) continue;
    const auto parts = split_csv(line);
    if (parts.size() != 2 + Genome::kDim + 4) throw IoError("bad map row: " + line);
    Elite e;
    for (int i = 0; i < Genome::kDim; ++i) e.genome.v[i] = parse_double(parts[2 + i]);
    e.f1 = parse_double(parts[2 + Genome::kDim]);
    e.f2 = parse_double(parts[3 + Genome::kDim]);
    e.performance = parse_double(parts[4 + Genome::kDim]);
    e.surrogate = parse_double(parts[5 + Genome::kDim]) != 0.0;
    map.offer(e);
  }
  return map;
}

void write_vertices_csv(const std::string& path, const NicheMap& map) {
  auto f = open_out(path);
  f << "row,col,vertex,x,y\n";
  for (auto idx : map.filled_indices()) {
    const Elite& e = *map.bin(idx);
    const Polygon p = express(e.genome);
    for (int v = 0; v < 8; ++v)
      f << static_cast<int>(idx) / map.cols() << ',' << static_cast<int>(idx) % map.cols()
        << ',' << v << ',' << format_double(p.vertices[v].x) << ','
        << format_double(p.vertices[v].y) << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

void write_log_csv(const std::string& path, const ExperimentLog& log,
                   const std::string& fingerprint) {
  auto f = open_out(path);
  if (!fingerprint.empty()) f << "# config " << fingerprint << '\n';
  f << "iteration,pe,pfe,filled,mean_performance,nll_perf,nll_f1,nll_f2,"
       "rmse_perf,rmse_f1,rmse_f2,pred_filled,pred_mean\n";
  for (const auto& r : log.rows) {
    f << r.iteration << ',' << r.pe << ',' << r.pfe << ','
      << format_double(r.filled_fraction) << ',' << format_double(r.mean_performance)
      << ',' << format_double(r.nll_perf) << ',' << format_double(r.nll_f1) << ','
      << format_double(r.nll_f2) << ',' << format_double(r.rmse_perf) << ','
      << format_double(r.rmse_f1) << ',' << format_double(r.rmse_f2) << ','
      << format_double(r.pred_filled) << ',' << format_double(r.pred_mean) << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

ExperimentLog read_log_csv(const std::string& path) {
  auto f = open_in(path);
  ExperimentLog log;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("iteration,", 0) == 0) continue;
    const auto parts = split_csv(line);
    if (parts.size() != 13) throw IoError("bad log row: " + line);
    LogRow r;
    r.iteration = static_cast<long long>(parse_double(parts[0]));
    r.pe = static_cast<long long>(parse_double(parts[1]));
    r.pfe = static_cast<long long>(parse_double(parts[2]));
    r.filled_fraction = parse_double(parts[3]);
    r.mean_performance = parse_double(parts[4]);
    r.nll_perf = parse_double(parts[5]);
    r.nll_f1 = parse_double(parts[6]);
    r.nll_f2 = parse_double(parts[7]);
    r.rmse_perf = parse_double(parts[8]);
    r.rmse_f1 = parse_double(parts[9]);
    r.rmse_f2 = parse_double(parts[10]);
    r.pred_filled = parse_double(parts[11]);
    r.pred_mean = parse_double(parts[12]);
    log.rows.push_back(r);
  }
  if (!log.rows.empty()) {
    log.ledger.pe = log.rows.back().pe;
    log.ledger.pfe = log.rows.back().pfe;
  }
  return log;
}

void write_observables_csv(const std::string& path,
                           const std::vector<FlowObservation>& series,
                           const std::string& fingerprint) {
  auto f = open_out(path);
  if (!fingerprint.empty()) f << "# config " << fingerprint << '\n';
  f << "step,u_max,enstrophy,u_max_ravg,enstrophy_ravg\n";
  for (const auto& o : series)
    f << o.step << ',' << format_double(o.u_max) << ',' << format_double(o.enstrophy)
      << ',' << format_double(o.u_max_ravg) << ',' << format_double(o.enstrophy_ravg)
      << '\n';
  if (!f) throw IoError("write failed: " + path);
}

void write_snapshot(const std::string& path, const Lattice& lat, int step) {
  static_assert(std::endian::native == std::endian::little,
                "snapshot writer assumes a little-endian host");
  std::vector<double> rho, ux, uy;
  lat.macroscopics(rho, ux, uy);
  auto f = open_out(path, std::ios::binary);
  f << lat.nx() << ' ' << lat.ny() << ' ' << step << '\n';
  auto put = [&](const std::vector<double>& src) {
    std::vector<float> plane(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) plane[i] = static_cast<float>(src[i]);
    f.write(reinterpret_cast<const char*>(plane.data()),
            static_cast<std::streamsize>(plane.size() * sizeof(float)));
  };
  put(rho);
  put(ux);
  put(uy);
  if (!f) throw IoError("write failed: " + path);
}

Snapshot read_snapshot(const std::string& path) {
  auto f = open_in(path, std::ios::binary);
  Snapshot s;
  std::string header;
  if (!std::getline(f, header) ||
      std::sscanf(header.c_str(), "%d %d %d", &s.nx, &s.ny, &s.step) != 3 || s.nx < 1 ||
      s.ny < 1)
    throw IoError("bad snapshot header: " + path);
  const std::size_t n = static_cast<std::size_t>(s.nx) * s.ny;
  auto get = [&](std::vector<float>& dst) {
    dst.resize(n);
    f.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (static_cast<std::size_t>(f.gcount()) != n * sizeof(float))
      throw IoError("truncated snapshot: " + path);
  };
  get(s.rho);
  get(s.ux);
  get(s.uy);
  return s;
}

void save_model(const std::string& path, const GpModel& m) {
  if (!m.fitted()) throw IoError("save_model: unfitted model");
  auto f = open_out(path);
  f << "# gp-model " << m.n() << ' ' << m.dim() << '\n';
  f << "# length_scale signal_variance jitter mean nll\n";
  f << "# " << format_double(m.length_scale()) << ' ' << format_double(m.signal_variance())
    << ' ' << format_double(m.jitter()) << ' ' << format_double(m.mean_constant()) << ' '
    << format_double(m.nll()) << '\n';
  const auto& X = m.inputs();
  const auto& y = m.targets();
  for (int r = 0; r < m.n(); ++r) {
    for (int c = 0; c < m.dim(); ++c)
      f << format_double(X[static_cast<std::size_t>(r) * m.dim() + c]) << ',';
    f << format_double(y[static_cast<std::size_t>(r)]) << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

GpModel load_model(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  int n = 0, dim = 0;
  if (!std::getline(f, line) || std::sscanf(line.c_str(), "# gp-model %d %d", &n, &dim) != 2)
    throw IoError("not a model dump: " + path);
  if (!std::getline(f, line)) throw IoError("truncated model dump: " + path);
  double ls = 0, sv = 0, jit = 0, mean = 0, nll = 0;
  if (!std::getline(f, line) ||
      std::sscanf(line.c_str(), "# %lf %lf %lf %lf %lf", &ls, &sv, &jit, &mean, &nll) != 5)
    throw IoError("bad model hyperparameter line: " + path);
  std::vector<double> X, y;
  X.reserve(static_cast<std::size_t>(n) * dim);
  y.reserve(static_cast<std::size_t>(n));
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto parts = split_csv(line);
    if (static_cast<int>(parts.size()) != dim + 1) throw IoError("bad model row: " + line);
    for (int c = 0; c < dim; ++c) X.push_back(parse_double(parts[static_cast<std::size_t>(c)]));
    y.push_back(parse_double(parts[static_cast<std::size_t>(dim)]));
  }
  if (static_cast<int>(y.size()) != n) throw IoError("model row count mismatch: " + path);
  GpFitOptions opt;
  opt.init_length_scale = ls;
  opt.init_signal_variance = sv;
  opt.jitter = jit;
  opt.optimize = false;
  return GpModel::fit(std::move(X), dim, std::move(y), opt);
}

void save_surrogate_state(const std::string& path, const SurrogateState& st) {
  json j;
  j["kind"] = "surrogate";
  j["finished"] = st.finished;
  j["outer_iter"] = st.outer_iter;
  j["invalid_evals"] = st.invalid_evals;
  j["ledger"] = json::array({st.ledger.pe, st.ledger.pfe});
  j["init_sobol_index"] = st.init_sobol_index;
  j["pick_sobol_index"] = st.pick_sobol_index;
  j["hyp_perf"] = st.hyp_perf;
  j["hyp_f1"] = st.hyp_f1;
  j["hyp_f2"] = st.hyp_f2;
  json X = json::array();
  for (const auto& g : st.X) X.push_back(g.v);
  j["X"] = std::move(X);
  j["perf"] = st.perf;
  json feats = json::array();
  for (const auto& f2 : st.feats) feats.push_back(f2);
  j["feats"] = std::move(feats);
  j["acquisition"] = map_to_json(st.acquisition);
  j["log"] = log_to_json(st.log);
  write_json_atomic(path, j);
}

bool load_surrogate_state(const std::string& path, SurrogateState& st) {
  json j;
  if (!load_json(path, j)) return false;
  if (j.at("kind").get<std::string>() != "surrogate")
    throw IoError("not a surrogate checkpoint: " + path);
  st = SurrogateState{};
  st.finished = j.at("finished").get<bool>();
  st.outer_iter = j.at("outer_iter").get<int>();
  st.invalid_evals = j.at("invalid_evals").get<long long>();
  st.ledger.pe = j.at("ledger").at(0).get<long long>();
  st.ledger.pfe = j.at("ledger").at(1).get<long long>();
  st.init_sobol_index = j.at("init_sobol_index").get<std::uint64_t>();
  st.pick_sobol_index = j.at("pick_sobol_index").get<std::uint64_t>();
  for (int i = 0; i < 2; ++i) {
    st.hyp_perf[i] = j.at("hyp_perf").at(i).get<double>();
    st.hyp_f1[i] = j.at("hyp_f1").at(i).get<double>();
    st.hyp_f2[i] = j.at("hyp_f2").at(i).get<double>();
  }
  for (const auto& row : j.at("X")) {
    Genome g;
    for (int i = 0; i < Genome::kDim; ++i) g.v[i] = row.at(i).get<double>();
    st.X.push_back(g);
  }
  st.perf = j.at("perf").get<std::vector<double>>();
  for (const auto& row : j.at("feats"))
    st.feats.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
  st.acquisition = map_from_json(j.at("acquisition"));
  st.log = log_from_json(j.at("log"));
  return true;
}

void save_map_elites_state(const std::string& path, const MapElitesState& st) {
  json j;
  j["kind"] = "map-elites";
  j["seeded"] = st.seeded;
  j["generation"] = st.generation;
  j["map"] = map_to_json(st.map);
  j["log"] = log_to_json(st.log);
  write_json_atomic(path, j);
}

bool load_map_elites_state(const std::string& path, MapElitesState& st) {
  json j;
  if (!load_json(path, j)) return false;
  if (j.at("kind").get<std::string>() != "map-elites")
    throw IoError("not a map-elites checkpoint: " + path);
  st = MapElitesState{};
  st.seeded = j.at("seeded").get<bool>();
  st.generation = j.at("generation").get<int>();
  st.map = map_from_json(j.at("map"));
  st.log = log_from_json(j.at("log"));
  return true;
}

}  // namespace sphen
