#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "sphen/gp.hpp"
#include "sphen/minimize.hpp"
#include "sphen/rng.hpp"

using namespace sphen;

namespace {

// reference training set (6 x 16) with frozen expected outputs
const std::vector<double> kRefX = {
    0.78225147525655114,  0.67148670969900071,  0.23738090347109686,  0.17946132661602443,
    0.34662366561830893,  0.15210998967037581,  0.31142952272952784,  0.23900651977028897,
    0.54355730533600555,  0.91770851307895263,  0.444264723227765,    0.76028408611626519,
    0.57528076710461462,  0.51188411997992456,  0.65716026584688081,  0.94673004043875308,
    0.91530369069531647,  0.72023466300605377,  0.12275447669172734,  0.90934143431200487,
    0.71328205769268782,  0.35330292031025157,  0.22136687311039527,  0.91407830313300475,
    0.81568705213863024,  0.3403133796826564,   0.96281808887623499,  0.68378706818786272,
    0.036398760384918183, 0.38488835340900596,  0.14208659881264241,  0.35420440260646802,
    0.96771898406040369,  0.59558709546471111,  0.39578947623453298,  0.18387861516772919,
    0.27742505040918186,  0.71824451409268508,  0.91700966775275228,  0.42292172333937328,
    0.18352396461898968,  0.50074802046600553,  0.82354166922936323,  0.36341172416827472,
    0.48882683965208884,  0.57166478084252681,  0.87326734854193888,  0.69645078071975719,
    0.82750421575444155,  0.23478283870865768,  0.36083201522639352,  0.0078728914041915621,
    0.99284120859247404,  0.137940228707365,    0.71772947133380094,  0.78305351408876744,
    0.81705695627421804,  0.23756207479671276,  0.29640471684088088,  0.64491919221727056,
    0.24609591817000054,  0.71284013290106063,  0.26234611643051819,  0.3638722997971936,
    0.5354952921890076,   0.86538606311155697,  0.55542083312713242,  0.70500332715689462,
    0.92982269474611701,  0.92670482931680465,  0.65358495020965135,  0.22874308195176807,
    0.60755248698436293,  0.72169607521115886,  0.45971434486681551,  0.74091193387319876,
    0.48540239038953048,  0.4740134534285162,   0.17382109418046754,  0.55975799703496987,
    0.0082909466764491402, 0.096654985627789847, 0.4196274810490509,  0.84805217521297871,
    0.074905765189388074, 0.52538419692188809,  0.057628734422250583, 0.19067481578752821,
    0.19450091626228549,  0.75254833549280054,  0.42582300608558732,  0.07852396179726906,
    0.35428083446965764,  0.3133042058673472,   0.13918378310632051,  0.59584762480976505};
const std::vector<double> kRefY = {1.0685196961207406,  0.77902255858433178,
                                   0.55385752796097354, 0.75938338591761101,
                                   1.5241695717270385,  0.10884186498823982};

GpFitOptions fixed_hyps(double l, double sf2) {
  GpFitOptions o;
  o.init_length_scale = l;
  o.init_signal_variance = sf2;
  o.optimize = false;
  return o;
}

std::vector<double> random_inputs(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> X(static_cast<std::size_t>(n) * dim);
  for (double& v : X) v = rng.next_double();
  return X;
}

}  // namespace

TEST_CASE("minimizer solves a quadratic and rosenbrock") {
  ObjectiveFn quad = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * (x[0] - 3.0);
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  const auto r = minimize(quad, {0.0});
  CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(r.f <= 1e-10);

  ObjectiveFn rosen = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  const auto r2 = minimize(rosen, {-1.2, 1.0}, 5000);
  CHECK(r2.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r2.x[1] == doctest::Approx(1.0).epsilon(1e-4));

  // the kept-best contract: never worse than the start
  const auto r3 = minimize(rosen, {1.0, 1.0}, 3);
  CHECK(r3.f <= 0.0 + 1e-15);
}

TEST_CASE("kernel closed forms") {
  const std::vector<double> a = {0.2, 0.4}, b = {0.2, 0.4};
  CHECK(GpModel::kernel(a, b, 1.5, 0.8) == 0.8);
  std::vector<double> c = {0.2 + 1.5 * std::sqrt(2.0), 0.4};
  CHECK(GpModel::kernel(a, c, 1.5, 0.8) == doctest::Approx(0.8 * std::exp(-1.0)).epsilon(1e-14));
  std::vector<double> far = {1e6, 1e6};
  CHECK(GpModel::kernel(a, far, 1.5, 0.8) == 0.0);
}

TEST_CASE("reference fit reproduces frozen likelihood and posterior") {
  const GpModel m = GpModel::fit(kRefX, 16, kRefY, fixed_hyps(1.5, 0.8));
  CHECK(m.nll() == doctest::Approx(5.2162026335532072).epsilon(1e-12));
  double mean = 0.0;
  for (double v : kRefY) mean += v;
  mean /= static_cast<double>(kRefY.size());
  CHECK(m.mean_constant() == mean);

  std::vector<double> q1(16, 0.3), q2(16);
  for (int i = 0; i < 16; ++i) q2[i] = i / 15.0;
  const GpPrediction p1 = m.predict(q1), p2 = m.predict(q2);
  CHECK(p1.mu == doctest::Approx(0.36093637921773664).epsilon(1e-12));
  CHECK(p2.mu == doctest::Approx(0.64297516155804835).epsilon(1e-12));
  CHECK(p1.sigma * p1.sigma == doctest::Approx(0.15181723043204842).epsilon(1e-10));
  CHECK(p2.sigma * p2.sigma == doctest::Approx(0.33679190032853462).epsilon(1e-10));
}

TEST_CASE("analytic likelihood gradient matches finite differences") {
  std::array<double, 2> grad{};
  const double nll = gp_nll(kRefX, 16, kRefY, 1.5, 0.8, 1e-8, &grad);
  CHECK(nll == doctest::Approx(5.2162026335532072).epsilon(1e-12));
  // frozen central differences of the same objective
  CHECK(grad[0] == doctest::Approx(-0.26244615858317388).epsilon(1e-7));
  CHECK(grad[1] == doctest::Approx(2.2001502122392935).epsilon(1e-7));

  // fresh finite differences at other hyperparameter points
  for (const auto& [l, sf2] : std::vector<std::pair<double, double>>{
           {0.7, 0.3}, {2.5, 1.7}, {1.0, 1.0}}) {
    std::array<double, 2> g{};
    gp_nll(kRefX, 16, kRefY, l, sf2, 1e-8, &g);
    const double h = 1e-6;
    const double dl = (gp_nll(kRefX, 16, kRefY, l * std::exp(h), sf2, 1e-8) -
                       gp_nll(kRefX, 16, kRefY, l * std::exp(-h), sf2, 1e-8)) /
                      (2 * h);
    const double ds = (gp_nll(kRefX, 16, kRefY, l, sf2 * std::exp(2 * h), 1e-8) -
                       gp_nll(kRefX, 16, kRefY, l, sf2 * std::exp(-2 * h), 1e-8)) /
                      (2 * h);
    CHECK(g[0] == doctest::Approx(dl).epsilon(1e-4));
    CHECK(g[1] == doctest::Approx(ds).epsilon(1e-4));
  }
}

TEST_CASE("optimized fit never ends above its starting likelihood") {
  const GpModel fixed = GpModel::fit(kRefX, 16, kRefY, fixed_hyps(1.5, 0.8));
  GpFitOptions opt;
  opt.init_length_scale = 1.5;
  opt.init_signal_variance = 0.8;
  const GpModel tuned = GpModel::fit(kRefX, 16, kRefY, opt);
  CHECK(tuned.nll() <= fixed.nll() + 1e-12);
}

TEST_CASE("posterior interpolates training data") {
  const int n = 20, dim = 4;
  const auto X = random_inputs(n, dim, derive_stream(3, "interp"));
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i)
    y[i] = std::sin(3.0 * X[i * dim]) + 0.5 * X[i * dim + 1];
  const GpModel m = GpModel::fit(X, dim, y);
  for (int i = 0; i < n; ++i) {
    const std::span<const double> q(X.data() + static_cast<std::size_t>(i) * dim, dim);
    const GpPrediction p = m.predict(q);
    CHECK(std::fabs(p.mu - y[i]) <= 1e-6);
    CHECK(p.sigma >= 0.0);
    CHECK(p.sigma * p.sigma <= m.jitter() + 1e-8);
  }
}

TEST_CASE("constant targets collapse to the constant") {
  const auto X = random_inputs(8, 3, derive_stream(4, "const"));
  const std::vector<double> y(8, 0.42);
  const GpModel m = GpModel::fit(X, 3, y);
  std::vector<double> q = {0.9, 0.1, 0.5};
  const GpPrediction p = m.predict(q);
  CHECK(p.mu == doctest::Approx(0.42).epsilon(1e-9));
  CHECK(p.sigma * p.sigma <= m.signal_variance() + 1e-12);
}

TEST_CASE("far queries revert to the prior") {
  const GpModel m = GpModel::fit(kRefX, 16, kRefY, fixed_hyps(0.5, 0.8));
  std::vector<double> q(16, 50.0);
  const GpPrediction p = m.predict(q);
  CHECK(p.mu == doctest::Approx(m.mean_constant()).epsilon(1e-12));
  CHECK(p.sigma * p.sigma == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("adding data never raises posterior variance") {
  const int dim = 4;
  auto X = random_inputs(12, dim, derive_stream(5, "grow"));
  std::vector<double> y(12);
  for (int i = 0; i < 12; ++i) y[i] = std::cos(2.0 * X[i * dim + 2]);
  const GpModel before = GpModel::fit(X, dim, y, fixed_hyps(0.8, 0.5));

  auto X2 = X;
  Rng rng(derive_stream(5, "extra"));
  for (int d = 0; d < dim; ++d) X2.push_back(rng.next_double());
  auto y2 = y;
  y2.push_back(std::cos(2.0 * X2[12 * dim + 2]));
  const GpModel after = GpModel::fit(X2, dim, y2, fixed_hyps(0.8, 0.5));

  const auto Q = random_inputs(64, dim, derive_stream(5, "query"));
  for (int i = 0; i < 64; ++i) {
    const std::span<const double> q(Q.data() + static_cast<std::size_t>(i) * dim, dim);
    CHECK(after.predict(q).sigma * after.predict(q).sigma <=
          before.predict(q).sigma * before.predict(q).sigma + 1e-8);
  }
}

TEST_CASE("batch prediction and ucb agree with scalar calls") {
  const GpModel m = GpModel::fit(kRefX, 16, kRefY, fixed_hyps(1.2, 0.6));
  const auto Q = random_inputs(10, 16, derive_stream(6, "batch"));
  std::vector<double> mu, sigma;
  m.predict_batch(Q, mu, &sigma);
  REQUIRE(mu.size() == 10);
  for (int i = 0; i < 10; ++i) {
    const std::span<const double> q(Q.data() + static_cast<std::size_t>(i) * 16, 16);
    const GpPrediction p = m.predict(q);
    CHECK(mu[i] == doctest::Approx(p.mu).epsilon(1e-12));
    CHECK(sigma[i] == doctest::Approx(p.sigma).epsilon(1e-10));
    CHECK(m.ucb(q, 20.0) == doctest::Approx(p.mu + 20.0 * p.sigma).epsilon(1e-12));
    CHECK(m.ucb(q, 0.0) == p.mu);
  }
}

TEST_CASE("triple prediction shares the cross distances faithfully") {
  const GpModel perf = GpModel::fit(kRefX, 16, kRefY, fixed_hyps(1.2, 0.6));
  std::vector<double> y1 = kRefY, y2 = kRefY;
  for (auto& v : y1) v *= 0.5;
  for (auto& v : y2) v = 1.0 - v;
  const GpModel f1 = GpModel::fit(kRefX, 16, y1, fixed_hyps(0.9, 0.4));
  const GpModel f2 = GpModel::fit(kRefX, 16, y2, fixed_hyps(1.7, 0.3));

  const auto Q = random_inputs(7, 16, derive_stream(8, "triple"));
  std::vector<double> score, m1, m2;
  predict_triple(perf, f1, f2, Q, 20.0, score, m1, m2);
  for (int i = 0; i < 7; ++i) {
    const std::span<const double> q(Q.data() + static_cast<std::size_t>(i) * 16, 16);
    CHECK(score[i] == doctest::Approx(perf.ucb(q, 20.0)).epsilon(1e-10));
    CHECK(m1[i] == doctest::Approx(f1.predict(q).mu).epsilon(1e-12));
    CHECK(m2[i] == doctest::Approx(f2.predict(q).mu).epsilon(1e-12));
  }
}

TEST_CASE("grid search never loses to a covered single start") {
  GpFitOptions opt;
  opt.init_length_scale = 1.0;
  opt.init_signal_variance = 0.5;
  const GpModel single = GpModel::fit(kRefX, 16, kRefY, opt);
  const std::vector<std::pair<double, double>> grid = {
      {0.25, 0.1}, {1.0, 0.5}, {4.0, 2.0}};
  const GpModel best = GpModel::fit_with_grid_search(kRefX, 16, kRefY, grid, opt);
  CHECK(best.nll() <= single.nll() + 1e-10);
}

TEST_CASE("duplicate inputs split cleanly at the default jitter") {
  // K for an exact duplicate pair is [[1+j, 1], [1, 1+j]]: still numerically
  // SPD at j = 1e-8, so the fit succeeds without touching the jitter and the
  // conflicting targets average out at the shared input
  std::vector<double> X = {0.3, 0.3, 0.3, 0.3, 0.7, 0.7};
  const std::vector<double> y = {0.0, 1.0, 0.5};
  const GpModel m = GpModel::fit(X, 2, y, fixed_hyps(1.0, 1.0));
  CHECK(m.fitted());
  CHECK(m.jitter() == 1e-8);
  std::vector<double> q = {0.3, 0.3};
  const double mu = m.predict(q).mu;
  CHECK(mu == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("jitter escalates past a singular kernel matrix") {
  // 1 + 1e-18 == 1.0 in double, so the duplicate block starts exactly
  // singular and the first Cholesky pivots hit zero until the x10 ladder
  // reaches a representable diagonal bump
  std::vector<double> X = {0.3, 0.3, 0.3, 0.3, 0.7, 0.7};
  const std::vector<double> y = {0.0, 1.0, 0.5};
  GpFitOptions opt = fixed_hyps(1.0, 1.0);
  opt.jitter = 1e-18;
  const GpModel m = GpModel::fit(X, 2, y, opt);
  CHECK(m.fitted());
  CHECK(m.jitter() > 1e-18);
  std::vector<double> q = {0.5, 0.5};
  CHECK(std::isfinite(m.predict(q).mu));
  CHECK(std::isfinite(m.predict(q).sigma));
}

TEST_CASE("training set size is hard-capped") {
  const int n = GpModel::kMaxTrainingPoints + 1;
  const auto X = random_inputs(n, 2, derive_stream(9, "cap"));
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) y[i] = X[i * 2];
  CHECK_THROWS_AS(GpModel::fit(X, 2, y, fixed_hyps(1.0, 1.0)), GpError);
  CHECK_THROWS_AS(GpModel::fit({0.1, 0.2}, 2, {0.5}), GpError);  // n < 2
}

TEST_CASE("cross validation beats the untrained initial guess on smooth data") {
  const int n = 20, dim = 16;
  Rng rng(derive_stream(10, "loocv"));
  std::vector<double> X(static_cast<std::size_t>(n) * dim, 0.5);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    X[i * dim] = i / static_cast<double>(n - 1);
    y[i] = 1.0 + 0.5 * std::sin(3.0 * X[i * dim]);
  }
  const double tuned = GpModel::loocv_mape(X, dim, y);
  GpFitOptions frozen;
  frozen.init_length_scale = 12.0;
  frozen.init_signal_variance = 1e-4;
  frozen.optimize = false;
  const double untuned = GpModel::loocv_mape(X, dim, y, frozen);
  CHECK(tuned < untuned);
  CHECK(tuned < 10.0);

  // near-zero targets are excluded, not folded into the percentage
  std::vector<double> y0 = y;
  y0[4] = 0.0;
  int excluded = 0;
  GpModel::loocv_mape(X, dim, y0, {}, {}, &excluded);
  CHECK(excluded == 1);
}
