#include "sphen/gp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "sphen/minimize.hpp"

namespace sphen {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using MapMat = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>;

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kHypClamp = 15.0;  // soft barrier on |log hyp|

MatrixXd pairwise_sqdist(const MapMat& X) {
  const VectorXd sq = X.rowwise().squaredNorm();
  MatrixXd D = sq.replicate(1, X.rows());
  D += sq.transpose().replicate(X.rows(), 1);
  D.noalias() -= 2.0 * X * X.transpose();
  return D.cwiseMax(0.0);
}

MatrixXd cross_sqdist(const MapMat& X, const MapMat& Q) {
  const VectorXd sx = X.rowwise().squaredNorm();
  const VectorXd sq = Q.rowwise().squaredNorm();
  MatrixXd D = sx.replicate(1, Q.rows());
  D += sq.transpose().replicate(X.rows(), 1);
  D.noalias() -= 2.0 * X * Q.transpose();
  return D.cwiseMax(0.0);
}

struct NllWork {
  const MatrixXd& D2;
  const VectorXd& t;
  double jitter;

  // returns NLL and gradient wrt (log l, log sf); infinity when the
  // factorization fails at the current jitter
  double operator()(std::span<const double> th, std::span<double> grad) const {
    const int n = static_cast<int>(t.size());
    const double log_l = th[0], log_sf = th[1];
    double barrier = 0.0, dbar0 = 0.0, dbar1 = 0.0;
    if (std::fabs(log_l) > kHypClamp) {
      const double e = std::fabs(log_l) - kHypClamp;
      barrier += 1e3 * e * e;
      dbar0 = 2e3 * e * (log_l > 0 ? 1.0 : -1.0);
    }
    if (std::fabs(log_sf) > kHypClamp) {
      const double e = std::fabs(log_sf) - kHypClamp;
      barrier += 1e3 * e * e;
      dbar1 = 2e3 * e * (log_sf > 0 ? 1.0 : -1.0);
    }
    const double l2 = std::exp(2.0 * log_l);
    const double sf2 = std::exp(2.0 * log_sf);

    MatrixXd K = (D2 * (-0.5 / l2)).array().exp().matrix() * sf2;
    MatrixXd A = K;
    A.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
      grad[0] = grad[1] = 0.0;
      return std::numeric_limits<double>::infinity();
    }
    const VectorXd alpha = llt.solve(t);
    const double logdet = llt.matrixLLT().diagonal().array().log().sum();
    const double nll = 0.5 * t.dot(alpha) + logdet + 0.5 * n * kLog2Pi + barrier;

    // W = A^-1 - alpha alpha^T;  dNLL/dth = 0.5 tr(W dK/dth)
    MatrixXd W = llt.solve(MatrixXd::Identity(n, n));
    W.noalias() -= alpha * alpha.transpose();
    // dK/dlog_l = K .* D2 / l^2 ; dK/dlog_sf = 2 K
    grad[0] = 0.5 * (W.array() * K.array() * D2.array()).sum() / l2 + dbar0;
    grad[1] = (W.array() * K.array()).sum() + dbar1;
    return nll;
  }
};

}  // namespace

double gp_nll(const std::vector<double>& X, int dim, const std::vector<double>& y,
              double length_scale, double signal_variance, double jitter,
              std::array<double, 2>* grad_log) {
  const int n = static_cast<int>(y.size());
  if (n < 2 || dim < 1 || X.size() != static_cast<std::size_t>(n) * dim)
    throw GpError("gp_nll: need >= 2 samples with matching input rows");
  const MapMat Xm(X.data(), n, dim);
  const MatrixXd D2 = pairwise_sqdist(Xm);
  VectorXd t(n);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += y[i];
  mean /= n;
  for (int i = 0; i < n; ++i) t[i] = y[i] - mean;
  const NllWork work{D2, t, jitter};
  const double th[2] = {std::log(length_scale), 0.5 * std::log(signal_variance)};
  double g[2];
  const double nll = work(th, g);
  if (grad_log) *grad_log = {g[0], g[1]};
  return nll;
}

double GpModel::kernel(std::span<const double> a, std::span<const double> b,
                       double length_scale, double signal_variance) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return signal_variance * std::exp(-d2 / (2.0 * length_scale * length_scale));
}

GpModel GpModel::fit(std::vector<double> X, int dim, std::vector<double> y,
                     const GpFitOptions& opt) {
  const int n = static_cast<int>(y.size());
  if (n < 2 || dim < 1 || X.size() != static_cast<std::size_t>(n) * dim)
    throw GpError("fit: need >= 2 samples with matching input rows");
  if (n > kMaxTrainingPoints) throw GpError("fit: training set exceeds the hard cap");
  for (double v : y)
    if (!std::isfinite(v)) throw GpError("fit: non-finite target");

  const MapMat Xm(X.data(), n, dim);
  VectorXd t(n);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += y[i];
  mean /= n;
  for (int i = 0; i < n; ++i) t[i] = y[i] - mean;

  double init_sf2 = opt.init_signal_variance;
  if (init_sf2 <= 0.0) {
    init_sf2 = t.squaredNorm() / n;
    if (init_sf2 < 1e-12) init_sf2 = 1e-12;
  }

  const MatrixXd D2 = pairwise_sqdist(Xm);

  // jitter escalation: factorization failures raise the diagonal by x10 up to
  // 1e-2; the escalated value then applies to the whole fit (deterministic)
  double jit = opt.jitter;
  std::vector<double> theta = {std::log(opt.init_length_scale), 0.5 * std::log(init_sf2)};
  double final_nll = 0.0;
  std::vector<double> g(2);
  for (;;) {
    NllWork work{D2, t, jit};
    const double f0 = work(theta, g);
    if (!std::isfinite(f0)) {
      if (jit >= 1e-2) throw GpError("fit: kernel matrix not PD at maximum jitter");
      jit = std::min(jit * 10.0, 1e-2);
      continue;
    }
    if (!opt.optimize) {
      final_nll = f0;
      break;
    }
    MinimizeResult r = minimize([&work](std::span<const double> x, std::span<double> gr) {
      return work(x, gr);
    }, theta, opt.max_iterations);
    // minimize keeps the best seen point, so r.f <= f0 always holds
    theta = r.x;
    final_nll = r.f;
    break;
  }

  GpModel m;
  m.n_ = n;
  m.dim_ = dim;
  m.X_ = std::move(X);
  m.y_ = std::move(y);
  m.mean_ = mean;
  m.length_scale_ = std::exp(theta[0]);
  m.signal_variance_ = std::exp(2.0 * theta[1]);
  m.jitter_ = jit;
  m.nll_ = final_nll;

  MatrixXd A = (D2 * (-0.5 / (m.length_scale_ * m.length_scale_))).array().exp().matrix() *
               m.signal_variance_;
  A.diagonal().array() += jit;
  Eigen::LLT<MatrixXd> llt(A);
  while (llt.info() != Eigen::Success) {
    if (m.jitter_ >= 1e-2) throw GpError("fit: kernel matrix not PD at maximum jitter");
    m.jitter_ = std::min(m.jitter_ * 10.0, 1e-2);
    A.diagonal().array() += m.jitter_ - jit;
    jit = m.jitter_;
    llt.compute(A);
  }
  const VectorXd alpha = llt.solve(t);
  m.alpha_.assign(alpha.data(), alpha.data() + n);
  const MatrixXd Lm = llt.matrixL();
  m.L_.resize(static_cast<std::size_t>(n) * n);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      m.L_.data(), n, n) = Lm;
  return m;
}

GpModel GpModel::fit_with_grid_search(std::vector<double> X, int dim, std::vector<double> y,
                                      const std::vector<std::pair<double, double>>& grid,
                                      const GpFitOptions& opt) {
  if (grid.empty()) throw GpError("fit_with_grid_search: empty grid");
  GpModel best;
  bool have = false;
  std::string last_err = "no start succeeded";
  for (const auto& [l0, sf0] : grid) {
    GpFitOptions o = opt;
    o.init_length_scale = l0;
    o.init_signal_variance = sf0;
    try {
      GpModel m = fit(X, dim, y, o);
      if (!have || m.nll() < best.nll()) {
        best = std::move(m);
        have = true;
      }
    } catch (const GpError& e) {
      last_err = e.what();
    }
  }
  if (!have) throw GpError(last_err);
  return best;
}

GpPrediction GpModel::predict(std::span<const double> query) const {
  std::vector<double> mu(1), sig(1);
  predict_batch(query, mu, &sig);
  return {mu[0], sig[0]};
}

double GpModel::ucb(std::span<const double> query, double kappa) const {
  const GpPrediction p = predict(query);
  return p.mu + kappa * p.sigma;
}

void GpModel::predict_batch(std::span<const double> Q, std::vector<double>& mu,
                            std::vector<double>* sigma) const {
  const int m = static_cast<int>(Q.size()) / dim_;
  const MapMat Xm(X_.data(), n_, dim_);
  const MapMat Qm(Q.data(), m, dim_);
  MatrixXd Ks = cross_sqdist(Xm, Qm);  // n x m
  Ks = (Ks * (-0.5 / (length_scale_ * length_scale_))).array().exp().matrix() *
       signal_variance_;

  const Eigen::Map<const VectorXd> alpha(alpha_.data(), n_);
  mu.resize(m);
  Eigen::Map<VectorXd>(mu.data(), m) = Ks.transpose() * alpha;
  for (double& v : mu) v += mean_;

  if (sigma) {
    sigma->resize(m);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>> Lm(L_.data(), n_, n_);
    MatrixXd V = Lm.triangularView<Eigen::Lower>().solve(Ks);
    for (int j = 0; j < m; ++j) {
      double var = signal_variance_ - V.col(j).squaredNorm();
      (*sigma)[j] = var > 0.0 ? std::sqrt(var) : 0.0;
    }
  }
}

void predict_triple(const GpModel& perf, const GpModel& feat1, const GpModel& feat2,
                    std::span<const double> Q, double kappa, std::vector<double>& score,
                    std::vector<double>& f1_mu, std::vector<double>& f2_mu) {
  const int n = perf.n_;
  const int dim = perf.dim_;
  const int m = static_cast<int>(Q.size()) / dim;
  const MapMat Xm(perf.X_.data(), n, dim);
  const MapMat Qm(Q.data(), m, dim);
  const MatrixXd D2 = cross_sqdist(Xm, Qm);  // shared across the three models

  auto mean_of = [&](const GpModel& g, std::vector<double>& out, MatrixXd* Ks_keep) {
    MatrixXd Ks = (D2 * (-0.5 / (g.length_scale_ * g.length_scale_)))
                      .array().exp().matrix() * g.signal_variance_;
    const Eigen::Map<const VectorXd> alpha(g.alpha_.data(), n);
    out.resize(m);
    Eigen::Map<VectorXd>(out.data(), m) = Ks.transpose() * alpha;
    for (double& v : out) v += g.mean_;
    if (Ks_keep) *Ks_keep = std::move(Ks);
  };

  MatrixXd Ks_perf;
  mean_of(perf, score, kappa > 0.0 ? &Ks_perf : nullptr);
  mean_of(feat1, f1_mu, nullptr);
  mean_of(feat2, f2_mu, nullptr);

  if (kappa > 0.0) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>> Lm(perf.L_.data(), n, n);
    MatrixXd V = Lm.triangularView<Eigen::Lower>().solve(Ks_perf);
    for (int j = 0; j < m; ++j) {
      double var = perf.signal_variance_ - V.col(j).squaredNorm();
      score[j] += kappa * (var > 0.0 ? std::sqrt(var) : 0.0);
    }
  }
}

double GpModel::loocv_mape(const std::vector<double>& X, int dim, const std::vector<double>& y,
                           const GpFitOptions& opt,
                           const std::vector<std::pair<double, double>>& grid,
                           int* n_excluded) {
  const int n = static_cast<int>(y.size());
  if (n < 3) throw GpError("loocv_mape: need >= 3 samples");
  double sum = 0.0;
  int used = 0, excluded = 0;
  std::vector<double> Xf, yf;
  Xf.reserve(static_cast<std::size_t>(n - 1) * dim);
  yf.reserve(n - 1);
  for (int k = 0; k < n; ++k) {
    if (std::fabs(y[k]) < 1e-12) {
      ++excluded;
      continue;
    }
    Xf.clear();
    yf.clear();
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      Xf.insert(Xf.end(), X.begin() + static_cast<std::size_t>(i) * dim,
                X.begin() + static_cast<std::size_t>(i + 1) * dim);
      yf.push_back(y[i]);
    }
    GpModel m = grid.empty() ? fit(Xf, dim, yf, opt)
                             : fit_with_grid_search(Xf, dim, yf, grid, opt);
    const GpPrediction p =
        m.predict(std::span<const double>(X.data() + static_cast<std::size_t>(k) * dim, dim));
    sum += std::fabs(p.mu - y[k]) / std::fabs(y[k]);
    ++used;
  }
  if (n_excluded) *n_excluded = excluded;
  if (used == 0) throw GpError("loocv_mape: all folds excluded");
  return 100.0 * sum / used;
}

}  // namespace sphen
