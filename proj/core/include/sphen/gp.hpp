#pragma once
#include <array>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sphen {

struct GpPrediction {
  double mu = 0.0;
  double sigma = 0.0;  // predictive standard deviation, >= 0
};

struct GpFitOptions {
  double init_length_scale = 1.0;
  // < 0 selects the training-target variance
  double init_signal_variance = -1.0;
  double jitter = 1e-8;
  // objective-evaluation cap of the marginal-likelihood minimizer
  int max_iterations = 1000;
  // false keeps the initial hyperparameters (no optimization)
  bool optimize = true;
};

class GpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gaussian-process regression with an isotropic squared-exponential kernel
//   k(a,b) = sf2 * exp(-|a-b|^2 / (2 l^2))
// and a constant mean fixed to the training-target mean. Hyperparameters are
// optimized in log space by conjugate gradients on the negative log marginal
// likelihood; the returned model caches the Cholesky factorization and is
// immutable, so concurrent prediction is safe.
class GpModel {
 public:
  // keeps memory bounded; both optimization loops stay within this by design
  static constexpr int kMaxTrainingPoints = 1040;

  GpModel() = default;

  // X is row-major n x dim. Throws GpError when the kernel matrix stays
  // non-positive-definite after jitter escalation (x10 up to 1e-2).
  static GpModel fit(std::vector<double> X, int dim, std::vector<double> y,
                     const GpFitOptions& opt = {});

  // restarts fit from every (init_length_scale, init_signal_variance) pair and
  // keeps the lowest final NLL; throws only if every start fails
  static GpModel fit_with_grid_search(std::vector<double> X, int dim, std::vector<double> y,
                                      const std::vector<std::pair<double, double>>& grid,
                                      const GpFitOptions& opt = {});

  bool fitted() const { return n_ > 0; }
  int n() const { return n_; }
  int dim() const { return dim_; }
  double length_scale() const { return length_scale_; }
  double signal_variance() const { return signal_variance_; }
  double jitter() const { return jitter_; }
  double mean_constant() const { return mean_; }
  double nll() const { return nll_; }
  const std::vector<double>& inputs() const { return X_; }
  const std::vector<double>& targets() const { return y_; }

  GpPrediction predict(std::span<const double> query) const;
  double ucb(std::span<const double> query, double kappa) const;

  // Q row-major m x dim; sigma may be null to skip the variance solve
  void predict_batch(std::span<const double> Q, std::vector<double>& mu,
                     std::vector<double>* sigma) const;

  static double kernel(std::span<const double> a, std::span<const double> b,
                       double length_scale, double signal_variance);

  // Per-fold refit leave-one-out cross validation, error as a percentage.
  // Folds with |target| < 1e-12 are excluded (MAPE undefined); their count is
  // reported through n_excluded. Needs >= 3 samples. A non-empty grid enables
  // restarts per fold.
  static double loocv_mape(const std::vector<double>& X, int dim,
                           const std::vector<double>& y, const GpFitOptions& opt = {},
                           const std::vector<std::pair<double, double>>& grid = {},
                           int* n_excluded = nullptr);

 private:
  int n_ = 0, dim_ = 0;
  std::vector<double> X_;      // n x dim
  std::vector<double> y_;      // kept for serialization round trips
  std::vector<double> alpha_;  // (K + jI)^-1 (y - mean)
  std::vector<double> L_;      // lower Cholesky factor, n x n row-major
  double mean_ = 0.0;
  double length_scale_ = 1.0;
  double signal_variance_ = 1.0;
  double jitter_ = 1e-8;
  double nll_ = 0.0;

  friend void predict_triple(const GpModel&, const GpModel&, const GpModel&,
                             std::span<const double>, double, std::vector<double>&,
                             std::vector<double>&, std::vector<double>&);
};

// Batch scoring used by the optimization loops: UCB of the performance model
// plus means of both feature models, sharing one cross-distance computation.
// All three models must be trained on the same inputs.
void predict_triple(const GpModel& perf, const GpModel& feat1, const GpModel& feat2,
                    std::span<const double> Q, double kappa, std::vector<double>& score,
                    std::vector<double>& f1_mu, std::vector<double>& f2_mu);

// Negative log marginal likelihood of mean-centered targets at fixed
// hyperparameters and, optionally, its analytic gradient with respect to
// (log length_scale, log signal_std). Diagnostic hook: this is the exact
// objective the fitting optimizer descends.
double gp_nll(const std::vector<double>& X, int dim, const std::vector<double>& y,
              double length_scale, double signal_variance, double jitter,
              std::array<double, 2>* grad_log = nullptr);

}  // namespace sphen
