#pragma once
#include <span>
#include <string>
#include <vector>

#include "sphen/archive.hpp"
#include "sphen/qd.hpp"

namespace sphen {

// Tie-corrected (tau-b) Kendall rank correlation. NaN when either input is
// fully tied (undefined denominator). Needs n >= 2.
double kendall_tau(std::span<const double> a, std::span<const double> b);

// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> a, std::span<const double> b);

double rmse(std::span<const double> a, std::span<const double> b);

// Mean absolute percentage error; entries with |truth| < 1e-12 are skipped
// and counted through n_excluded.
double mape(std::span<const double> pred, std::span<const double> truth,
            int* n_excluded = nullptr);

struct WelchResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  double mean1 = 0.0, mean2 = 0.0;
};

// Welch's unequal-variance two-sample t-test, two-sided. Both samples need
// n >= 2. Zero variance on both sides short-circuits to p = 1 on equal means
// and p = 0 otherwise.
WelchResult welch_t_test(std::span<const double> x1, std::span<const double> x2);

struct FeatureRange {
  double lo = 0.0;
  double hi = 0.0;
};

// [min - 10% span, max + 10% span]; throws std::invalid_argument when the
// span degenerates below 1e-9
FeatureRange estimate_feature_range(std::span<const double> values);

struct BinEvaluation {
  int row = 0, col = 0;
  bool valid = false;  // false when the precise evaluation diverged
  double pred_performance = 0.0, true_performance = 0.0;
  double pred_f1 = 0.0, pred_f2 = 0.0;
  double true_f1 = 0.0, true_f2 = 0.0;
  int true_row = 0, true_col = 0;
};

struct MapEvaluation {
  std::vector<BinEvaluation> bins;  // one per filled bin, row-major
  int evaluated = 0;
  int failed = 0;  // divergent precise evaluations, excluded from summaries
  double rmse_performance = 0.0;
  double rmse_f1 = 0.0, rmse_f2 = 0.0;
  double misclassified_fraction = 0.0;  // true features land outside the stored bin
  double tau_performance = 0.0;         // predicted-vs-true rank correlation
};

// Precisely re-evaluates every elite of a map and summarizes model quality.
// A map whose elites carry true values (plain quality diversity) comes back
// with all-zero errors.
MapEvaluation ground_truth_eval(const NicheMap& map, const Domain& domain, int threads = 1);

struct RunGroup {
  std::string algorithm;
  std::vector<ExperimentLog> logs;  // one per replicate
};

struct CompareEntry {
  std::string metric;  // e.g. "pfe to fill >= 0.50"
  std::string algo_a, algo_b;
  std::vector<double> values_a, values_b;  // per replicate, NaN = never reached
  WelchResult welch;
  bool comparable = false;  // both sides had >= 2 replicates reaching the target
};

struct CompareReport {
  std::vector<CompareEntry> entries;
  std::string table;  // plain-text rendering
};

// Pairwise Welch tests of the evaluation budget needed to reach a target fill
// fraction and a target mean performance, over replicate logs. The null reads
// "both algorithms need the same number of evaluations".
CompareReport compare_runs(const std::vector<RunGroup>& groups, double target_fill,
                           double target_performance);

}  // namespace sphen
