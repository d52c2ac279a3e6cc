#include "sphen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace sphen {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("rank statistic: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("rank statistic: need n >= 2");
}

// average ranks, ties share the mean of their positions
std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const std::size_t n = a.size();
  long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;  // joint tie enters neither count
      if (da == 0.0) {
        ++ties_a;
        continue;
      }
      if (db == 0.0) {
        ++ties_b;
        continue;
      }
      if ((da > 0.0) == (db > 0.0)) ++concordant;
      else ++discordant;
    }
  // tau-b: joint ties reduce both tie-corrected denominators
  long long pairs_a = concordant + discordant + ties_b;
  long long pairs_b = concordant + discordant + ties_a;
  if (pairs_a == 0 || pairs_b == 0) return kNan;
  return static_cast<double>(concordant - discordant) /
         std::sqrt(static_cast<double>(pairs_a) * static_cast<double>(pairs_b));
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = mean_of(ra), mb = mean_of(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return kNan;
  return sab / std::sqrt(saa * sbb);
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("rmse: bad inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

double mape(std::span<const double> pred, std::span<const double> truth, int* n_excluded) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("mape: bad inputs");
  double s = 0.0;
  int used = 0, skipped = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::fabs(truth[i]) < 1e-12) {
      ++skipped;
      continue;
    }
    s += std::fabs((pred[i] - truth[i]) / truth[i]);
    ++used;
  }
  if (n_excluded) *n_excluded = skipped;
  if (used == 0) return kNan;
  return 100.0 * s / used;
}

WelchResult welch_t_test(std::span<const double> x1, std::span<const double> x2) {
  if (x1.size() < 2 || x2.size() < 2)
    throw std::invalid_argument("welch: both samples need n >= 2");
  WelchResult r;
  r.mean1 = mean_of(x1);
  r.mean2 = mean_of(x2);
  const double v1 = var_of(x1, r.mean1), v2 = var_of(x2, r.mean2);
  const double n1 = static_cast<double>(x1.size()), n2 = static_cast<double>(x2.size());
  const double se2 = v1 / n1 + v2 / n2;
  if (se2 == 0.0) {  // exact-equality shortcut for degenerate samples
    r.t = 0.0;
    r.df = n1 + n2 - 2.0;
    r.p = (r.mean1 == r.mean2) ? 1.0 : 0.0;
    return r;
  }
  r.t = (r.mean1 - r.mean2) / std::sqrt(se2);
  r.df = se2 * se2 /
         ((v1 / n1) * (v1 / n1) / (n1 - 1.0) + (v2 / n2) * (v2 / n2) / (n2 - 1.0));
  const boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(dist, -std::fabs(r.t));
  return r;
}

FeatureRange estimate_feature_range(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("feature range: empty sweep");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;
  if (span < 1e-9) throw std::invalid_argument("feature range: degenerate span");
  return {lo - 0.1 * span, hi + 0.1 * span};
}

MapEvaluation ground_truth_eval(const NicheMap& map, const Domain& domain, int threads) {
  MapEvaluation ev;
  const auto filled = map.filled_indices();
  std::vector<Genome> genomes;
  genomes.reserve(filled.size());
  for (auto idx : filled) genomes.push_back(map.bin(idx)->genome);
  const auto evals = evaluate_batch(domain, genomes, threads);

  std::vector<double> pp, tp, pf1, tf1, pf2, tf2;
  int mis = 0, ok = 0;
  for (std::size_t i = 0; i < filled.size(); ++i) {
    const auto& e = *map.bin(filled[i]);
    BinEvaluation b;
    b.row = static_cast<int>(filled[i]) / map.cols();
    b.col = static_cast<int>(filled[i]) % map.cols();
    b.pred_performance = e.performance;
    b.pred_f1 = e.f1;
    b.pred_f2 = e.f2;
    b.valid = evals[i].valid;
    ++ev.evaluated;
    if (!b.valid) {
      ++ev.failed;
      ev.bins.push_back(b);
      continue;
    }
    b.true_performance = evals[i].performance;
    b.true_f1 = evals[i].features[0];
    b.true_f2 = evals[i].features[1];
    const auto [tr, tc] = NicheMap::bin_index(b.true_f1, b.true_f2, map.rows(), map.cols());
    b.true_row = tr;
    b.true_col = tc;
    ev.bins.push_back(b);
    pp.push_back(b.pred_performance);
    tp.push_back(b.true_performance);
    pf1.push_back(b.pred_f1);
    tf1.push_back(b.true_f1);
    pf2.push_back(b.pred_f2);
    tf2.push_back(b.true_f2);
    ++ok;
    if (tr != b.row || tc != b.col) ++mis;
  }
  if (ok > 0) {
    ev.rmse_performance = rmse(pp, tp);
    ev.rmse_f1 = rmse(pf1, tf1);
    ev.rmse_f2 = rmse(pf2, tf2);
    ev.misclassified_fraction = static_cast<double>(mis) / ok;
    ev.tau_performance = ok >= 2 ? kendall_tau(pp, tp) : kNan;
  }
  return ev;
}

CompareReport compare_runs(const std::vector<RunGroup>& groups, double target_fill,
                           double target_performance) {
  auto pfe_to = [](const ExperimentLog& log, double target, bool fill) {
    for (const auto& row : log.rows) {
      const double v = fill ? row.filled_fraction : row.mean_performance;
      if (v >= target) return static_cast<double>(row.pfe);
    }
    return kNan;
  };

  CompareReport out;
  std::ostringstream os;
  os << "pairwise Welch tests, null: same evaluation budget to target\n";
  char buf[256];
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j)
      for (int which = 0; which < 2; ++which) {
        const bool fill = which == 0;
        const double target = fill ? target_fill : target_performance;
        CompareEntry e;
        std::snprintf(buf, sizeof buf, "pfe to %s >= %g",
                      fill ? "fill" : "mean performance", target);
        e.metric = buf;
        e.algo_a = groups[i].algorithm;
        e.algo_b = groups[j].algorithm;
        for (const auto& log : groups[i].logs)
          e.values_a.push_back(pfe_to(log, target, fill));
        for (const auto& log : groups[j].logs)
          e.values_b.push_back(pfe_to(log, target, fill));
        auto reached = [](const std::vector<double>& v) {
          std::vector<double> r;
          for (double x : v)
            if (!std::isnan(x)) r.push_back(x);
          return r;
        };
        const auto ra = reached(e.values_a), rb = reached(e.values_b);
        e.comparable = ra.size() >= 2 && rb.size() >= 2;
        if (e.comparable) e.welch = welch_t_test(ra, rb);
        std::snprintf(buf, sizeof buf, "%-34s %-14s vs %-14s ", e.metric.c_str(),
                      e.algo_a.c_str(), e.algo_b.c_str());
        os << buf;
        if (e.comparable) {
          std::snprintf(buf, sizeof buf, "mean %.1f vs %.1f  t=%.4f  p=%.6g\n",
                        e.welch.mean1, e.welch.mean2, e.welch.t, e.welch.p);
          os << buf;
        } else {
          os << "not comparable (target unreached in " << (ra.size() < 2 ? e.algo_a : e.algo_b)
             << ")\n";
        }
        out.entries.push_back(std::move(e));
      }
  out.table = os.str();
  return out;
}

}  // namespace sphen
