#include "sphen/minimize.hpp"

#include <cmath>
#include <limits>

namespace sphen {
namespace {

constexpr double kC1 = 1e-4;  // sufficient decrease
constexpr double kC2 = 0.1;   // curvature (strong), tight enough for CG
constexpr double kGradTol = 1e-9;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

struct Eval {
  double f;
  std::vector<double> g;
};

// cubic interpolation minimizer on [a, b] given values and directional
// derivatives at both ends; falls back to bisection when degenerate
double cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return 0.5 * (a + b);
  const double d2 = std::sqrt(disc) * (b > a ? 1.0 : -1.0);
  double t = b - (b - a) * ((db + d2 - d1) / (db - da + 2.0 * d2));
  if (!std::isfinite(t)) return 0.5 * (a + b);
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  if (t < lo + margin) t = lo + margin;
  if (t > hi - margin) t = hi - margin;
  return t;
}

}  // namespace

MinimizeResult minimize(const ObjectiveFn& fg, std::vector<double> x0, int max_evals) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  res.x = x0;

  std::vector<double> x = x0, g(n), g_new(n), d(n), xt(n);
  double f = fg(x, g);
  res.evals = 1;
  res.f = f;
  res.x = x;

  for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
  double slope = dot(g, d);
  double alpha = 1.0 / (1.0 + inf_norm(g));

  auto eval_at = [&](double a, double& ft, std::vector<double>& gt) {
    for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + a * d[i];
    ft = fg(xt, gt);
    ++res.evals;
    if (ft < res.f && std::isfinite(ft)) {
      res.f = ft;
      res.x = xt;
    }
  };

  bool tried_restart = false;
  while (res.evals < max_evals) {
    if (inf_norm(g) < kGradTol) break;
    if (slope >= 0.0) {  // not a descent direction: restart along -g
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = dot(g, d);
      if (slope >= -kGradTol) break;
      alpha = 1.0 / (1.0 + inf_norm(g));
    }

    // strong-Wolfe line search: bracket then zoom
    double a_prev = 0.0, f_prev = f, d_prev = slope;
    double a = alpha;
    double a_lo = 0.0, f_lo = f, d_lo = slope;
    double a_hi = -1.0, f_hi = 0.0, d_hi = 0.0;
    bool bracketed = false, found = false;
    double ft;
    std::vector<double> gt(n);

    for (int ls = 0; ls < 12 && res.evals < max_evals; ++ls) {
      eval_at(a, ft, gt);
      const double dt = dot(gt, d);
      if (!std::isfinite(ft) || ft > f + kC1 * a * slope || (ls > 0 && ft >= f_prev)) {
        a_lo = a_prev; f_lo = f_prev; d_lo = d_prev;
        a_hi = a; f_hi = ft; d_hi = dt;
        bracketed = true;
        break;
      }
      if (std::fabs(dt) <= -kC2 * slope) {
        found = true;
        break;
      }
      if (dt >= 0.0) {
        a_lo = a; f_lo = ft; d_lo = dt;
        a_hi = a_prev; f_hi = f_prev; d_hi = d_prev;
        bracketed = true;
        break;
      }
      a_prev = a; f_prev = ft; d_prev = dt;
      a *= 3.0;  // extrapolate
    }

    if (bracketed && !found) {
      for (int z = 0; z < 12 && res.evals < max_evals; ++z) {
        if (!std::isfinite(f_hi)) {  // shrink toward the finite end
          a = a_lo + 0.33 * (a_hi - a_lo);
        } else {
          a = cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi);
        }
        eval_at(a, ft, gt);
        const double dt = dot(gt, d);
        if (!std::isfinite(ft) || ft > f + kC1 * a * slope || ft >= f_lo) {
          a_hi = a; f_hi = ft; d_hi = dt;
        } else {
          if (std::fabs(dt) <= -kC2 * slope) {
            found = true;
            break;
          }
          if (dt * (a_hi - a_lo) >= 0.0) {
            a_hi = a_lo; f_hi = f_lo; d_hi = d_lo;
          }
          a_lo = a; f_lo = ft; d_lo = dt;
        }
        if (std::fabs(a_hi - a_lo) < 1e-14 * std::max(1.0, std::fabs(a_lo))) break;
      }
      if (!found && f_lo < f) {  // accept the best bracketed point
        a = a_lo;
        eval_at(a, ft, gt);
        found = true;
      }
    }

    if (!found || ft >= f - std::fabs(f) * 1e-14 - 1e-15) {
      if (tried_restart) break;  // no further progress
      tried_restart = true;
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = dot(g, d);
      alpha = 1.0 / (1.0 + inf_norm(g));
      continue;
    }
    tried_restart = false;

    // accept step
    const double gtd_new = dot(gt, d);
    for (std::size_t i = 0; i < n; ++i) x[i] += a * d[i];
    f = ft;
    g_new = gt;
    ++res.iterations;

    // Polak-Ribiere+ update
    double gg = dot(g, g);
    double beta = 0.0;
    if (gg > 0.0) {
      double pr = 0.0;
      for (std::size_t i = 0; i < n; ++i) pr += g_new[i] * (g_new[i] - g[i]);
      beta = std::max(0.0, pr / gg);
    }
    const double slope_old = slope;
    for (std::size_t i = 0; i < n; ++i) d[i] = -g_new[i] + beta * d[i];
    g = g_new;
    slope = dot(g, d);
    if (slope >= 0.0) {
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = dot(g, d);
    }
    // slope-ratio warm start for the next search (bounded)
    alpha = a * std::min(10.0, std::max(0.1, slope_old / (slope - 1e-300)));
    if (!(alpha > 0.0) || !std::isfinite(alpha)) alpha = 1.0;
    (void)gtd_new;
  }

  return res;
}

}  // namespace sphen
