#pragma once
#include <functional>
#include <span>
#include <vector>

namespace sphen {

// Objective callback: fills grad (same size as x) and returns f(x).
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct MinimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int evals = 0;       // objective evaluations spent
  int iterations = 0;  // completed line searches
};

// Polak-Ribiere+ nonlinear conjugate gradients with a strong-Wolfe
// bracket/zoom line search. Returns the best point seen, so result.f is never
// above f(x0). max_evals caps objective evaluations.
MinimizeResult minimize(const ObjectiveFn& fg, std::vector<double> x0, int max_evals = 1000);

}  // namespace sphen
