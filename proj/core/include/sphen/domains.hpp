#pragma once
#include "sphen/lbm.hpp"
#include "sphen/qd.hpp"

namespace sphen {

// Symmetry maximization over free-form octagons: performance is the point
// symmetry score, features are normalized area and circumference. Features
// fall out of the same expression as the performance, so they are cheap.
class PolygonDomain : public Domain {
 public:
  explicit PolygonDomain(int symmetry_samples = 100) : n_(symmetry_samples) {}

  std::string name() const override { return "polygon"; }
  std::array<std::string, 2> feature_names() const override {
    return {"area", "circumference"};
  }
  DomainEval evaluate_precise(const Genome& g) const override;
  bool cheap_features() const override { return true; }
  std::array<double, 2> exact_features(const Genome& g) const override;

 private:
  int n_;
};

// Wind minimization around an obstacle: performance decreases with the
// trailing-average maximum velocity, features are exact normalized area and
// simulated normalized enstrophy. No cheap feature shortcut: enstrophy needs
// the full simulation.
class FlowDomain : public Domain {
 public:
  explicit FlowDomain(FlowConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  std::string name() const override { return "flow"; }
  std::array<std::string, 2> feature_names() const override {
    return {"area", "turbulence"};
  }
  DomainEval evaluate_precise(const Genome& g) const override;
  bool cheap_features() const override { return false; }

  const FlowConfig& config() const { return cfg_; }

 private:
  FlowConfig cfg_;
};

}  // namespace sphen
