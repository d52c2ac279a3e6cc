#include "sphen/domains.hpp"

namespace sphen {

DomainEval PolygonDomain::evaluate_precise(const Genome& g) const {
  const Polygon p = express(g);
  const ShapeFeatures sf = shape_features(p);
  DomainEval ev;
  ev.valid = true;
  ev.performance = symmetry_performance(g, n_);
  ev.features = {sf.area_norm, sf.circ_norm};
  ev.raw_features = {sf.area, sf.circumference};
  return ev;
}

std::array<double, 2> PolygonDomain::exact_features(const Genome& g) const {
  const ShapeFeatures sf = shape_features(express(g));
  return {sf.area_norm, sf.circ_norm};
}

DomainEval FlowDomain::evaluate_precise(const Genome& g) const {
  const FlowEval fe = evaluate_flow(g, cfg_);
  DomainEval ev;
  ev.valid = fe.valid;
  ev.fail_step = fe.fail_step;
  if (!fe.valid) return ev;
  ev.performance = fe.performance;
  ev.features = {fe.area_norm, fe.turbulence_norm};
  ev.raw_features = {fe.u_max_avg, fe.enstrophy_avg};
  ev.aux = fe.u_max_avg;
  ev.nuisance_ok = fe.nuisance_ok;
  return ev;
}

}  // namespace sphen
