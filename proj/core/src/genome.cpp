#include "sphen/genome.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace sphen {

void Genome::clamp() {
  for (int i = 0; i < kDim; ++i) {
    if (v[i] < lower(i)) v[i] = lower(i);
    if (v[i] > upper(i)) v[i] = upper(i);
  }
}

bool Genome::within_bounds() const {
  for (int i = 0; i < kDim; ++i)
    if (v[i] < lower(i) || v[i] > upper(i)) return false;
  return true;
}

bool Polygon::contains(double x, double y) const {
  bool inside = false;
  for (int j = 0, k = 7; j < 8; k = j++) {
    const Vec2& a = vertices[j];
    const Vec2& b = vertices[k];
    if ((a.y > y) != (b.y > y) &&
        x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x)
      inside = !inside;
  }
  return inside;
}

Polygon express(const Genome& g) {
  // Base angles are folded to the first two quadrants and mirrored for
  // j >= 4 instead of evaluating cos(a + pi): IEEE negation is exact, so a
  // regular genome yields v_{j+4} == -v_j bitwise, which the symmetry score
  // relies on to reach 1.0 exactly.
  Polygon p;
  constexpr double q_angle[4] = {0.0, Genome::kPi4, 2.0 * Genome::kPi4,
                                 3.0 * Genome::kPi4};
  for (int j = 0; j < 8; ++j) {
    const double a = q_angle[j & 3] + g.dtheta(j);
    const double r = 0.5 * g.dr(j);
    double cx = r * std::cos(a);
    double cy = r * std::sin(a);
    if (j >= 4) {
      cx = -cx;
      cy = -cy;
    }
    p.vertices[j] = {cx, cy};
  }
  return p;
}

ShapeFeatures shape_features(const Polygon& p) {
  double twice_area = 0.0;
  double circ = 0.0;
  for (int j = 0; j < 8; ++j) {
    const Vec2& a = p.vertices[j];
    const Vec2& b = p.vertices[(j + 1) & 7];
    twice_area += a.x * b.y - b.x * a.y;
    circ += std::hypot(b.x - a.x, b.y - a.y);
  }
  ShapeFeatures f;
  f.area = 0.5 * std::fabs(twice_area);
  f.circumference = circ;
  auto norm = [](double v, double lo, double hi) {
    double t = (v - lo) / (hi - lo);
    return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  };
  f.area_norm = norm(f.area, kAreaRangeLo, kAreaRangeHi);
  f.circ_norm = norm(f.circumference, kCircRangeLo, kCircRangeHi);
  return f;
}

std::vector<Vec2> sample_boundary(const Polygon& p, int n) {
  if (n < 8 || (n & 1))
    throw std::invalid_argument("sample_boundary: n must be even and >= 8");

  // Edge lengths are quantized to 2^53 ticks and all arc positions resolved
  // in integer arithmetic. Quantization error is ~1e-16 relative, and exact
  // integer comparison makes antipodal samples of a point-symmetric polygon
  // land at bitwise-identical within-edge offsets on opposite edges.
  std::uint64_t m[8];
  std::uint64_t cum[9];
  cum[0] = 0;
  for (int e = 0; e < 8; ++e) {
    const Vec2& a = p.vertices[e];
    const Vec2& b = p.vertices[(e + 1) & 7];
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len = std::sqrt(dx * dx + dy * dy);
    m[e] = static_cast<std::uint64_t>(std::llround(len * 9007199254740992.0));  // 2^53
    cum[e + 1] = cum[e] + m[e];
  }
  const std::uint64_t total = cum[8];
  if (total == 0) throw std::invalid_argument("sample_boundary: degenerate outline");

  std::vector<Vec2> out(static_cast<std::size_t>(n));
  const auto N = static_cast<unsigned __int128>(n);
  int e = 0;
  for (int k = 0; k < n; ++k) {
    // arc position of sample k is k*total/n ticks; edge e holds it while
    // n*cum[e] <= k*total < n*cum[e+1]
    const unsigned __int128 pos = static_cast<unsigned __int128>(k) * total;
    while (e < 7 && N * cum[e + 1] <= pos) ++e;
    const unsigned __int128 num = pos - N * cum[e];
    const double t = m[e] == 0 ? 0.0
                               : static_cast<double>(num) /
                                     (static_cast<double>(n) * static_cast<double>(m[e]));
    const Vec2& a = p.vertices[e];
    const Vec2& b = p.vertices[(e + 1) & 7];
    out[k] = {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
  }
  return out;
}

double symmetry_performance(const Genome& g, int n) {
  // The arc-length walk anchors at vertex 0, so scoring the genome as given
  // would make the sample set, and with it E_s, depend on which vertex
  // carries label 0. Relabeling (a cyclic rotation, which expresses the same
  // shape rigidly rotated) must not change the score, so the walk is anchored
  // canonically instead: all eight rotations reduce to the lexicographically
  // smallest (dr, dtheta) sequence and score identically by construction.
  int best = 0;
  for (int k = 1; k < 8; ++k)
    for (int j = 0; j < 8; ++j) {
      const double dra = g.dr((j + k) & 7), drb = g.dr((j + best) & 7);
      if (dra != drb) {
        if (dra < drb) best = k;
        break;
      }
      const double dta = g.dtheta((j + k) & 7), dtb = g.dtheta((j + best) & 7);
      if (dta != dtb) {
        if (dta < dtb) best = k;
        break;
      }
    }
  Genome cg;
  for (int j = 0; j < 8; ++j) {
    cg.v[j] = g.v[(j + best) & 7];
    cg.v[8 + j] = g.v[8 + ((j + best) & 7)];
  }

  const Polygon p = express(cg);
  const auto pts = sample_boundary(p, n);

  // pairing opposite vertices first gives an exact zero centroid for
  // point-symmetric shapes
  double cx = 0.0, cy = 0.0;
  for (int j = 0; j < 4; ++j) {
    cx += p.vertices[j].x + p.vertices[j + 4].x;
    cy += p.vertices[j].y + p.vertices[j + 4].y;
  }
  cx /= 8.0;
  cy /= 8.0;

  const int half = n / 2;
  double es = 0.0;
  for (int j = 0; j < half; ++j) {
    const double ex = (pts[j].x - cx) + (pts[j + half].x - cx);
    const double ey = (pts[j].y - cy) + (pts[j + half].y - cy);
    es += std::sqrt(ex * ex + ey * ey);
  }
  return 1.0 / (1.0 + es);
}

}  // namespace sphen
