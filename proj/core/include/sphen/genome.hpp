#pragma once
#include <array>
#include <cstddef>
#include <vector>

namespace sphen {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// 16-parameter free-form octagon deformation: 8 radial deviations dr in
// [0.01, 1], then 8 angular deviations dtheta in [-pi/4, pi/4].
struct Genome {
  static constexpr int kDim = 16;
  static constexpr double kPi4 = 0.78539816339744830961566084581988;

  std::array<double, kDim> v{};

  double dr(int j) const { return v[j]; }
  double dtheta(int j) const { return v[8 + j]; }

  static double lower(int i) { return i < 8 ? 0.01 : -kPi4; }
  static double upper(int i) { return i < 8 ? 1.0 : kPi4; }
  static double range(int i) { return upper(i) - lower(i); }

  // clamps every component into its declared bound
  void clamp();
  bool within_bounds() const;
};

// 8 vertices in increasing base-angle order, centered on the origin; vertex j
// sits at polar angle j*pi/4 + dtheta_j with radius 0.5*dr_j, so every shape
// fits a unit-diameter disc.
struct Polygon {
  std::array<Vec2, 8> vertices{};

  // even-odd point containment
  bool contains(double x, double y) const;
};

struct ShapeFeatures {
  double area = 0.0;           // raw, shoelace
  double circumference = 0.0;  // raw, edge-length sum
  double area_norm = 0.0;      // clamp((A - 0.01) / 0.59, 0, 1)
  double circ_norm = 0.0;      // clamp((l - 1) / 3, 0, 1)
};

inline constexpr double kAreaRangeLo = 0.01, kAreaRangeHi = 0.6;
inline constexpr double kCircRangeLo = 1.0, kCircRangeHi = 4.0;

Polygon express(const Genome& g);

ShapeFeatures shape_features(const Polygon& p);

// n points at equal arc-length intervals along the closed outline, starting at
// vertex 0. n must be even and >= 8: the symmetry metric pairs point j with
// its arc-length antipode j + n/2. Throws std::invalid_argument otherwise.
std::vector<Vec2> sample_boundary(const Polygon& p, int n);

// point symmetry score f = 1 / (1 + E_s), where E_s sums, over the n/2 sample
// pairs, the norm of (x_j - c) + (x_{j+n/2} - c) with c the vertex centroid.
// Exactly 1 for point-symmetric outlines; the sampling and centroid sums are
// arranged so regular octagons hit 1.0 bitwise. The boundary walk is anchored
// at the lexicographically smallest cyclic rotation of the genome, which makes
// the score exactly invariant under vertex relabeling.
double symmetry_performance(const Genome& g, int n = 100);

}  // namespace sphen
