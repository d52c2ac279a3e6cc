#pragma once
#include <cstdint>
#include <vector>

namespace sphen {

// Gray-code Sobol sequence, dimensions 1..16, direction numbers embedded
// (standard Joe-Kuo D6 primitive polynomials / initial numbers). The raw
// zero point of the sequence is skipped: the first point returned is 0.5^d.
// Output matches common unscrambled Sobol implementations bit-for-bit at
// 52-bit resolution.
class SobolStream {
 public:
  static constexpr int kMaxDim = 16;

  explicit SobolStream(int dimension, std::uint64_t start_index = 0);

  int dimension() const { return dim_; }
  // index of the next point to be produced (0-based over the skipped-origin
  // sequence); streams with equal (dimension, index) produce equal output
  std::uint64_t index() const { return index_; }

  // next point in [0,1)^d
  std::vector<double> next();
  // next `count` points, flattened row-major
  std::vector<double> next_points(std::size_t count);

  // maps the next 1D values u to floor(u * set_size); requires dimension()==1.
  // Duplicates are allowed; callers deduplicate if they need distinct picks.
  std::vector<std::size_t> pick_indices(std::size_t set_size, std::size_t count);

  void seek(std::uint64_t index);

 private:
  int dim_;
  std::uint64_t index_ = 0;                 // points produced so far
  std::vector<std::uint64_t> x_;            // current integer state, per dim
  std::vector<std::uint64_t> v_;            // direction numbers, dim*kBits
  static constexpr int kBits = 52;
  void advance();
};

}  // namespace sphen
