#pragma once
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "sphen/genome.hpp"

namespace sphen {

struct Elite {
  Genome genome;
  double f1 = 0.0;  // normalized feature coordinates in [0,1]
  double f2 = 0.0;
  double performance = 0.0;
  bool surrogate = false;  // true when performance/features came from models
};

struct MapStats {
  double filled_fraction = 0.0;
  double mean_performance = 0.0;  // over filled bins; 0 for an empty map
  std::size_t filled = 0;
};

// Fixed-resolution niche grid holding at most one elite per bin. Stored
// performance per bin is monotone non-decreasing: offers replace only on
// strictly better performance, ties keep the incumbent.
class NicheMap {
 public:
  NicheMap() = default;
  NicheMap(int rows, int cols) : rows_(rows), cols_(cols), bins_(static_cast<std::size_t>(rows) * cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t bin_count() const { return bins_.size(); }

  // floor(f * resolution) per axis, f = 1 mapped to the last bin
  static std::pair<int, int> bin_index(double f1, double f2, int rows, int cols);
  std::pair<int, int> bin_index(double f1, double f2) const {
    return bin_index(f1, f2, rows_, cols_);
  }

  // inserts iff the bin is empty or candidate.performance is strictly better;
  // candidates with non-finite performance or features are rejected
  bool offer(const Elite& candidate);

  const std::optional<Elite>& at(int r, int c) const {
    return bins_[static_cast<std::size_t>(r) * cols_ + c];
  }

  // row-major flat indices of filled bins
  std::vector<std::size_t> filled_indices() const;
  const std::optional<Elite>& bin(std::size_t flat) const { return bins_[flat]; }

  MapStats stats() const;

  // collapses factor x factor blocks, keeping the best elite of each block;
  // source resolution must be an integer multiple of the target
  NicheMap reduce(int target_rows, int target_cols) const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<std::optional<Elite>> bins_;
  std::size_t filled_ = 0;
};

}  // namespace sphen
