#include "sphen/archive.hpp"

#include <cmath>
#include <stdexcept>

namespace sphen {

std::pair<int, int> NicheMap::bin_index(double f1, double f2, int rows, int cols) {
  auto axis = [](double f, int res) {
    int i = static_cast<int>(std::floor(f * res));
    if (i < 0) i = 0;
    if (i >= res) i = res - 1;  // f == 1 belongs to the last bin
    return i;
  };
  return {axis(f1, rows), axis(f2, cols)};
}

bool NicheMap::offer(const Elite& candidate) {
  if (!std::isfinite(candidate.performance) || !std::isfinite(candidate.f1) ||
      !std::isfinite(candidate.f2))
    return false;
  auto [r, c] = bin_index(candidate.f1, candidate.f2);
  auto& slot = bins_[static_cast<std::size_t>(r) * cols_ + c];
  if (!slot) {
    slot = candidate;
    ++filled_;
    return true;
  }
  if (candidate.performance > slot->performance) {
    slot = candidate;
    return true;
  }
  return false;
}

std::vector<std::size_t> NicheMap::filled_indices() const {
  std::vector<std::size_t> out;
  out.reserve(filled_);
  for (std::size_t i = 0; i < bins_.size(); ++i)
    if (bins_[i]) out.push_back(i);
  return out;
}

MapStats NicheMap::stats() const {
  MapStats s;
  s.filled = filled_;
  if (bins_.empty() || filled_ == 0) return s;
  s.filled_fraction = static_cast<double>(filled_) / static_cast<double>(bins_.size());
  // summed in bin order so the value is independent of insertion history
  // (restored checkpoints replay offers in a different order)
  double sum = 0.0;
  for (const auto& b : bins_)
    if (b) sum += b->performance;
  s.mean_performance = sum / static_cast<double>(filled_);
  return s;
}

NicheMap NicheMap::reduce(int target_rows, int target_cols) const {
  if (target_rows <= 0 || target_cols <= 0 || rows_ % target_rows != 0 ||
      cols_ % target_cols != 0)
    throw std::invalid_argument("reduce: source resolution must divide by target");
  const int fr = rows_ / target_rows;
  const int fc = cols_ / target_cols;
  NicheMap out(target_rows, target_cols);
  for (int r = 0; r < target_rows; ++r)
    for (int c = 0; c < target_cols; ++c) {
      const Elite* best = nullptr;
      for (int i = 0; i < fr; ++i)
        for (int j = 0; j < fc; ++j) {
          const auto& slot = at(r * fr + i, c * fc + j);
          if (slot && (!best || slot->performance > best->performance))
            best = &*slot;
        }
      if (best) {
        // the coarse grid covers the fine one, so the block index is already
        // the right coarse bin for the winning elite's features
        out.bins_[static_cast<std::size_t>(r) * target_cols + c] = *best;
        ++out.filled_;
      }
    }
  return out;
}

}  // namespace sphen
