#include "sphen/sobol.hpp"

#include <bit>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace sphen {
namespace {

// Joe-Kuo D6 table rows for dimensions 2..16: degree s, coefficient a, m_1..m_s.
// Dimension 1 is the plain van der Corput radical inverse.
struct JkRow {
  int s;
  std::uint32_t a;
  std::uint32_t m[6];
};

constexpr JkRow kTable[15] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
};

}  // namespace

SobolStream::SobolStream(int dimension, std::uint64_t start_index) : dim_(dimension) {
  if (dimension < 1 || dimension > kMaxDim)
    throw std::invalid_argument("SobolStream: dimension must be in 1..16");
  v_.assign(static_cast<std::size_t>(dim_) * kBits, 0);
  x_.assign(dim_, 0);
  for (int j = 0; j < dim_; ++j) {
    std::uint64_t* V = v_.data() + static_cast<std::size_t>(j) * kBits;
    if (j == 0) {
      for (int i = 0; i < kBits; ++i) V[i] = 1ull << (kBits - 1 - i);
      continue;
    }
    const JkRow& row = kTable[j - 1];
    for (int i = 0; i < row.s && i < kBits; ++i)
      V[i] = static_cast<std::uint64_t>(row.m[i]) << (kBits - 1 - i);
    for (int i = row.s; i < kBits; ++i) {
      V[i] = V[i - row.s] ^ (V[i - row.s] >> row.s);
      for (int k = 1; k < row.s; ++k)
        if ((row.a >> (row.s - 1 - k)) & 1u) V[i] ^= V[i - k];
    }
  }
  seek(start_index);
}

void SobolStream::advance() {
  // Gray-code update: flip the direction number indexed by the lowest zero
  // bit of the point counter. Counter n here corresponds to raw index n+1,
  // which also skips the all-zero origin point.
  const std::uint64_t n = index_;
  const int c = std::countr_one(n);  // == countr_zero(~n)
  for (int j = 0; j < dim_; ++j)
    x_[j] ^= v_[static_cast<std::size_t>(j) * kBits + c];
  ++index_;
}

std::vector<double> SobolStream::next() {
  advance();
  std::vector<double> p(dim_);
  for (int j = 0; j < dim_; ++j)
    p[j] = static_cast<double>(x_[j]) * 0x1.0p-52;
  return p;
}

std::vector<double> SobolStream::next_points(std::size_t count) {
  std::vector<double> out;
  out.reserve(count * static_cast<std::size_t>(dim_));
  for (std::size_t i = 0; i < count; ++i) {
    advance();
    for (int j = 0; j < dim_; ++j)
      out.push_back(static_cast<double>(x_[j]) * 0x1.0p-52);
  }
  return out;
}

std::vector<std::size_t> SobolStream::pick_indices(std::size_t set_size, std::size_t count) {
  if (dim_ != 1) throw std::invalid_argument("pick_indices: stream must be 1D");
  if (set_size == 0) throw std::invalid_argument("pick_indices: empty set");
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    advance();
    double u = static_cast<double>(x_[0]) * 0x1.0p-52;
    auto idx = static_cast<std::size_t>(u * static_cast<double>(set_size));
    if (idx >= set_size) idx = set_size - 1;  // u < 1 makes this unreachable, kept as a guard
    out.push_back(idx);
  }
  return out;
}

void SobolStream::seek(std::uint64_t index) {
  // O(1) jump: after n Gray-code steps the state equals XOR over set bits of
  // gray(n), where gray(n) = n ^ (n >> 1).
  std::fill(x_.begin(), x_.end(), 0);
  index_ = index;
  std::uint64_t g = index ^ (index >> 1);
  for (int b = 0; g != 0 && b < kBits; ++b, g >>= 1)
    if (g & 1)
      for (int j = 0; j < dim_; ++j)
        x_[j] ^= v_[static_cast<std::size_t>(j) * kBits + b];
}

}  // namespace sphen
