#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace spdelab {

/// Fully symmetric rank-n tensor over {0..L-1}, stored densely (L^n entries,
/// first index slowest). Entries are filled per index multiset, so
/// permutation symmetry holds bit-for-bit.
class CumulantTensor {
 public:
  CumulantTensor() = default;
  CumulantTensor(int order, int dim);

  /// Builds a tensor whose entry for an index tuple is `f(sorted tuple)`.
  static CumulantTensor from_multiset(int order, int dim,
                                      const std::function<double(std::span<const int>)>& f);

  int order() const noexcept { return order_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }

  double operator()(std::span<const int> index) const { return entries_[flat(index)]; }
  double at_flat(std::size_t i) const { return entries_[i]; }
  const std::vector<double>& entries() const noexcept { return entries_; }

  /// Decodes a flat offset into its index tuple.
  void unflatten(std::size_t i, std::span<int> index) const;
  std::size_t flat(std::span<const int> index) const;

  bool is_zero() const;
  double max_abs() const;

 private:
  int order_ = 0;
  int dim_ = 0;
  std::vector<double> entries_;
};

}  // namespace spdelab
