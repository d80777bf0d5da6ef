#include "spdelab/partitions.hpp"

#include "spdelab/error.hpp"

namespace spdelab {

std::vector<Partition> set_partitions(int n, int max_order) {
  require(n >= 0, ErrorCode::validation, "partition size must be >= 0");
  if (n > max_order)
    fail(ErrorCode::resource, "order " + std::to_string(n) + " exceeds the partition cap " +
                                  std::to_string(max_order));
  std::vector<Partition> out;
  if (n == 0) {
    out.emplace_back();
    return out;
  }
  // a[i] is the block label of element i; a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  std::vector<int> prefix_max(static_cast<std::size_t>(n), 0);
  while (true) {
    int blocks = 1 + prefix_max[static_cast<std::size_t>(n - 1)];
    Partition p(static_cast<std::size_t>(blocks), 0);
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])] |= BlockMask{1} << i;
    out.push_back(std::move(p));

    int i = n - 1;
    while (i > 0 && a[static_cast<std::size_t>(i)] > prefix_max[static_cast<std::size_t>(i - 1)]) --i;
    if (i == 0) break;
    ++a[static_cast<std::size_t>(i)];
    prefix_max[static_cast<std::size_t>(i)] =
        std::max(prefix_max[static_cast<std::size_t>(i - 1)], a[static_cast<std::size_t>(i)]);
    for (int j = i + 1; j < n; ++j) {
      a[static_cast<std::size_t>(j)] = 0;
      prefix_max[static_cast<std::size_t>(j)] = prefix_max[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

std::vector<Partition> set_partitions_of(BlockMask mask, int max_order) {
  std::vector<int> elems;
  for (int i = 0; i < 32; ++i)
    if (mask & (BlockMask{1} << i)) elems.push_back(i);
  auto local = set_partitions(static_cast<int>(elems.size()), max_order);
  for (auto& p : local) {
    for (auto& block : p) {
      BlockMask mapped = 0;
      for (std::size_t j = 0; j < elems.size(); ++j)
        if (block & (BlockMask{1} << j)) mapped |= BlockMask{1} << elems[j];
      block = mapped;
    }
  }
  return local;
}

double moebius_weight(std::size_t blocks) {
  double w = (blocks % 2 == 1) ? 1.0 : -1.0;
  for (std::size_t k = 2; k < blocks; ++k) w *= static_cast<double>(k);
  return w;
}

std::complex<double> moments_from_truncated(int n, const BlockFunction& truncated, int max_order) {
  std::complex<double> total = 0.0;
  for (const auto& p : set_partitions(n, max_order)) {
    std::complex<double> term = 1.0;
    for (BlockMask b : p) {
      term *= truncated(b);
      if (term == 0.0) break;
    }
    total += term;
  }
  return total;
}

std::complex<double> truncated_from_moments(int n, const BlockFunction& moment, int max_order) {
  std::complex<double> total = 0.0;
  for (const auto& p : set_partitions(n, max_order)) {
    std::complex<double> term = moebius_weight(p.size());
    for (BlockMask b : p) term *= moment(b);
    total += term;
  }
  return total;
}

}  // namespace spdelab
