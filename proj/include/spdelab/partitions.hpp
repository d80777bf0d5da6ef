#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace spdelab {

/// Subset of {0..n-1} as a bit mask.
using BlockMask = std::uint32_t;

/// One set partition, as the list of its blocks.
using Partition = std::vector<BlockMask>;

inline constexpr int kDefaultMaxOrder = 8;

/// All set partitions of {0..n-1}, enumerated through restricted-growth
/// strings (Bell(n) of them). Throws Error{resource} when n > max_order.
std::vector<Partition> set_partitions(int n, int max_order = kDefaultMaxOrder);

/// Partitions of the elements of `mask` (a sub-lattice), blocks as masks.
std::vector<Partition> set_partitions_of(BlockMask mask, int max_order = kDefaultMaxOrder);

/// Moebius weight of a partition with `blocks` blocks: (-1)^{b-1} (b-1)!.
double moebius_weight(std::size_t blocks);

using BlockFunction = std::function<std::complex<double>(BlockMask)>;

/// sum over partitions of prod over blocks of truncated(block).
std::complex<double> moments_from_truncated(int n, const BlockFunction& truncated,
                                            int max_order = kDefaultMaxOrder);

/// Inverse map: truncated (connected) part from plain moments of sub-blocks.
std::complex<double> truncated_from_moments(int n, const BlockFunction& moment,
                                            int max_order = kDefaultMaxOrder);

}  // namespace spdelab
