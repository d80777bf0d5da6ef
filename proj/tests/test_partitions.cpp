#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "spdelab/error.hpp"
#include "spdelab/partitions.hpp"

using namespace spdelab;

namespace {

std::set<std::vector<BlockMask>> canonical(const std::vector<Partition>& parts) {
  std::set<std::vector<BlockMask>> out;
  for (auto p : parts) {
    std::sort(p.begin(), p.end());
    out.insert(p);
  }
  return out;
}

}  // namespace

TEST_CASE("partition counts are Bell numbers") {
  const std::vector<std::size_t> bell{1, 1, 2, 5, 15, 52, 203, 877, 4140};
  for (int n = 0; n <= 8; ++n) CHECK(set_partitions(n).size() == bell[static_cast<std::size_t>(n)]);
}

TEST_CASE("partitions match a brute-force enumeration") {
  for (int n = 1; n <= 6; ++n) {
    std::vector<Partition> brute;
    for (const auto& p : oracle::brute_partitions(n)) {
      Partition q;
      for (const auto& block : p) {
        BlockMask m = 0;
        for (int e : block) m |= BlockMask{1} << e;
        q.push_back(m);
      }
      brute.push_back(q);
    }
    const auto lib = canonical(set_partitions(n));
    CHECK(lib.size() == set_partitions(n).size());
    CHECK(lib == canonical(brute));
  }
}

TEST_CASE("order cap") {
  bool threw = false;
  try {
    (void)set_partitions(9);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::resource;
  }
  CHECK(threw);
  CHECK(set_partitions(9, 9).size() == 21147);
}

TEST_CASE("Moebius inversion round trip") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int n = 1; n <= 6; ++n) {
    std::map<BlockMask, std::complex<double>> truncated;
    for (BlockMask m = 1; m < (BlockMask{1} << n); ++m) truncated[m] = {normal(rng), normal(rng)};
    auto moment = [&](BlockMask block) {
      // Moment of a sub-block: sum over partitions of the block.
      std::complex<double> s = 0.0;
      for (const auto& p : set_partitions_of(block)) {
        std::complex<double> prod = 1.0;
        for (BlockMask b : p) prod *= truncated[b];
        s += prod;
      }
      return s;
    };
    const BlockMask all = (BlockMask{1} << n) - 1;
    CHECK(std::abs(moments_from_truncated(n, [&](BlockMask b) { return truncated[b]; }) - moment(all)) < 1e-12);
    CHECK(std::abs(truncated_from_moments(n, moment) - truncated[all]) < 1e-10);
  }
}

TEST_CASE("Moebius weights") {
  CHECK(moebius_weight(1) == 1.0);
  CHECK(moebius_weight(2) == -1.0);
  CHECK(moebius_weight(3) == 2.0);
  CHECK(moebius_weight(4) == -6.0);
}
