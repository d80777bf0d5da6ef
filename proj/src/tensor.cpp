#include "spdelab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "spdelab/error.hpp"

namespace spdelab {

namespace {

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

}  // namespace

CumulantTensor::CumulantTensor(int order, int dim)
    : order_(order), dim_(dim), entries_(ipow(dim, order), 0.0) {
  require(order >= 0 && dim >= 1, ErrorCode::validation, "tensor needs order >= 0 and dim >= 1");
}

CumulantTensor CumulantTensor::from_multiset(
    int order, int dim, const std::function<double(std::span<const int>)>& f) {
  CumulantTensor t(order, dim);
  std::map<std::vector<int>, double> cache;
  std::vector<int> index(static_cast<std::size_t>(order));
  for (std::size_t i = 0; i < t.entries_.size(); ++i) {
    t.unflatten(i, index);
    std::vector<int> key = index;
    std::sort(key.begin(), key.end());
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, f(key)).first;
    t.entries_[i] = it->second;
  }
  return t;
}

void CumulantTensor::unflatten(std::size_t i, std::span<int> index) const {
  for (int j = order_ - 1; j >= 0; --j) {
    index[static_cast<std::size_t>(j)] = static_cast<int>(i % static_cast<std::size_t>(dim_));
    i /= static_cast<std::size_t>(dim_);
  }
}

std::size_t CumulantTensor::flat(std::span<const int> index) const {
  std::size_t i = 0;
  for (int j = 0; j < order_; ++j) i = i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(index[static_cast<std::size_t>(j)]);
  return i;
}

bool CumulantTensor::is_zero() const {
  return std::all_of(entries_.begin(), entries_.end(), [](double v) { return v == 0.0; });
}

double CumulantTensor::max_abs() const {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace spdelab
