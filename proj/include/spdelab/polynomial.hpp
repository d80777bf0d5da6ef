#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "spdelab/error.hpp"

namespace spdelab {

using MultiIndex = std::vector<int>;

/// "2,0,1" <-> {2,0,1}.
MultiIndex parse_multi_index(const std::string& text, int d);
std::string format_multi_index(const MultiIndex& index);

/// Polynomial in k in R^d with coefficients of type T, stored sparsely by
/// multi-index. Coefficient maps are ordered so iteration is deterministic.
template <typename T>
class Polynomial {
 public:
  using Terms = std::map<MultiIndex, T>;

  Polynomial() = default;
  explicit Polynomial(int d) : d_(d) {}
  Polynomial(int d, Terms terms) : d_(d), terms_(std::move(terms)) {
    for (const auto& [mi, c] : terms_)
      require(static_cast<int>(mi.size()) == d_, ErrorCode::validation,
              "multi-index length must equal d");
  }

  static Polynomial constant(int d, T value) {
    return Polynomial(d, Terms{{MultiIndex(static_cast<std::size_t>(d), 0), value}});
  }

  int d() const noexcept { return d_; }
  const Terms& terms() const noexcept { return terms_; }

  void add_term(const MultiIndex& index, T coeff) {
    require(static_cast<int>(index.size()) == d_, ErrorCode::validation,
            "multi-index length must equal d");
    terms_[index] += coeff;
  }

  int degree() const {
    int deg = 0;
    for (const auto& [mi, c] : terms_) {
      if (c == T{}) continue;
      int s = 0;
      for (int e : mi) s += e;
      deg = std::max(deg, s);
    }
    return deg;
  }

  /// True when every monomial with a nonzero coefficient has even total degree.
  bool is_even() const {
    for (const auto& [mi, c] : terms_) {
      if (c == T{}) continue;
      int s = 0;
      for (int e : mi) s += e;
      if (s % 2 != 0) return false;
    }
    return true;
  }

  template <typename K>
  auto operator()(std::span<const K> k) const {
    using R = decltype(T{} * K{});
    R sum{};
    for (const auto& [mi, c] : terms_) {
      R term = c;
      for (int j = 0; j < d_; ++j)
        for (int p = 0; p < mi[static_cast<std::size_t>(j)]; ++p) term *= k[static_cast<std::size_t>(j)];
      sum += term;
    }
    return sum;
  }

  bool operator==(const Polynomial&) const = default;

 private:
  int d_ = 0;
  Terms terms_;
};

/// L x L matrix of polynomials over a common R^d, row-major.
template <typename T>
class PolyMatrix {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  PolyMatrix() = default;
  PolyMatrix(int d, int L) : d_(d), L_(L), entries_(static_cast<std::size_t>(L * L), Polynomial<T>(d)) {}

  static PolyMatrix identity(int d, int L) {
    PolyMatrix m(d, L);
    for (int i = 0; i < L; ++i) m(i, i) = Polynomial<T>::constant(d, T{1});
    return m;
  }

  int d() const noexcept { return d_; }
  int L() const noexcept { return L_; }

  Polynomial<T>& operator()(int i, int j) { return entries_[static_cast<std::size_t>(i * L_ + j)]; }
  const Polynomial<T>& operator()(int i, int j) const {
    return entries_[static_cast<std::size_t>(i * L_ + j)];
  }

  int degree() const {
    int deg = 0;
    for (const auto& p : entries_) deg = std::max(deg, p.degree());
    return deg;
  }

  bool is_even() const {
    for (const auto& p : entries_)
      if (!p.is_even()) return false;
    return true;
  }

  template <typename K>
  auto evaluate(std::span<const K> k) const {
    using R = decltype(T{} * K{});
    Eigen::Matrix<R, Eigen::Dynamic, Eigen::Dynamic> out(L_, L_);
    for (int i = 0; i < L_; ++i)
      for (int j = 0; j < L_; ++j) out(i, j) = (*this)(i, j)(k);
    return out;
  }

  template <typename Derived>
  auto evaluate(const Eigen::MatrixBase<Derived>& k) const {
    using K = typename Derived::Scalar;
    const Eigen::Matrix<K, Eigen::Dynamic, 1> kv = k;
    return evaluate(std::span<const K>(kv.data(), static_cast<std::size_t>(kv.size())));
  }

  bool operator==(const PolyMatrix&) const = default;

 private:
  int d_ = 0;
  int L_ = 0;
  std::vector<Polynomial<T>> entries_;
};

/// Dense univariate polynomial, coefficients in ascending powers.
struct UniPoly {
  std::vector<double> coeffs;

  double operator()(double t) const;
  int degree() const { return coeffs.empty() ? 0 : static_cast<int>(coeffs.size()) - 1; }
  UniPoly operator*(const UniPoly& other) const;
};

}  // namespace spdelab
