#include "spdelab/rotation.hpp"

#include <random>

#include "spdelab/error.hpp"

namespace spdelab {

Eigen::MatrixXd random_rotation(int d, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the column signs so q is Haar distributed, then land in SO(d).
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

RotationSampler::RotationSampler(Kind kind, int d, int L) : kind_(kind), d_(d), L_(L) {
  require(d >= 1 && L >= 1, ErrorCode::validation, "rotation sampler needs d >= 1 and L >= 1");
  if (kind == Kind::defining)
    require(d == L, ErrorCode::validation, "defining representation requires L == d");
}

RotationSampler RotationSampler::from_name(const std::string& name, int d, int L) {
  if (name == "trivial") return {Kind::trivial, d, L};
  if (name == "defining") return {Kind::defining, d, L};
  fail(ErrorCode::schema, "unknown representation '" + name + "' (expected trivial|defining)");
}

std::string RotationSampler::name() const {
  return kind_ == Kind::trivial ? "trivial" : "defining";
}

RotationPair RotationSampler::sample(Rng& rng) const {
  RotationPair p;
  p.g = random_rotation(d_, rng);
  p.tau = kind_ == Kind::defining ? p.g : Eigen::MatrixXd::Identity(L_, L_);
  return p;
}

}  // namespace spdelab
