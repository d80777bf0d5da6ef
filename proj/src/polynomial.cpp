#include "spdelab/polynomial.hpp"

#include <sstream>

namespace spdelab {

MultiIndex parse_multi_index(const std::string& text, int d) {
  MultiIndex mi;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    int e = 0;
    try {
      e = std::stoi(part, &used);
    } catch (const std::exception&) {
      fail(ErrorCode::schema, "bad multi-index '" + text + "'");
    }
    require(used == part.size() && e >= 0, ErrorCode::schema, "bad multi-index '" + text + "'");
    mi.push_back(e);
  }
  require(static_cast<int>(mi.size()) == d, ErrorCode::schema,
          "multi-index '" + text + "' must have d = " + std::to_string(d) + " exponents");
  return mi;
}

std::string format_multi_index(const MultiIndex& index) {
  std::string s;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(index[i]);
  }
  return s;
}

double UniPoly::operator()(double t) const {
  double r = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * t + *it;
  return r;
}

UniPoly UniPoly::operator*(const UniPoly& other) const {
  if (coeffs.empty() || other.coeffs.empty()) return {};
  UniPoly r{std::vector<double>(coeffs.size() + other.coeffs.size() - 1, 0.0)};
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    for (std::size_t j = 0; j < other.coeffs.size(); ++j) r.coeffs[i + j] += coeffs[i] * other.coeffs[j];
  return r;
}

}  // namespace spdelab
