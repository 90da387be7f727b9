#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "mub/poly.hpp"

namespace mub::test {

inline Monomial mono(std::initializer_list<std::pair<VarIndex, std::uint32_t>> f) {
  std::vector<VarPower> out;
  for (auto [v, e] : f) out.push_back({v, e});
  return Monomial(out);
}

inline Polynomial x(VarIndex v) { return Polynomial::variable(v); }

/// Seeded random polynomial: `terms` terms over `vars` variables, degree <= max_deg.
inline Polynomial random_poly(std::mt19937_64& rng, int terms, VarIndex vars, int max_deg) {
  std::uniform_int_distribution<VarIndex> var(0, vars - 1);
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  Polynomial p;
  for (int t = 0; t < terms; ++t) {
    std::vector<VarPower> f;
    const int k = deg(rng);
    for (int i = 0; i < k; ++i) f.push_back({var(rng), 1});
    p.add_term(Monomial(f), coeff(rng));
  }
  return p;
}

inline Eigen::VectorXd random_point(std::mt19937_64& rng, Eigen::Index n, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// Term-by-term evaluation without the compiled path.
inline double naive_eval(const Polynomial& p, const Eigen::VectorXd& pt) {
  double s = 0;
  for (const auto& [m, c] : p.terms()) {
    double t = c;
    for (const auto& f : m.factors()) t *= std::pow(pt[f.var], static_cast<double>(f.exp));
    s += t;
  }
  return s;
}

}  // namespace mub::test
