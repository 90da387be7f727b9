#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mub {

using VarIndex = std::uint32_t;

struct VarPower {
  VarIndex var = 0;
  std::uint32_t exp = 0;
  friend bool operator==(const VarPower&, const VarPower&) = default;
};

/// Product of variable powers, stored as (index, exponent) pairs with
/// strictly increasing indices. The empty product is the unit monomial.
class Monomial {
 public:
  Monomial() = default;
  /// Normalizes: merges repeated indices, drops zero exponents, sorts.
  explicit Monomial(std::vector<VarPower> factors);
  Monomial(std::initializer_list<VarPower> factors)
      : Monomial(std::vector<VarPower>(factors)) {}

  static Monomial variable(VarIndex v, std::uint32_t exp = 1);

  const std::vector<VarPower>& factors() const { return factors_; }
  unsigned degree() const { return degree_; }
  bool is_unit() const { return factors_.empty(); }
  std::uint32_t exponent(VarIndex v) const;
  // One past the largest index used; 0 for the unit monomial.
  VarIndex span() const { return factors_.empty() ? 0 : factors_.back().var + 1; }

  // Index multiset, e.g. x1^2 x3 -> {1, 1, 3}.
  std::vector<VarIndex> indices() const;

  Monomial operator*(const Monomial& other) const;
  // Same monomial with the exponent of v set to exp (0 removes v).
  Monomial with_exponent(VarIndex v, std::uint32_t exp) const;

  std::size_t hash() const;

  friend bool operator==(const Monomial& a, const Monomial& b) {
    return a.factors_ == b.factors_;
  }
  // Degree first, then lexicographic on the index multiset.
  friend std::strong_ordering operator<=>(const Monomial& a, const Monomial& b);

 private:
  std::vector<VarPower> factors_;
  unsigned degree_ = 0;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

/// Sparse real polynomial: a hash map from monomial to coefficient.
/// Coefficients whose magnitude falls below kCleanupThreshold are dropped
/// whenever a term is written.
class Polynomial {
 public:
  using TermMap = std::unordered_map<Monomial, double, MonomialHash>;
  static constexpr double kCleanupThreshold = 1e-30;

  Polynomial() = default;
  explicit Polynomial(double constant);
  Polynomial(const Monomial& m, double coeff);

  static Polynomial variable(VarIndex v, double coeff = 1.0);

  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  unsigned degree() const;
  double coefficient(const Monomial& m) const;
  double constant() const { return coefficient(Monomial{}); }

  // Variable-count hint: at least one past the largest index that has appeared.
  VarIndex num_vars() const { return num_vars_; }
  void reserve_vars(VarIndex n) { num_vars_ = std::max(num_vars_, n); }

  void add_term(const Monomial& m, double coeff);

  // Terms sorted degree-then-lex; the order used for text and reports.
  std::vector<std::pair<Monomial, double>> sorted_terms() const;

  Polynomial& operator+=(const Polynomial& q);
  Polynomial& operator-=(const Polynomial& q);
  Polynomial& operator*=(double s);

  // Term-for-term comparison with absolute tolerance on coefficients.
  bool approx_equal(const Polynomial& other, double tol = 1e-12) const;

 private:
  TermMap terms_;
  VarIndex num_vars_ = 0;
};

Polynomial add(const Polynomial& p, const Polynomial& q, double scale = 1.0);
Polynomial mul(const Polynomial& p, const Polynomial& q);
Polynomial differentiate(const Polynomial& p, VarIndex v);
Polynomial integrate(const Polynomial& p, VarIndex v);
Polynomial substitute(const Polynomial& p, VarIndex v, double value);

/// Throws ShapeError when p mentions an index outside x.
double evaluate(const Polynomial& p, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Partials with respect to x_0 .. x_{n-1}; n defaults to p.num_vars().
std::vector<Polynomial> gradient(const Polynomial& p, VarIndex n);
std::vector<Polynomial> gradient(const Polynomial& p);

// Dense square matrix of polynomials, row-major.
struct PolynomialMatrix {
  VarIndex n = 0;
  std::vector<Polynomial> entries;
  const Polynomial& operator()(VarIndex i, VarIndex j) const { return entries[i * n + j]; }
  Polynomial& operator()(VarIndex i, VarIndex j) { return entries[i * n + j]; }
};

/// Second partials; upper triangle computed, lower mirrored.
PolynomialMatrix hessian(const Polynomial& p, VarIndex n);
PolynomialMatrix hessian(const Polynomial& p);

inline Polynomial operator+(const Polynomial& p, const Polynomial& q) { return add(p, q, 1.0); }
inline Polynomial operator-(const Polynomial& p, const Polynomial& q) { return add(p, q, -1.0); }
inline Polynomial operator*(const Polynomial& p, const Polynomial& q) { return mul(p, q); }
inline Polynomial operator*(double s, Polynomial p) { return p *= s; }
inline Polynomial operator*(Polynomial p, double s) { return p *= s; }
inline Polynomial operator+(const Polynomial& p, double c) { return add(p, Polynomial(c)); }
inline Polynomial operator-(const Polynomial& p, double c) { return add(p, Polynomial(-c)); }

// One term per line: `coeff i1^e1 i2^e2 ...`, the unit monomial as `coeff 1`.
// Coefficients use the shortest decimal that round-trips.
std::string to_text(const Polynomial& p);
Polynomial from_text(std::string_view text);

std::string format_double(double v);

/// Flattened, allocation-free evaluator for a batch of polynomials.
/// Used in the hot loops (Newton iterations, grid search).
class CompiledPolynomials {
 public:
  CompiledPolynomials() = default;
  explicit CompiledPolynomials(const std::vector<Polynomial>& polys);

  std::size_t count() const { return poly_offsets_.empty() ? 0 : poly_offsets_.size() - 1; }
  VarIndex num_vars() const { return num_vars_; }

  void evaluate_into(const double* x, double* out) const;
  double evaluate_one(std::size_t k, const double* x) const;

 private:
  std::vector<double> coeffs_;
  std::vector<std::uint32_t> term_offsets_;  // into factor arrays
  std::vector<std::uint32_t> poly_offsets_;  // into terms
  std::vector<VarIndex> vars_;
  std::vector<std::uint8_t> exps_;
  VarIndex num_vars_ = 0;
};

}  // namespace mub
