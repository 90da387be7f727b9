#pragma once

#include <cstddef>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mub/musb_model.hpp"
#include "mub/poly.hpp"
#include "mub/region.hpp"

namespace mub {

/// Moment variables for a relaxation level: one per distinct monomial of
/// degree <= 2*level, with the unit monomial at index 0 (pinned to 1).
/// The moment-matrix basis is every monomial of degree <= level, ordered
/// degree-then-lex, and is a prefix of the moment list.
class MomentLayout {
 public:
  // Refuses layouts with more than max_moments moments.
  MomentLayout(VarIndex num_vars, int level, std::size_t max_moments = 20'000'000);

  int level() const { return level_; }
  VarIndex num_vars() const { return num_vars_; }
  std::size_t basis_size() const { return basis_size_; }
  std::size_t num_moments() const { return moments_.size(); }
  const Monomial& moment(std::size_t k) const { return moments_[k]; }
  const std::vector<Monomial>& moments() const { return moments_; }

  // Throws LevelError for monomials above degree 2*level.
  std::size_t index_of(const Monomial& m) const;
  std::size_t first_order(VarIndex i) const { return 1 + i; }
  std::size_t square(VarIndex i) const;

  /// Entry (a, b) is the moment index of basis[a] * basis[b].
  const Eigen::MatrixXi& moment_matrix() const { return matrix_; }

  /// Evaluates every moment at a concrete point.
  Eigen::VectorXd moments_of(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  VarIndex num_vars_;
  int level_;
  std::size_t basis_size_ = 0;
  std::vector<Monomial> moments_;
  std::unordered_map<Monomial, std::size_t, MonomialHash> index_;
  Eigen::MatrixXi matrix_;
};

/// sum_k coeffs[k].second * y[coeffs[k].first] + constant, with y_0 = 1
/// folded into the constant.
struct LinearRow {
  std::vector<std::pair<std::size_t, double>> coeffs;
  double constant = 0.0;

  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& moments) const;
};

/// Replaces each monomial by its moment variable. Throws LevelError when
/// degree(p) > 2*level.
LinearRow linearize(const Polynomial& p, const MomentLayout& layout);

struct RelaxationOptions {
  bool equality_products = true;  // level >= 2: multiply equalities by monomials
  bool cross_mccormick = false;   // McCormick envelopes for x_i x_j, i != j
};

/// Linear-conic relaxation of one region:
///   equalities      row(y) = 0
///   inequalities    row(y) >= 0   (symmetry, box, secant, optional McCormick)
///   M(y) + lambda I PSD, minimize lambda, lambda >= lambda_lower.
struct RelaxedProblem {
  std::size_t num_moments = 0;
  std::size_t num_problem_equalities = 0;
  std::vector<LinearRow> equalities;
  std::vector<LinearRow> inequalities;
  Eigen::MatrixXi moment_matrix;
  double lambda_lower = 0.0;
  // Interval range of each monomial over the region box. Valid for every
  // real point of the region, so usable as implied bounds in dual bounds.
  Eigen::VectorXd moment_lower;
  Eigen::VectorXd moment_upper;

  /// Checks a full moment vector (y_0 = 1) against every row and the PSD
  /// block at the given lambda, with tolerance tol.
  bool admits(const Eigen::Ref<const Eigen::VectorXd>& moments, double lambda,
              double tol) const;
};

RelaxedProblem assemble(const EquationSystem& system, const MomentLayout& layout,
                        const Region& region, const RelaxationOptions& options = {});
RelaxedProblem assemble(const EquationSystem& system, const Region& region, int level,
                        const RelaxationOptions& options = {});

struct ExtractedPoint {
  Eigen::VectorXd point;   // first-order moments
  Eigen::VectorXd errors;  // (x_ii - x_i^2)^2
  double max_error = 0.0;
  VarIndex argmax = 0;     // lowest index wins ties
};

ExtractedPoint extract(const Eigen::Ref<const Eigen::VectorXd>& moments,
                       const MomentLayout& layout);

}  // namespace mub
