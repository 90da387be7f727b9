#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mub/musb_model.hpp"
#include "mub/poly.hpp"

namespace mub {

enum class SearchStatus { Converged, IterationLimit, NumericalFailure };

std::string to_string(SearchStatus status);

struct SearchConfig {
  double alpha = 1.0;  // step scale; lower it for d > 15
  long max_iters = 100000;
  double tol = 1e-13;           // combined objective threshold
  double residual_tol = 1e-7;   // per-equation post-check
  double damping = 1e-10;       // added to the Hessian diagonal
  std::uint64_t seed = 0;
  int starts = 1;
  // nullopt integrates by a fresh auxiliary variable.
  std::optional<VarIndex> integration_variable;
  bool record_trace = false;
  int workers = 0;  // 0: one per hardware thread

  void validate() const;
};

struct SearchOutcome {
  SearchStatus status = SearchStatus::IterationLimit;
  Eigen::VectorXd point;  // registry variables only
  double combined_value = 0.0;
  double max_equation_residual = 0.0;
  long iterations = 0;
  std::vector<double> trace;
  int start_index = 0;
  std::uint64_t seed = 0;
};

/// f = sum_i h_i^2 over the equalities; inequalities are not used.
Polynomial build_objective(const EquationSystem& system);

struct LiftedObjective {
  Polynomial lifted;
  VarIndex variable = 0;   // integration variable
  VarIndex num_vars = 0;   // variable count including an auxiliary one
  bool auxiliary = true;
};

/// Integrates f by one variable so that d(lifted)/dx_v = f and every other
/// partial carries x_v as a factor. With no variable given, a fresh index
/// num_vars is appended.
LiftedObjective lift_objective(const Polynomial& f, VarIndex num_vars,
                               std::optional<VarIndex> variable = std::nullopt);

/// Precompiled gradient and upper-triangle Hessian of a lifted objective.
class NewtonModel {
 public:
  NewtonModel(const Polynomial& lifted, VarIndex num_vars);

  VarIndex num_vars() const { return n_; }
  void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const;
  void hessian(const Eigen::VectorXd& x, Eigen::MatrixXd& h) const;

 private:
  VarIndex n_ = 0;
  CompiledPolynomials grad_;
  CompiledPolynomials hess_;
  std::vector<std::pair<VarIndex, VarIndex>> hess_pos_;
  mutable std::vector<double> scratch_;
};

/// x - alpha * p with (H(x) + damping I) p = g(x). Throws SingularSystemError.
Eigen::VectorXd newton_step(const NewtonModel& model, const Eigen::VectorXd& x,
                            const SearchConfig& cfg);
Eigen::VectorXd newton_step(const Polynomial& lifted, const Eigen::VectorXd& x,
                            const SearchConfig& cfg);

SearchOutcome run_search(const EquationSystem& system, const SearchConfig& cfg);

}  // namespace mub
