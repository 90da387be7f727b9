#pragma once

#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "mub/relaxation.hpp"

namespace mub {

/// min c'x  s.t.  A x + s = b,  s in K = {0}^zero x R+^nonneg x S+^psd_dim.
/// PSD rows hold the upper triangle of the slack matrix in row-major order
/// ((0,0), (0,1), ..., (0,k-1), (1,1), ...) as plain matrix entries.
struct ConicProgram {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double, Eigen::RowMajor> A;
  Eigen::VectorXd b;
  Eigen::Index zero_rows = 0;
  Eigen::Index nonneg_rows = 0;
  Eigen::Index psd_dim = 0;
  // Optional a-priori variable bounds implied by the rows; used only to
  // turn dual iterates into objective lower bounds. Empty means unknown.
  Eigen::VectorXd x_lower;
  Eigen::VectorXd x_upper;

  Eigen::Index num_vars() const { return c.size(); }
  Eigen::Index psd_rows() const { return psd_dim * (psd_dim + 1) / 2; }
  Eigen::Index num_rows() const { return zero_rows + nonneg_rows + psd_rows(); }
  // Throws ShapeError.
  void validate() const;
};

/// Diagonal equilibration of the svec form (PSD off-diagonal rows times
/// sqrt 2): the solver works on E A D, E b, D c. The PSD block shares one
/// row factor so the cone is preserved.
struct ConicScaling {
  Eigen::VectorXd row;  // E
  Eigen::VectorXd col;  // D
};

ConicScaling equilibrate(const ConicProgram& p, int iterations = 10);

enum class SolveStatus {
  Optimal,
  CutoffAbove,       // dual bound proves the optimum exceeds stop_above
  CutoffBelow,       // near-feasible iterate with objective below stop_below
  MaxIters,
  NumericalTrouble,
};

std::string to_string(SolveStatus status);

struct SolverSettings {
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  double tol_gap = 1e-8;
  long max_iters = 200000;
  double rho = 1.0;
  double sigma = 1e-6;
  double alpha = 1.6;        // over-relaxation
  double rho_eq_scale = 1e3;
  bool adaptive_rho = false;
  long adaptive_interval = 50;
  int scaling_iters = 10;
  long check_every = 10;
  long divergence_window = 1000;
  long verbose_every = 0;  // > 0: residual trace to stderr
  // Early exits for threshold decisions on the objective. stop_above needs
  // finite x_lower/x_upper (an unbounded objective variable is capped at
  // the threshold); stop_below accepts a primal residual up to cutoff_primal_tol.
  std::optional<double> stop_above;
  std::optional<double> stop_below;
  double cutoff_primal_tol = 1e-6;
};

struct SolveResult {
  SolveStatus status = SolveStatus::MaxIters;
  Eigen::VectorXd x;
  Eigen::VectorXd s;  // matrix-entry form, like the program rows
  Eigen::VectorXd y;  // multipliers in the same form
  double objective = 0.0;
  double dual_objective = 0.0;
  double lower_bound = -std::numeric_limits<double>::infinity();
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  long iterations = 0;
  int factorizations = 0;
};

SolveResult solve(const ConicProgram& p, const SolverSettings& settings = {});

/// Variables: moments 1..M-1 then lambda (last). Objective: lambda.
/// Moment bounds are copied into x_lower/x_upper.
ConicProgram to_conic(const RelaxedProblem& relaxed);

// Moment vector (y_0 = 1 prepended) and lambda from a to_conic solution.
Eigen::VectorXd moments_from_solution(const Eigen::VectorXd& x);

/// Sparse SDPA text. The leading comment records a content hash and the
/// cone partition; zero rows are written as two opposite diagonal entries.
std::string to_sdpa(const ConicProgram& p);
void export_sdpa(const ConicProgram& p, const std::string& path);
ConicProgram parse_sdpa(const std::string& text);

}  // namespace mub
