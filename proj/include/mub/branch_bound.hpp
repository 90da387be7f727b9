#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "mub/conic_solver.hpp"
#include "mub/musb_model.hpp"
#include "mub/region.hpp"
#include "mub/relaxation.hpp"

namespace mub {

enum class QueueOrder { Lifo, BestFirst };

std::string to_string(QueueOrder order);
QueueOrder parse_queue_order(const std::string& text);

struct ProgressEstimate {
  double pruned_fraction = 0.0;
  long regions = 0;
  std::size_t queue_depth = 0;
  double elapsed = 0.0;
  std::optional<double> estimate_total;  // unset while nothing is pruned
  std::optional<double> eta;

  // "pruned=<frac> regions=<n> eta=<dur>"
  std::string line() const;
};

ProgressEstimate progress(double pruned_fraction, long regions, std::size_t queue_depth,
                          double elapsed);

// "12.5s", "3.1h", "4.2e+08y"; "unknown" for nullopt.
std::string format_duration(std::optional<double> seconds);

enum class VerdictKind { Pruned, Candidate, Branch, SolverFailure };

struct RegionVerdict {
  VerdictKind kind = VerdictKind::Branch;
  double lambda = 0.0;  // optimum, or the certified lower bound after an early prune
  SolveStatus solver_status = SolveStatus::MaxIters;
  long solver_iterations = 0;
  Eigen::VectorXd point;   // verified point (Candidate) or first-order moments
  double residual = 0.0;   // verified max residual (Candidate)
  double max_error = 0.0;
  VarIndex variable = 0;   // Branch
  double split = 0.0;      // Branch
};

struct BnbConfig {
  int level = 1;
  double eps_err = 1e-8;
  double eps_infeas = 1e-7;
  double min_width_fraction = 0.01;
  QueueOrder queue = QueueOrder::Lifo;
  int workers = 1;
  long max_regions = 1'000'000;
  double progress_interval = 0.0;  // seconds; 0 disables progress callbacks
  double residual_tol = 1e-6;      // candidate verification
  double inequality_tol = 1e-8;
  bool polish = true;              // Gauss-Newton from the relaxation point
  bool early_branch = true;        // stop the solver once the region is clearly unprunable
  RelaxationOptions relaxation;
  SolverSettings solver;
  std::string export_sdpa_dir;     // empty: no export
  long export_every = 1;

  std::function<void(const ProgressEstimate&)> on_progress;
  // Called once per processed region, in processing order, under the queue lock.
  std::function<void(const Region&, const RegionVerdict&)> observer;

  void validate() const;
};

enum class BnbStatus { FeasiblePoint, ProvenInfeasible, Budget };

std::string to_string(BnbStatus status);

struct BnbOutcome {
  BnbStatus status = BnbStatus::Budget;
  Eigen::VectorXd point;
  double residual = 0.0;
  long regions_processed = 0;
  double pruned_fraction = 0.0;
  double elapsed = 0.0;
  std::optional<double> estimate;
  std::string cause;
  std::size_t max_queue_depth = 0;
  int max_depth = 0;
  long solver_iterations = 0;
  std::optional<double> root_lambda;
};

/// Shared per-(system, level) state: the moment layout and the compiled
/// equalities used by local polishing. Immutable after construction.
class RegionProcessor {
 public:
  RegionProcessor(const EquationSystem& system, const BnbConfig& cfg);
  ~RegionProcessor();

  const MomentLayout& layout() const { return layout_; }

  // export_path: write the region's conic program there when non-empty.
  RegionVerdict process(const Region& region, const SolverSettings& solver,
                        const std::string& export_path = {}) const;

  // Levenberg-Marquardt on the equalities from x; nullopt unless the result
  // verifies and lies in the initial box.
  std::optional<Eigen::VectorXd> polish(const Eigen::VectorXd& x) const;

 private:
  struct Jacobian;
  const EquationSystem& system_;
  BnbConfig cfg_;
  MomentLayout layout_;
  Region root_;
  std::unique_ptr<Jacobian> jac_;
};

RegionVerdict process_region(const EquationSystem& system, const Region& region,
                             const BnbConfig& cfg);

/// Children [l, point] and [point, u] along variable; volumes split in
/// proportion to the widths. Throws std::logic_error unless l < point < u.
std::pair<Region, Region> split_region(const Region& region, VarIndex variable, double point);

BnbOutcome run_branch_and_bound(const EquationSystem& system, const BnbConfig& cfg);

}  // namespace mub
