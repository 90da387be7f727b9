#include "mub/stationary_search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "mub/errors.hpp"
#include "mub/linalg.hpp"

namespace mub {

std::string to_string(SearchStatus status) {
  switch (status) {
    case SearchStatus::Converged: return "converged";
    case SearchStatus::IterationLimit: return "iteration_limit";
    case SearchStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

void SearchConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  if (!(residual_tol > 0.0)) throw ValidationError("residual_tol must be positive");
  if (damping < 0.0) throw ValidationError("damping must be non-negative");
  if (max_iters < 0) throw ValidationError("max_iters must be non-negative");
  if (starts < 1) throw ValidationError("starts must be at least 1");
}

Polynomial build_objective(const EquationSystem& system) {
  Polynomial f;
  f.reserve_vars(static_cast<VarIndex>(system.num_vars()));
  for (const auto& h : system.equalities) f += mul(h, h);
  return f;
}

LiftedObjective lift_objective(const Polynomial& f, VarIndex num_vars,
                               std::optional<VarIndex> variable) {
  LiftedObjective out;
  out.auxiliary = !variable.has_value();
  out.variable = variable.value_or(num_vars);
  out.num_vars = out.auxiliary ? num_vars + 1 : num_vars;
  if (out.variable >= out.num_vars) throw ShapeError("integration variable out of range");
  out.lifted = integrate(f, out.variable);
  out.lifted.reserve_vars(out.num_vars);
  return out;
}

NewtonModel::NewtonModel(const Polynomial& lifted, VarIndex num_vars) : n_(num_vars) {
  std::vector<Polynomial> first = mub::gradient(lifted, n_);
  std::vector<Polynomial> second;
  for (VarIndex i = 0; i < n_; ++i) {
    for (VarIndex j = i; j < n_; ++j) {
      Polynomial hij = differentiate(first[i], j);
      if (hij.is_zero()) continue;
      hess_pos_.emplace_back(i, j);
      second.push_back(std::move(hij));
    }
  }
  grad_ = CompiledPolynomials(first);
  hess_ = CompiledPolynomials(second);
  scratch_.resize(second.size());
}

void NewtonModel::gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const {
  g.resize(n_);
  grad_.evaluate_into(x.data(), g.data());
}

void NewtonModel::hessian(const Eigen::VectorXd& x, Eigen::MatrixXd& h) const {
  h.setZero(n_, n_);
  hess_.evaluate_into(x.data(), scratch_.data());
  for (std::size_t k = 0; k < hess_pos_.size(); ++k) {
    const auto [i, j] = hess_pos_[k];
    h(i, j) = scratch_[k];
    h(j, i) = scratch_[k];
  }
}

Eigen::VectorXd newton_step(const NewtonModel& model, const Eigen::VectorXd& x,
                            const SearchConfig& cfg) {
  if (x.size() != static_cast<Eigen::Index>(model.num_vars())) {
    throw ShapeError("newton_step: point does not include every lifted variable");
  }
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  model.gradient(x, g);
  model.hessian(x, h);
  const Eigen::VectorXd p = lu_solve(h, g, cfg.damping);
  return x - cfg.alpha * p;
}

Eigen::VectorXd newton_step(const Polynomial& lifted, const Eigen::VectorXd& x,
                            const SearchConfig& cfg) {
  return newton_step(NewtonModel(lifted, static_cast<VarIndex>(x.size())), x, cfg);
}

namespace {

std::uint64_t start_seed(std::uint64_t seed, int start) {
  // splitmix64 step so neighbouring starts get unrelated streams
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(start + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct SharedModel {
  const EquationSystem& system;
  LiftedObjective lifted;
  NewtonModel newton;
  CompiledPolynomials equalities;
};

SearchOutcome single_start(const SharedModel& model, const SearchConfig& cfg, int start,
                           const std::atomic<int>& first_converged) {
  const auto& system = model.system;
  const auto n = static_cast<Eigen::Index>(system.num_vars());
  const auto total = static_cast<Eigen::Index>(model.lifted.num_vars);
  const auto neq = model.equalities.count();

  SearchOutcome out;
  out.start_index = start;
  out.seed = start_seed(cfg.seed, start);
  std::mt19937_64 rng(out.seed);

  Eigen::VectorXd x(total);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = system.registry[static_cast<std::size_t>(i)];
    std::uniform_real_distribution<double> dist(v.lower, v.upper);
    x[i] = dist(rng);
  }
  if (model.lifted.auxiliary) x[n] = 0.1;

  std::vector<double> residuals(neq);
  auto measure = [&](const Eigen::VectorXd& at) {
    model.equalities.evaluate_into(at.data(), residuals.data());
    double combined = 0.0, worst = 0.0;
    for (double r : residuals) {
      combined += r * r;
      worst = std::max(worst, std::abs(r));
    }
    out.combined_value = combined;
    out.max_equation_residual = worst;
  };

  measure(x);
  if (out.combined_value <= cfg.tol && out.max_equation_residual <= cfg.residual_tol) {
    out.status = SearchStatus::Converged;
    out.point = x.head(n);
    return out;
  }

  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  int singular_streak = 0;
  out.status = SearchStatus::IterationLimit;
  for (long it = 1; it <= cfg.max_iters; ++it) {
    if (first_converged.load(std::memory_order_relaxed) < start) break;
    model.newton.gradient(x, g);
    model.newton.hessian(x, h);
    Eigen::VectorXd p;
    try {
      // Retry with heavier damping before giving up on this point.
      const double damping = cfg.damping * std::pow(1e3, singular_streak);
      p = lu_solve(h, g, damping);
      singular_streak = 0;
    } catch (const SingularSystemError&) {
      out.iterations = it;
      if (++singular_streak >= 3) {
        out.status = SearchStatus::NumericalFailure;
        break;
      }
      continue;
    }
    x -= cfg.alpha * p;
    out.iterations = it;
    measure(x);
    if (cfg.record_trace) out.trace.push_back(out.combined_value);
    if (!std::isfinite(out.combined_value) || !x.allFinite()) {
      out.status = SearchStatus::NumericalFailure;
      break;
    }
    if (out.combined_value <= cfg.tol && out.max_equation_residual <= cfg.residual_tol) {
      out.status = SearchStatus::Converged;
      break;
    }
  }
  out.point = x.head(n);
  return out;
}

bool better(const SearchOutcome& a, const SearchOutcome& b) {
  const bool ca = a.status == SearchStatus::Converged;
  const bool cb = b.status == SearchStatus::Converged;
  if (ca != cb) return ca;
  if (ca) return a.start_index < b.start_index;
  const double va = std::isfinite(a.combined_value) ? a.combined_value
                                                    : std::numeric_limits<double>::infinity();
  const double vb = std::isfinite(b.combined_value) ? b.combined_value
                                                    : std::numeric_limits<double>::infinity();
  if (va != vb) return va < vb;
  return a.start_index < b.start_index;
}

}  // namespace

SearchOutcome run_search(const EquationSystem& system, const SearchConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<VarIndex>(system.num_vars());
  if (cfg.integration_variable && *cfg.integration_variable >= n) {
    throw ValidationError("integration variable index out of range");
  }
  const Polynomial f = build_objective(system);
  LiftedObjective lifted = lift_objective(f, n, cfg.integration_variable);
  NewtonModel newton(lifted.lifted, lifted.num_vars);
  SharedModel model{system, std::move(lifted), std::move(newton),
                    CompiledPolynomials(system.equalities)};

  std::vector<SearchOutcome> outcomes(static_cast<std::size_t>(cfg.starts));
  std::atomic<int> first_converged{std::numeric_limits<int>::max()};
  std::atomic<int> next{0};
  std::mutex mu;

  auto drain = [&](const SharedModel& m) {
    for (int k = next++; k < cfg.starts; k = next++) {
      SearchOutcome o = single_start(m, cfg, k, first_converged);
      if (o.status == SearchStatus::Converged) {
        int cur = first_converged.load();
        while (k < cur && !first_converged.compare_exchange_weak(cur, k)) {
        }
      }
      std::lock_guard<std::mutex> lock(mu);
      outcomes[static_cast<std::size_t>(k)] = std::move(o);
    }
  };

  int workers = cfg.workers > 0 ? cfg.workers
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, cfg.starts);
  if (workers <= 1) {
    drain(model);
  } else {
    // NewtonModel keeps scratch space, so each thread gets its own copy.
    std::vector<SharedModel> copies(static_cast<std::size_t>(workers), model);
    std::vector<std::thread> pool;
    for (auto& copy : copies) pool.emplace_back([&] { drain(copy); });
    for (auto& t : pool) t.join();
  }

  // Starts cancelled after a lower-index start converged never beat it.
  const int winner = first_converged.load();
  SearchOutcome best;
  bool have = false;
  for (int k = 0; k < cfg.starts; ++k) {
    if (winner != std::numeric_limits<int>::max() && k > winner) break;
    const auto& o = outcomes[static_cast<std::size_t>(k)];
    if (!have || better(o, best)) {
      best = o;
      have = true;
    }
  }
  return best;
}

}  // namespace mub
