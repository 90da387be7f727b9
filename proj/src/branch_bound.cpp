#include "mub/branch_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mub/errors.hpp"

namespace mub {

std::string to_string(QueueOrder order) {
  return order == QueueOrder::Lifo ? "lifo" : "best_first";
}

QueueOrder parse_queue_order(const std::string& text) {
  if (text == "lifo") return QueueOrder::Lifo;
  if (text == "best_first" || text == "best-first") return QueueOrder::BestFirst;
  throw ValidationError("unknown queue order '" + text + "' (expected lifo or best_first)");
}

std::string to_string(BnbStatus status) {
  switch (status) {
    case BnbStatus::FeasiblePoint: return "feasible_point";
    case BnbStatus::ProvenInfeasible: return "proven_infeasible";
    case BnbStatus::Budget: return "budget";
  }
  return "?";
}

std::string format_duration(std::optional<double> seconds) {
  if (!seconds || !std::isfinite(*seconds)) return "unknown";
  const double s = std::max(0.0, *seconds);
  char buf[48];
  if (s < 120) {
    std::snprintf(buf, sizeof buf, "%.1fs", s);
  } else if (s < 7200) {
    std::snprintf(buf, sizeof buf, "%.1fm", s / 60);
  } else if (s < 172800) {
    std::snprintf(buf, sizeof buf, "%.1fh", s / 3600);
  } else if (s < 2 * 31557600.0) {
    std::snprintf(buf, sizeof buf, "%.1fd", s / 86400);
  } else {
    std::snprintf(buf, sizeof buf, "%.3gy", s / 31557600.0);
  }
  return buf;
}

std::string ProgressEstimate::line() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "pruned=%.9f regions=%ld eta=", pruned_fraction, regions);
  return buf + format_duration(eta);
}

ProgressEstimate progress(double pruned_fraction, long regions, std::size_t queue_depth,
                          double elapsed) {
  ProgressEstimate p;
  p.pruned_fraction = pruned_fraction;
  p.regions = regions;
  p.queue_depth = queue_depth;
  p.elapsed = elapsed;
  if (pruned_fraction > 0.0) {
    p.estimate_total = elapsed / std::min(1.0, pruned_fraction);
    p.eta = *p.estimate_total - elapsed;
  }
  return p;
}

void BnbConfig::validate() const {
  if (level != 1 && level != 2) throw LevelError("level must be 1 or 2");
  if (!(eps_err > 0) || !(eps_infeas > 0)) throw ValidationError("thresholds must be positive");
  if (!(min_width_fraction > 0 && min_width_fraction < 0.5)) {
    throw ValidationError("min_width_fraction must lie in (0, 0.5)");
  }
  if (max_regions < 1) throw ValidationError("max_regions must be at least 1");
  if (progress_interval < 0) throw ValidationError("progress_interval must be non-negative");
  if (export_every < 1) throw ValidationError("export_every must be at least 1");
}

std::pair<Region, Region> split_region(const Region& region, VarIndex variable, double point) {
  const auto v = static_cast<Eigen::Index>(variable);
  if (v >= region.size()) throw std::logic_error("split_region: variable out of range");
  const double l = region.lower[v], u = region.upper[v];
  if (!(point > l && point < u)) throw std::logic_error("split_region: point not inside interval");
  Region lo = region, hi = region;
  lo.upper[v] = point;
  hi.lower[v] = point;
  lo.volume_fraction = region.volume_fraction * ((point - l) / (u - l));
  hi.volume_fraction = region.volume_fraction - lo.volume_fraction;
  lo.depth = hi.depth = region.depth + 1;
  lo.history.push_back({variable, point, false});
  hi.history.push_back({variable, point, true});
  return {std::move(lo), std::move(hi)};
}

// Equalities and their sparse first partials, compiled.
struct RegionProcessor::Jacobian {
  CompiledPolynomials values;
  CompiledPolynomials partials;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pos;  // (equation, variable)
};

RegionProcessor::RegionProcessor(const EquationSystem& system, const BnbConfig& cfg)
    : system_(system),
      cfg_(cfg),
      layout_(static_cast<VarIndex>(system.num_vars()), cfg.level),
      root_(initial_region(system)),
      jac_(std::make_unique<Jacobian>()) {
  std::vector<Polynomial> partials;
  for (std::size_t e = 0; e < system.equalities.size(); ++e) {
    for (VarIndex v = 0; v < system.num_vars(); ++v) {
      Polynomial d = differentiate(system.equalities[e], v);
      if (d.is_zero()) continue;
      jac_->pos.emplace_back(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(v));
      partials.push_back(std::move(d));
    }
  }
  jac_->values = CompiledPolynomials(system.equalities);
  jac_->partials = CompiledPolynomials(partials);
}

RegionProcessor::~RegionProcessor() = default;

std::optional<Eigen::VectorXd> RegionProcessor::polish(const Eigen::VectorXd& start) const {
  const auto n = static_cast<Eigen::Index>(system_.num_vars());
  const auto m = static_cast<Eigen::Index>(system_.equalities.size());
  if (m == 0) return std::nullopt;
  Eigen::VectorXd x = start, h(m), h_new(m), trial(n);
  std::vector<double> dvals(jac_->pos.size());
  Eigen::MatrixXd j(m, n);
  jac_->values.evaluate_into(x.data(), h.data());
  double mu = 1e-3;
  for (int it = 0; it < 100 && h.lpNorm<Eigen::Infinity>() > 1e-14; ++it) {
    jac_->partials.evaluate_into(x.data(), dvals.data());
    j.setZero();
    for (std::size_t k = 0; k < dvals.size(); ++k) j(jac_->pos[k].first, jac_->pos[k].second) = dvals[k];
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * h;
    bool improved = false;
    while (mu < 1e10) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += mu;
      trial = x - a.ldlt().solve(g);
      jac_->values.evaluate_into(trial.data(), h_new.data());
      if (h_new.allFinite() && h_new.squaredNorm() < h.squaredNorm()) {
        x = trial;
        h = h_new;
        mu = std::max(mu / 3.0, 1e-12);
        improved = true;
        break;
      }
      mu *= 5.0;
    }
    if (!improved) break;
  }
  for (const Eigen::VectorXd& cand : {x, conjugate_assignment(system_, x)}) {
    if (!root_.contains(cand, 1e-9)) continue;
    const CandidateSolution c = verify_candidate(system_, cand, cfg_.inequality_tol);
    if (c.max_residual <= cfg_.residual_tol && c.violated_inequalities.empty()) return cand;
  }
  return std::nullopt;
}

RegionVerdict RegionProcessor::process(const Region& region, const SolverSettings& solver,
                                       const std::string& export_path) const {
  RegionVerdict out;
  const RelaxedProblem relaxed = assemble(system_, layout_, region, cfg_.relaxation);
  const ConicProgram program = to_conic(relaxed);
  if (!export_path.empty()) export_sdpa(program, export_path);

  SolverSettings st = solver;
  st.stop_above = cfg_.eps_infeas;
  if (cfg_.early_branch) st.stop_below = cfg_.eps_infeas;
  SolveResult r;
  try {
    r = solve(program, st);
  } catch (const NumericalTrouble&) {
    out.kind = VerdictKind::SolverFailure;
    out.solver_status = SolveStatus::NumericalTrouble;
    return out;
  }
  out.lambda = r.status == SolveStatus::CutoffAbove ? r.lower_bound : r.objective;
  out.solver_status = r.status;
  out.solver_iterations = r.iterations;
  if (r.status == SolveStatus::NumericalTrouble) {
    out.kind = VerdictKind::SolverFailure;
    return out;
  }
  if (r.status == SolveStatus::CutoffAbove ||
      (r.status == SolveStatus::Optimal && r.objective > cfg_.eps_infeas)) {
    out.kind = VerdictKind::Pruned;
    return out;
  }

  const ExtractedPoint ex = extract(moments_from_solution(r.x), layout_);
  out.point = ex.point;
  out.max_error = ex.max_error;
  const Eigen::VectorXd inside = ex.point.cwiseMax(region.lower).cwiseMin(region.upper);
  if (ex.max_error <= cfg_.eps_err) {
    const CandidateSolution c = verify_candidate(system_, inside, cfg_.inequality_tol);
    if (c.max_residual <= cfg_.residual_tol && c.violated_inequalities.empty()) {
      out.kind = VerdictKind::Candidate;
      out.point = inside;
      out.residual = c.max_residual;
      return out;
    }
  }
  if (cfg_.polish) {
    if (auto p = polish(inside)) {
      out.kind = VerdictKind::Candidate;
      out.residual = verify_candidate(system_, *p, cfg_.inequality_tol).max_residual;
      out.point = std::move(*p);
      return out;
    }
  }

  // Error-directed split; a candidate that failed verification splits the
  // relatively widest interval instead.
  const Eigen::VectorXd w = region.widths();
  Eigen::Index var = ex.argmax;
  if (ex.max_error <= cfg_.eps_err) {
    const Eigen::VectorXd rel = w.cwiseQuotient(root_.widths());
    rel.maxCoeff(&var);
  }
  const double lo = region.lower[var] + cfg_.min_width_fraction * w[var];
  const double hi = region.upper[var] - cfg_.min_width_fraction * w[var];
  out.kind = VerdictKind::Branch;
  out.variable = static_cast<VarIndex>(var);
  out.split = std::clamp(ex.point[var], lo, hi);
  return out;
}

RegionVerdict process_region(const EquationSystem& system, const Region& region,
                             const BnbConfig& cfg) {
  cfg.validate();
  return RegionProcessor(system, cfg).process(region, cfg.solver);
}

namespace {

struct Node {
  Region region;
  double priority = 0.0;  // parent lambda, for best_first
  long seq = 0;
  int retries = 0;
};

// best_first: lowest parent lambda first, then oldest.
struct WorseNode {
  bool operator()(const Node& a, const Node& b) const {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.seq > b.seq;
  }
};

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

BnbOutcome run_branch_and_bound(const EquationSystem& system, const BnbConfig& cfg) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  const RegionProcessor proc(system, cfg);
  if (!cfg.export_sdpa_dir.empty()) std::filesystem::create_directories(cfg.export_sdpa_dir);

  std::mutex mu;
  std::condition_variable cv;
  std::vector<Node> queue;
  long seq = 0, processed = 0;
  int in_flight = 0;
  bool stop = false;
  CompensatedSum pruned;
  BnbOutcome out;
  double last_report = 0.0;

  auto push = [&](Node node) {
    node.seq = seq++;
    out.max_depth = std::max(out.max_depth, node.region.depth);
    queue.push_back(std::move(node));
    if (cfg.queue == QueueOrder::BestFirst) std::push_heap(queue.begin(), queue.end(), WorseNode{});
    out.max_queue_depth = std::max(out.max_queue_depth, queue.size());
  };
  auto pop = [&] {
    if (cfg.queue == QueueOrder::BestFirst) std::pop_heap(queue.begin(), queue.end(), WorseNode{});
    Node n = std::move(queue.back());
    queue.pop_back();
    return n;
  };
  auto finish = [&](BnbStatus status, std::string cause) {
    if (stop) return;
    stop = true;
    out.status = status;
    out.cause = std::move(cause);
  };

  push(Node{initial_region(system)});

  auto worker = [&] {
    std::unique_lock<std::mutex> lock(mu);
    while (true) {
      cv.wait(lock, [&] { return stop || !queue.empty() || in_flight == 0; });
      if (stop) break;
      if (queue.empty()) {
        if (in_flight == 0) break;
        continue;
      }
      if (processed >= cfg.max_regions) {
        finish(BnbStatus::Budget, "max_regions reached");
        break;
      }
      Node node = pop();
      const long index = processed++;
      ++in_flight;
      lock.unlock();

      std::string path;
      if (!cfg.export_sdpa_dir.empty() && index % cfg.export_every == 0) {
        path = (std::filesystem::path(cfg.export_sdpa_dir) /
                ("region_" + std::to_string(index) + ".dat-s"))
                   .string();
      }
      SolverSettings st = cfg.solver;
      if (node.retries > 0) {
        st.max_iters *= 4;
        st.divergence_window *= 4;
      }
      RegionVerdict verdict;
      std::string error;
      try {
        verdict = proc.process(node.region, st, path);
      } catch (const std::exception& e) {
        verdict.kind = VerdictKind::SolverFailure;
        error = e.what();
      }

      lock.lock();
      --in_flight;
      out.solver_iterations += verdict.solver_iterations;
      if (index == 0 && verdict.kind != VerdictKind::SolverFailure) out.root_lambda = verdict.lambda;
      if (cfg.observer) cfg.observer(node.region, verdict);
      switch (verdict.kind) {
        case VerdictKind::Pruned:
          pruned.add(node.region.volume_fraction);
          break;
        case VerdictKind::Candidate:
          if (!stop) {
            out.point = verdict.point;
            out.residual = verdict.residual;
          }
          finish(BnbStatus::FeasiblePoint, "");
          break;
        case VerdictKind::SolverFailure:
          if (node.retries == 0 && error.empty()) {
            node.retries = 1;
            push(std::move(node));
          } else {
            finish(BnbStatus::Budget, "solver failure at depth " +
                                          std::to_string(node.region.depth) + " (" +
                                          (error.empty() ? to_string(verdict.solver_status) : error) +
                                          ")");
          }
          break;
        case VerdictKind::Branch: {
          auto [lo, hi] = split_region(node.region, verdict.variable, verdict.split);
          // lifo pops the lower child first
          push(Node{std::move(hi), verdict.lambda});
          push(Node{std::move(lo), verdict.lambda});
          break;
        }
      }
      if (cfg.on_progress && cfg.progress_interval > 0) {
        const double now = elapsed();
        if (now - last_report >= cfg.progress_interval) {
          last_report = now;
          cfg.on_progress(progress(pruned.value(), processed, queue.size(), now));
        }
      }
      cv.notify_all();
    }
    cv.notify_all();
  };

  const int workers = std::max(1, cfg.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (!stop) {
    out.status = BnbStatus::ProvenInfeasible;
    out.cause.clear();
  }
  out.regions_processed = processed;
  out.pruned_fraction = pruned.value();
  out.elapsed = elapsed();
  const ProgressEstimate est = progress(out.pruned_fraction, processed, queue.size(), out.elapsed);
  out.estimate = est.estimate_total;
  if (cfg.on_progress) cfg.on_progress(est);
  return out;
}

}  // namespace mub
