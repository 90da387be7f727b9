#include <doctest.h>

#include <filesystem>
#include <random>

#include "mub/branch_bound.hpp"
#include "mub/errors.hpp"
#include "mub/stationary_search.hpp"

using namespace mub;

namespace {

ProblemSpec spec_of(int d, std::vector<int> sizes, bool symmetry = true) {
  ProblemSpec s;
  s.d = d;
  s.sizes = std::move(sizes);
  s.vector_swap = s.set_swap = s.conjugation = symmetry;
  return s;
}

std::vector<Eigen::VectorXd> method_one_points(const EquationSystem& sys, int count) {
  std::vector<Eigen::VectorXd> out;
  for (int seed = 1; static_cast<int>(out.size()) < count && seed < 10 * count; ++seed) {
    SearchConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const SearchOutcome o = run_search(sys, cfg);
    if (o.status != SearchStatus::Converged) continue;
    if (!verify_candidate(sys, o.point).violated_inequalities.empty()) continue;
    if (!initial_region(sys).contains(o.point)) continue;
    out.push_back(o.point);
  }
  return out;
}

}  // namespace

TEST_CASE("split_region") {
  Region r;
  r.lower = Eigen::Vector2d(-1, 0);
  r.upper = Eigen::Vector2d(1, 1);
  auto [a, b] = split_region(r, 0, 0.0);
  CHECK(a.volume_fraction == 0.5);
  CHECK(b.volume_fraction == 0.5);
  CHECK(a.upper[0] == 0.0);
  CHECK(b.lower[0] == 0.0);
  CHECK(a.depth == 1);
  REQUIRE(a.history.size() == 1);
  CHECK_FALSE(a.history[0].upper);
  CHECK(b.history[0].upper);

  auto [c, d] = split_region(r, 1, 0.25);
  CHECK(c.volume_fraction == doctest::Approx(0.25));
  CHECK(d.volume_fraction == doctest::Approx(0.75));

  CHECK_THROWS_AS(split_region(r, 1, 0.0), std::logic_error);
  CHECK_THROWS_AS(split_region(r, 1, 1.5), std::logic_error);
  CHECK_THROWS_AS(split_region(r, 2, 0.5), std::logic_error);
}

TEST_CASE("volume is conserved over many random splits") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Region root;
  root.lower = Eigen::VectorXd::Constant(6, -0.7);
  root.upper = Eigen::VectorXd::Constant(6, 0.7);
  std::vector<Region> leaves = {root};
  for (int s = 0; s < 10000; ++s) {
    std::uniform_int_distribution<std::size_t> pick(0, leaves.size() - 1);
    const std::size_t k = pick(rng);
    const Region r = leaves[k];
    const VarIndex v = static_cast<VarIndex>(s % 6);
    const double t = r.lower[v] + u(rng) * (r.upper[v] - r.lower[v]);
    auto [a, b] = split_region(r, v, t);
    leaves[k] = std::move(a);
    leaves.push_back(std::move(b));
  }
  double sum = 0, comp = 0;
  for (const auto& l : leaves) {
    const double y = l.volume_fraction - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("progress estimate") {
  ProgressEstimate p = progress(0.5, 10, 3, 10.0);
  REQUIRE(p.estimate_total);
  CHECK(*p.estimate_total == doctest::Approx(20.0));
  CHECK(*p.eta == doctest::Approx(10.0));
  CHECK(p.line() == "pruned=0.500000000 regions=10 eta=10.0s");

  p = progress(1.0, 7, 0, 4.0);
  CHECK(*p.estimate_total == doctest::Approx(4.0));
  CHECK(*p.eta == doctest::Approx(0.0));

  p = progress(0.0, 1, 1, 2.0);
  CHECK_FALSE(p.estimate_total);
  CHECK(p.line() == "pruned=0.000000000 regions=1 eta=unknown");

  CHECK(format_duration(90.0) == "90.0s");
  CHECK(format_duration(600.0) == "10.0m");
  CHECK(format_duration(3 * 3600.0) == "3.0h");
  CHECK(format_duration(5 * 86400.0) == "5.0d");
  CHECK(format_duration(3.0e8 * 31557600.0) == "3e+08y");
}

TEST_CASE("config validation") {
  BnbConfig cfg;
  cfg.level = 3;
  CHECK_THROWS_AS(cfg.validate(), LevelError);
  cfg = {};
  cfg.eps_infeas = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.min_width_fraction = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.max_regions = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(parse_queue_order("best-first") == QueueOrder::BestFirst);
  CHECK(parse_queue_order("lifo") == QueueOrder::Lifo);
  CHECK_THROWS_AS(parse_queue_order("fifo"), ValidationError);
}

TEST_CASE("four-set qubit profile is proven infeasible at level 1") {
  const EquationSystem sys = build_problem(spec_of(2, {2, 1, 1, 1}));
  for (QueueOrder q : {QueueOrder::Lifo, QueueOrder::BestFirst}) {
    BnbConfig cfg;
    cfg.queue = q;
    double open = 1.0, pruned = 0.0, worst = 0.0;
    cfg.observer = [&](const Region& r, const RegionVerdict& v) {
      if (v.kind == VerdictKind::Pruned) {
        open -= r.volume_fraction;
        pruned += r.volume_fraction;
      }
      worst = std::max(worst, std::abs(open + pruned - 1.0));
    };
    const BnbOutcome o = run_branch_and_bound(sys, cfg);
    CHECK(o.status == BnbStatus::ProvenInfeasible);
    CHECK(o.pruned_fraction == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(o.regions_processed <= 10000);
    CHECK(worst <= 1e-9);
    REQUIRE(o.root_lambda);
    if (q == QueueOrder::Lifo) {
      CHECK(o.max_queue_depth <= sys.num_vars() * static_cast<std::size_t>(std::max(1, o.max_depth)));
    }
  }
}

TEST_CASE("volume bookkeeping through branching") {
  const EquationSystem sys = build_problem(spec_of(2, {2, 1, 1, 1}));
  BnbConfig cfg;
  double pruned = 0.0, open = 1.0, worst = 0.0;
  cfg.observer = [&](const Region& r, const RegionVerdict& v) {
    if (v.kind == VerdictKind::Pruned) {
      open -= r.volume_fraction;
      pruned += r.volume_fraction;
    } else if (v.kind == VerdictKind::Branch) {
      auto [a, b] = split_region(r, v.variable, v.split);
      open += a.volume_fraction + b.volume_fraction - r.volume_fraction;
      CHECK(v.split > r.lower[v.variable]);
      CHECK(v.split < r.upper[v.variable]);
    }
    worst = std::max(worst, std::abs(open + pruned - 1.0));
  };
  const BnbOutcome o = run_branch_and_bound(sys, cfg);
  CHECK(o.status == BnbStatus::ProvenInfeasible);
  CHECK(worst <= 1e-9);
  CHECK(std::abs(open) <= 1e-9);
}

TEST_CASE("feasible profiles yield verified points") {
  for (const auto& spec : {spec_of(2, {1, 1, 1}), spec_of(3, {1, 1, 1, 1, 1})}) {
    const EquationSystem sys = build_problem(spec);
    BnbConfig cfg;
    const BnbOutcome o = run_branch_and_bound(sys, cfg);
    REQUIRE(o.status == BnbStatus::FeasiblePoint);
    const CandidateSolution c = verify_candidate(sys, o.point);
    CHECK(c.max_residual <= 1e-6);
    CHECK(c.violated_inequalities.empty());
    CHECK(o.residual == doctest::Approx(c.max_residual));
  }
}

TEST_CASE("regions containing known solutions are never pruned") {
  for (const auto& spec : {spec_of(3, {2, 2, 1}, false), spec_of(3, {1, 1, 1, 1, 1})}) {
    const EquationSystem sys = build_problem(spec);
    const std::vector<Eigen::VectorXd> known = method_one_points(sys, 4);
    REQUIRE(!known.empty());
    BnbConfig cfg;
    cfg.max_regions = 300;
    cfg.polish = false;  // keep exploring instead of stopping at the first candidate
    long containing = 0;
    cfg.observer = [&](const Region& r, const RegionVerdict& v) {
      for (const auto& x : known) {
        if (!r.contains(x)) continue;
        ++containing;
        CHECK(v.kind != VerdictKind::Pruned);
      }
    };
    run_branch_and_bound(sys, cfg);
    CHECK(containing > 0);
  }
}

TEST_CASE("budget and progress callbacks") {
  const EquationSystem sys = build_problem(spec_of(3, {2, 1, 1, 1, 1}));
  BnbConfig cfg;
  cfg.max_regions = 5;
  cfg.progress_interval = 1e-9;
  std::vector<ProgressEstimate> seen;
  cfg.on_progress = [&](const ProgressEstimate& p) { seen.push_back(p); };
  const BnbOutcome o = run_branch_and_bound(sys, cfg);
  CHECK(o.status == BnbStatus::Budget);
  CHECK(o.regions_processed == 5);
  CHECK(o.cause == "max_regions reached");
  REQUIRE(seen.size() >= 5);
  for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i].pruned_fraction >= seen[i - 1].pruned_fraction);
}

TEST_CASE("lifo runs are deterministic and worker count does not change the verdict") {
  const EquationSystem sys = build_problem(spec_of(2, {2, 1, 1, 1}));
  BnbConfig cfg;
  const BnbOutcome a = run_branch_and_bound(sys, cfg);
  const BnbOutcome b = run_branch_and_bound(sys, cfg);
  CHECK(a.regions_processed == b.regions_processed);
  CHECK(a.pruned_fraction == b.pruned_fraction);
  cfg.workers = 3;
  const BnbOutcome c = run_branch_and_bound(sys, cfg);
  CHECK(c.status == a.status);
  CHECK(c.pruned_fraction == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("SDPA export during a run") {
  const EquationSystem sys = build_problem(spec_of(2, {2, 1, 1, 1}));
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "mub_bnb_export_test";
  std::filesystem::remove_all(dir);
  BnbConfig cfg;
  cfg.max_regions = 6;
  cfg.export_sdpa_dir = dir.string();
  cfg.export_every = 2;
  run_branch_and_bound(sys, cfg);
  CHECK(std::filesystem::exists(dir / "region_0.dat-s"));
  CHECK_FALSE(std::filesystem::exists(dir / "region_1.dat-s"));
  CHECK(std::filesystem::exists(dir / "region_2.dat-s"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("root region branches inside the split clamp") {
  const EquationSystem sys = build_problem(spec_of(2, {2, 1, 1, 1}));
  BnbConfig cfg;
  const Region root = initial_region(sys);
  const RegionVerdict v = process_region(sys, root, cfg);
  CHECK(v.kind == VerdictKind::Branch);
  CHECK(v.split > root.lower[v.variable]);
  CHECK(v.split < root.upper[v.variable]);
  const double w = root.upper[v.variable] - root.lower[v.variable];
  CHECK(v.split >= root.lower[v.variable] + 0.01 * w - 1e-15);
  CHECK(v.split <= root.upper[v.variable] - 0.01 * w + 1e-15);
}

TEST_CASE("an early prune reports the certified bound") {
  const EquationSystem sys = build_problem(spec_of(2, {2, 1, 1, 1}));
  BnbConfig cfg;
  cfg.level = 2;
  const Region root = initial_region(sys);
  const RegionVerdict v = process_region(sys, root, cfg);
  REQUIRE(v.kind == VerdictKind::Pruned);
  SolverSettings st;
  st.max_iters = 200000;
  const SolveResult full = solve(to_conic(assemble(sys, root, 2)), st);
  REQUIRE(full.status == SolveStatus::Optimal);
  CHECK(v.lambda > cfg.eps_infeas);
  CHECK(v.lambda <= full.objective + 1e-6);
}
