#include <doctest.h>

#include <complex>

#include "mub/errors.hpp"
#include "mub/musb_model.hpp"
#include "mub/stationary_search.hpp"
#include "symmetry_orbit.hpp"

using namespace mub;

namespace {

ProblemSpec spec_of(int d, std::vector<int> sizes) {
  ProblemSpec s;
  s.d = d;
  s.sizes = std::move(sizes);
  return s;
}

// The three mutually unbiased bases of C^2, element 1 real and positive.
ComplexSets qubit_triple() {
  using C = std::complex<double>;
  const double r = 1 / std::sqrt(2.0);
  Eigen::Vector2cd e1(1, 0), e2(0, 1);
  Eigen::Vector2cd h1(r, r), h2(r, -r);
  Eigen::Vector2cd y1(r, C(0, r)), y2(r, C(0, -r));
  return {{e1, e2}, {h1, h2}, {y1, y2}};
}

}  // namespace

TEST_CASE("unreduced counts reproduce the variable table") {
  // rows n = 2..7, columns d = 2..6; 0 marks an empty cell
  const int table[6][5] = {{12, 27, 48, 75, 108},  {24, 54, 96, 150, 216}, {40, 90, 160, 250, 360},
                           {0, 135, 240, 375, 0},  {0, 0, 336, 525, 0},    {0, 0, 0, 700, 0}};
  for (int n = 2; n <= 7; ++n)
    for (int d = 2; d <= 6; ++d) {
      const int want = table[n - 2][d - 2];
      if (want) CHECK(unreduced_count(d, n) == want);
    }
}

TEST_CASE("reduced counts match the tabulated rows") {
  struct Row {
    int d;
    std::vector<int> sizes;
    int vars, eqns;
  };
  const std::vector<Row> rows = {
      {3, {2, 1, 1, 1, 1}, 18, 18},       {3, {3, 1, 1, 1, 1}, 18, 18},
      {3, {3, 3, 3, 3}, 74, 101},         {4, {2, 2, 2, 2, 1, 1}, 80, 82},
      {4, {4, 2, 1, 1, 1, 1}, 50, 50},    {5, {5, 3, 1, 1, 1, 1, 1}, 96, 97},
      {5, {3, 3, 3, 1, 1, 1, 1}, 136, 140}, {6, {6, 6, 6}, 170, 206},
      {6, {3, 3, 3, 3}, 122, 109},        {6, {6, 6, 2, 1}, 114, 121},
      {6, {4, 4, 3, 3}, 144, 144},        {6, {6, 3, 2, 2, 2}, 128, 128},
      {5, {1, 1, 1, 1, 1, 1, 1}, 60, 40}, {2, {1, 1}, 0, 0},
  };
  for (const auto& row : rows) {
    const ProblemSpec s = spec_of(row.d, row.sizes);
    const CountProfile c = count_profile(s);
    CAPTURE(row.d);
    CAPTURE(row.vars);
    CHECK(c.variables == row.vars);
    CHECK(c.reported_equalities == row.eqns);
    const EquationSystem sys = build_problem(s);
    CHECK(static_cast<int>(sys.num_vars()) == c.variables);
    CHECK(sys.reported_equalities == c.reported_equalities);
    CHECK(static_cast<int>(sys.inequalities.size()) == c.inequalities);
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(build_problem(spec_of(1, {1, 1})), ValidationError);
  CHECK_THROWS_AS(build_problem(spec_of(3, {3})), ValidationError);
  CHECK_THROWS_AS(build_problem(spec_of(3, {4, 1})), ValidationError);
  CHECK_THROWS_AS(build_problem(spec_of(3, {1, 2})), ValidationError);
  CHECK_THROWS_AS(build_problem(spec_of(3, {2, 0})), ValidationError);
}

TEST_CASE("equalities are at most quadratic") {
  for (const auto& s : {spec_of(3, {3, 3, 3, 3}), spec_of(4, {2, 2, 2, 1, 1, 1}), spec_of(6, {3, 3, 3, 3})}) {
    const EquationSystem sys = build_problem(s);
    REQUIRE(sys.equalities.size() == sys.equality_kinds.size());
    for (const auto& h : sys.equalities) CHECK(h.degree() <= 2);
    for (const auto& g : sys.inequalities) CHECK(g.degree() <= 2);
  }
}

TEST_CASE("norm equalities are dropped exactly when the first set is full") {
  auto has_norm = [](const EquationSystem& sys) {
    for (auto k : sys.equality_kinds)
      if (k == EqualityKind::Norm) return true;
    return false;
  };
  CHECK(has_norm(build_problem(spec_of(3, {2, 1, 1, 1, 1}))));
  CHECK_FALSE(has_norm(build_problem(spec_of(3, {3, 1, 1, 1, 1}))));
  CHECK(count_profile(spec_of(6, {6, 1, 1, 1})).reported_equalities == 15);
}

TEST_CASE("known qubit triple verifies") {
  const EquationSystem sys = build_problem(spec_of(2, {2, 2, 2}));
  const Eigen::VectorXd x = reduce_vectors(sys, qubit_triple());
  const CandidateSolution c = verify_candidate(sys, x);
  CHECK(c.max_residual <= 1e-12);
  CHECK(c.combined <= 1e-24);
  CHECK(reconstruction_error(sys, x) <= 1e-12);

  const CandidateSolution conj = verify_candidate(sys, conjugate_assignment(sys, x));
  CHECK(conj.max_residual <= 1e-12);

  Eigen::VectorXd bad = x;
  bad[0] += 0.1;
  CHECK(verify_candidate(sys, bad).max_residual > 1e-3);
  CHECK_THROWS_AS(verify_candidate(sys, Eigen::VectorXd::Zero(x.size() + 1)), ShapeError);
}

TEST_CASE("zero assignment leaves the norm residual at 1 - 1/d") {
  const EquationSystem sys = build_problem(spec_of(3, {2, 1, 1, 1, 1}));
  const CandidateSolution c = verify_candidate(sys, Eigen::VectorXd::Zero(18));
  int norms = 0;
  for (std::size_t i = 0; i < sys.equalities.size(); ++i) {
    if (sys.equality_kinds[i] != EqualityKind::Norm) continue;
    ++norms;
    CHECK(std::abs(c.residuals[static_cast<Eigen::Index>(i)]) == doctest::Approx(1 - 1.0 / 3).epsilon(1e-15));
  }
  CHECK(norms > 0);
}

TEST_CASE("initial region") {
  const double r2 = 1 / std::sqrt(2.0), r3 = 1 / std::sqrt(3.0);
  Region reg = initial_region(build_problem(spec_of(2, {2, 1, 1, 1})));
  REQUIRE(reg.size() == 6);
  CHECK(reg.volume_fraction == 1.0);
  for (Eigen::Index i = 0; i < 6; ++i) {
    CHECK(reg.lower[i] == doctest::Approx(-r2));
    CHECK(reg.upper[i] == doctest::Approx(r2));
  }

  const EquationSystem sys = build_problem(spec_of(3, {2, 1, 1, 1, 1}));
  reg = initial_region(sys);
  REQUIRE(reg.size() == 18);
  CHECK(reg.volume_fraction == 1.0);
  for (std::size_t i = 0; i < sys.num_vars(); ++i) {
    const auto& v = sys.registry[i];
    const double want = (v.kind == VariableKind::UnbiasRe || v.kind == VariableKind::UnbiasIm || v.element <= 2) ? r3 : 1.0;
    CHECK(reg.upper[static_cast<Eigen::Index>(i)] == doctest::Approx(want));
    CHECK(reg.lower[static_cast<Eigen::Index>(i)] == doctest::Approx(-want));
  }
}

TEST_CASE("system text roundtrip") {
  const EquationSystem sys = build_problem(spec_of(3, {2, 2, 1, 1}));
  const std::string text = to_text(sys);
  const ParsedSystem parsed = parse_system_text(text);
  CHECK(parsed.d == 3);
  CHECK(parsed.sizes == std::vector<int>{2, 2, 1, 1});
  CHECK(parsed.variables == sys.num_vars());
  REQUIRE(parsed.equalities.size() == sys.equalities.size());
  REQUIRE(parsed.inequalities.size() == sys.inequalities.size());
  for (std::size_t i = 0; i < parsed.equalities.size(); ++i)
    CHECK(parsed.equalities[i].approx_equal(sys.equalities[i], 0.0));
  for (std::size_t i = 0; i < parsed.inequalities.size(); ++i)
    CHECK(parsed.inequalities[i].approx_equal(sys.inequalities[i], 0.0));
  CHECK(to_text(sys) == text);
}

TEST_CASE("symmetry images of a solution are solutions") {
  ProblemSpec spec;
  spec.d = 3;
  spec.sizes = {3, 3, 3, 3};
  const EquationSystem sys = build_problem(spec);
  SearchConfig cfg;
  cfg.seed = 4;
  const SearchOutcome o = run_search(sys, cfg);
  REQUIRE(o.status == SearchStatus::Converged);
  int images = 0;
  double worst = 0;
  test::detail::Orbit(sys, o.point).visit([&](const Eigen::VectorXd& y) {
    ++images;
    worst = std::max(worst, verify_candidate(sys, y).max_residual);
    return false;
  });
  // 2! in set 1 (uniform vector fixed), 3! in sets 2 and 3, their swap, conjugation.
  CHECK(images == 2 * 6 * 6 * 2 * 2);
  CHECK(worst <= 1e-6);
  const Eigen::VectorXd rep = test::canonical_representative(sys, o.point);
  REQUIRE(rep.size() == o.point.size());
  CHECK(verify_candidate(sys, rep).violated_inequalities.empty());
  CHECK(initial_region(sys).contains(rep));
}
