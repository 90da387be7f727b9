#include "mub/conic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <Eigen/SparseCholesky>

#include "mub/errors.hpp"
#include "mub/linalg.hpp"

namespace mub {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

using SpMat = Eigen::SparseMatrix<double>;

// (i, j) of each packed PSD row.
struct PsdIndex {
  std::vector<Eigen::Index> i, j;
  explicit PsdIndex(Eigen::Index k) {
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = a; b < k; ++b) {
        i.push_back(a);
        j.push_back(b);
      }
    }
  }
};

// Row weights turning matrix-entry rows into svec rows.
Eigen::VectorXd svec_weights(const ConicProgram& p) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(p.num_rows());
  const Eigen::Index off = p.zero_rows + p.nonneg_rows;
  Eigen::Index r = off;
  for (Eigen::Index a = 0; a < p.psd_dim; ++a) {
    for (Eigen::Index b = a; b < p.psd_dim; ++b, ++r) {
      if (a != b) w[r] = kSqrt2;
    }
  }
  return w;
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::CutoffAbove: return "cutoff_above";
    case SolveStatus::CutoffBelow: return "cutoff_below";
    case SolveStatus::MaxIters: return "max_iters";
    case SolveStatus::NumericalTrouble: return "numerical_trouble";
  }
  return "?";
}

void ConicProgram::validate() const {
  if (zero_rows < 0 || nonneg_rows < 0 || psd_dim < 0) {
    throw ShapeError("conic program: negative block size");
  }
  if (A.rows() != num_rows() || b.size() != num_rows()) {
    throw ShapeError("conic program: row count does not match the cone partition");
  }
  if (A.cols() != c.size()) throw ShapeError("conic program: A and c disagree on width");
  if (x_lower.size() != 0 && x_lower.size() != c.size()) {
    throw ShapeError("conic program: x_lower has the wrong length");
  }
  if (x_upper.size() != 0 && x_upper.size() != c.size()) {
    throw ShapeError("conic program: x_upper has the wrong length");
  }
}

ConicScaling equilibrate(const ConicProgram& p, int iterations) {
  p.validate();
  const Eigen::VectorXd w = svec_weights(p);
  SpMat a = w.asDiagonal() * SpMat(p.A);
  const Eigen::Index m = a.rows(), n = a.cols();
  const Eigen::Index psd_off = p.zero_rows + p.nonneg_rows;
  ConicScaling sc{Eigen::VectorXd::Ones(m), Eigen::VectorXd::Ones(n)};

  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd rmax = Eigen::VectorXd::Zero(m), cmax = Eigen::VectorXd::Zero(n);
    for (Eigen::Index col = 0; col < n; ++col) {
      for (SpMat::InnerIterator e(a, col); e; ++e) {
        const double v = std::abs(e.value());
        rmax[e.row()] = std::max(rmax[e.row()], v);
        cmax[col] = std::max(cmax[col], v);
      }
    }
    Eigen::VectorXd er(m), dc(n);
    for (Eigen::Index r = 0; r < m; ++r) er[r] = rmax[r] > 0 ? 1.0 / std::sqrt(rmax[r]) : 1.0;
    if (p.psd_rows() > 0) {
      const double top = rmax.segment(psd_off, p.psd_rows()).maxCoeff();
      er.segment(psd_off, p.psd_rows()).setConstant(top > 0 ? 1.0 / std::sqrt(top) : 1.0);
    }
    for (Eigen::Index col = 0; col < n; ++col) {
      dc[col] = cmax[col] > 0 ? 1.0 / std::sqrt(cmax[col]) : 1.0;
    }
    er = er.cwiseMax(1e-4).cwiseMin(1e4);
    dc = dc.cwiseMax(1e-4).cwiseMin(1e4);
    a = er.asDiagonal() * a * dc.asDiagonal();
    sc.row.array() *= er.array();
    sc.col.array() *= dc.array();
  }
  return sc;
}

SolveResult solve(const ConicProgram& p, const SolverSettings& settings) {
  p.validate();
  const Eigen::Index m = p.num_rows(), n = p.num_vars();
  const Eigen::Index z = p.zero_rows, psd_off = p.zero_rows + p.nonneg_rows;
  const Eigen::Index k = p.psd_dim;
  const PsdIndex pidx(k);

  // Internal svec form and its equilibrated copy.
  const Eigen::VectorXd w = svec_weights(p);
  const SpMat a_int = w.asDiagonal() * SpMat(p.A);
  const SpMat a_int_t = a_int.transpose();
  const Eigen::VectorXd b_int = w.cwiseProduct(p.b);
  const ConicScaling sc = equilibrate(p, settings.scaling_iters);
  const SpMat ah = sc.row.asDiagonal() * a_int * sc.col.asDiagonal();
  const SpMat ah_t = ah.transpose();
  const Eigen::VectorXd bh = sc.row.cwiseProduct(b_int);
  const Eigen::VectorXd ch = sc.col.cwiseProduct(p.c);

  double rho = settings.rho;
  Eigen::VectorXd r_vec(m);
  auto set_rho = [&](double value) {
    rho = std::clamp(value, 1e-6, 1e6);
    r_vec.setConstant(rho);
    r_vec.head(z).setConstant(rho * settings.rho_eq_scale);
  };
  set_rho(rho);

  SolveResult res;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  SpMat eye(n, n);
  eye.setIdentity();
  auto factor = [&] {
    SpMat kkt = ah_t * r_vec.asDiagonal() * ah + settings.sigma * eye;
    if (res.factorizations == 0) ldlt.analyzePattern(kkt);
    ldlt.factorize(kkt);
    ++res.factorizations;
    if (ldlt.info() != Eigen::Success) throw NumericalTrouble("conic solver: factorization failed");
  };
  factor();

  PsdProjector<double> projector;
  Eigen::MatrixXd block(k, k);
  auto project = [&](Eigen::VectorXd& v) {
    for (Eigen::Index r = z; r < psd_off; ++r) v[r] = std::max(0.0, v[r]);
    v.head(z).setZero();
    if (k == 0) return;
    for (std::size_t q = 0; q < pidx.i.size(); ++q) {
      const Eigen::Index i = pidx.i[q], j = pidx.j[q];
      const double val = v[psd_off + static_cast<Eigen::Index>(q)];
      block(i, j) = i == j ? val : val / kSqrt2;
      block(j, i) = block(i, j);
    }
    projector.project(block);
    for (std::size_t q = 0; q < pidx.i.size(); ++q) {
      const Eigen::Index i = pidx.i[q], j = pidx.j[q];
      v[psd_off + static_cast<Eigen::Index>(q)] = i == j ? block(i, i) : block(i, j) * kSqrt2;
    }
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n), s = Eigen::VectorXd::Zero(m),
                  y = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd rhs(n), xt(n), st(m), v(m);
  std::vector<double> history;  // combined residual at each check
  const double b_norm = inf_norm(b_int), c_norm = inf_norm(p.c);

  Eigen::VectorXd x_u, s_u, y_u;
  auto unscale = [&] {
    x_u = sc.col.cwiseProduct(x);
    s_u = s.cwiseQuotient(sc.row);
    y_u = sc.row.cwiseProduct(y);
  };

  // Lower bound on c'x over {feasible, x_lower <= x <= x_upper, c'x <= cap}
  // from a dual iterate y_u in the polar cone: c'x = rd'x + b'y - y's.
  const bool have_bounds = p.x_lower.size() == n && p.x_upper.size() == n;
  Eigen::Index objective_var = -1;
  if ((p.c.array() != 0.0).count() == 1) {
    Eigen::Index j;
    if (p.c.maxCoeff(&j) == 1.0) objective_var = j;
  }
  auto lower_bound = [&](const Eigen::VectorXd& rd, double cap) {
    if (!have_bounds) return -std::numeric_limits<double>::infinity();
    double lb = b_int.dot(y_u);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double r = rd[j];
      if (r == 0.0) continue;
      double bound = r > 0 ? p.x_lower[j] : p.x_upper[j];
      if (j == objective_var && r < 0) bound = std::min(bound, cap);
      if (!std::isfinite(bound)) return -std::numeric_limits<double>::infinity();
      lb += r * bound;
    }
    return lb;
  };

  res.status = SolveStatus::MaxIters;
  long it = 0;
  for (it = 1; it <= settings.max_iters; ++it) {
    rhs = settings.sigma * x - ch + ah_t * (r_vec.cwiseProduct(bh - s) + y);
    xt = ldlt.solve(rhs);
    st = bh - ah * xt;
    x = settings.alpha * xt + (1.0 - settings.alpha) * x;
    v = settings.alpha * st + (1.0 - settings.alpha) * s + y.cwiseQuotient(r_vec);
    s = v;
    project(s);
    y = r_vec.cwiseProduct(v - s);

    const bool last = it == settings.max_iters;
    if (it % settings.check_every != 0 && !last) continue;

    unscale();
    const Eigen::VectorXd ax = a_int * x_u;
    const Eigen::VectorXd aty = a_int_t * y_u;
    const Eigen::VectorXd rd = p.c - aty;
    res.primal_residual = inf_norm(ax + s_u - b_int);
    res.dual_residual = inf_norm(rd);
    res.objective = p.c.dot(x_u);
    res.dual_objective = b_int.dot(y_u);
    res.gap = std::abs(res.objective - res.dual_objective);
    res.iterations = it;
    if (!x.allFinite() || !y.allFinite() || !s.allFinite()) {
      res.status = SolveStatus::NumericalTrouble;
      break;
    }
    const double p_scale = 1.0 + std::max({inf_norm(ax), inf_norm(s_u), b_norm});
    const double d_scale = 1.0 + std::max(inf_norm(aty), c_norm);
    const bool p_ok = res.primal_residual <= settings.tol_primal * p_scale;
    const bool d_ok = res.dual_residual <= settings.tol_dual * d_scale;
    const bool g_ok =
        res.gap <= settings.tol_gap * (1.0 + std::abs(res.objective) + std::abs(res.dual_objective));
    if (p_ok && d_ok && g_ok) {
      res.status = SolveStatus::Optimal;
      res.lower_bound = lower_bound(rd, std::numeric_limits<double>::infinity());
      break;
    }
    if (settings.stop_above) {
      const double lb = lower_bound(rd, *settings.stop_above);
      if (lb > *settings.stop_above) {
        res.lower_bound = lb;
        res.status = SolveStatus::CutoffAbove;
        break;
      }
    }
    if (settings.stop_below && res.objective < *settings.stop_below &&
        res.primal_residual <= settings.cutoff_primal_tol * p_scale) {
      res.status = SolveStatus::CutoffBelow;
      break;
    }

    const double combined = std::max(res.primal_residual / p_scale, res.dual_residual / d_scale);
    if (settings.verbose_every > 0 && it % settings.verbose_every == 0) {
      std::fprintf(stderr, "it=%ld obj=%.6e dobj=%.6e rp=%.2e rd=%.2e rho=%.2e\n", it, res.objective,
                   res.dual_objective, res.primal_residual, res.dual_residual, rho);
    }
    history.push_back(combined);
    const auto window = static_cast<std::size_t>(settings.divergence_window / settings.check_every);
    if (window > 0 && history.size() > window) {
      const double before = history[history.size() - 1 - window];
      if (combined > 10.0 * before && combined > 1e-3) {
        res.status = SolveStatus::NumericalTrouble;
        break;
      }
    }

    if (settings.adaptive_rho && it % settings.adaptive_interval == 0) {
      const Eigen::VectorXd axh = ah * x;
      const Eigen::VectorXd atyh = ah_t * y;
      const double pr = inf_norm(axh + s - bh) /
                        std::max({inf_norm(axh), inf_norm(s), inf_norm(bh), 1e-12});
      const double dr = inf_norm(ch - atyh) / std::max({inf_norm(atyh), inf_norm(ch), 1e-12});
      if (pr > 0 && dr > 0) {
        const double ratio = std::sqrt(pr / dr);
        if (ratio > 5.0 || ratio < 0.2) {
          set_rho(rho * ratio);
          factor();
        }
      }
    }
  }
  res.iterations = std::min(it, settings.max_iters);

  unscale();
  res.x = x_u;
  // Back to matrix-entry form.
  const Eigen::VectorXd w_inv = w.cwiseInverse();
  res.s = s_u.cwiseProduct(w_inv);
  res.y = y_u.cwiseProduct(w);
  return res;
}

ConicProgram to_conic(const RelaxedProblem& relaxed) {
  const auto moments = static_cast<Eigen::Index>(relaxed.num_moments);
  const Eigen::Index n = moments;  // moments 1..M-1, then lambda
  const Eigen::Index lam = n - 1;
  const Eigen::Index k = relaxed.moment_matrix.rows();

  ConicProgram p;
  p.zero_rows = static_cast<Eigen::Index>(relaxed.equalities.size());
  p.nonneg_rows = static_cast<Eigen::Index>(relaxed.inequalities.size()) + 1;
  p.psd_dim = k;
  p.c = Eigen::VectorXd::Zero(n);
  p.c[lam] = 1.0;
  p.b = Eigen::VectorXd::Zero(p.num_rows());

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::Index r = 0;
  for (const auto& row : relaxed.equalities) {
    for (const auto& [mk, a] : row.coeffs) trip.emplace_back(r, static_cast<Eigen::Index>(mk) - 1, a);
    p.b[r++] = -row.constant;
  }
  for (const auto& row : relaxed.inequalities) {
    for (const auto& [mk, a] : row.coeffs) trip.emplace_back(r, static_cast<Eigen::Index>(mk) - 1, -a);
    p.b[r++] = row.constant;
  }
  trip.emplace_back(r, lam, -1.0);
  p.b[r++] = -relaxed.lambda_lower;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j, ++r) {
      const int mk = relaxed.moment_matrix(i, j);
      if (mk == 0) {
        p.b[r] = 1.0;
      } else {
        trip.emplace_back(r, mk - 1, -1.0);
      }
      if (i == j) trip.emplace_back(r, lam, -1.0);
    }
  }
  p.A.resize(p.num_rows(), n);
  p.A.setFromTriplets(trip.begin(), trip.end());
  p.A.makeCompressed();
  if (relaxed.moment_lower.size() == moments && relaxed.moment_upper.size() == moments) {
    p.x_lower.resize(n);
    p.x_upper.resize(n);
    p.x_lower.head(n - 1) = relaxed.moment_lower.tail(moments - 1);
    p.x_upper.head(n - 1) = relaxed.moment_upper.tail(moments - 1);
    p.x_lower[lam] = relaxed.lambda_lower;
    p.x_upper[lam] = std::numeric_limits<double>::infinity();
  }
  return p;
}

Eigen::VectorXd moments_from_solution(const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size());
  y[0] = 1.0;
  y.tail(x.size() - 1) = x.head(x.size() - 1);
  return y;
}

}  // namespace mub
