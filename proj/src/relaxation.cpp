#include "mub/relaxation.hpp"

#include <algorithm>
#include <cmath>

#include "mub/errors.hpp"
#include "mub/linalg.hpp"

namespace mub {

namespace {

// Calls fn(indices) for every non-decreasing index tuple of length k over
// [0, n), in lexicographic order.
template <class Fn>
void for_each_multiset(VarIndex n, unsigned k, Fn&& fn) {
  std::vector<VarIndex> idx(k, 0);
  if (k == 0) {
    fn(idx);
    return;
  }
  if (n == 0) return;
  while (true) {
    fn(idx);
    int pos = static_cast<int>(k) - 1;
    while (pos >= 0 && idx[pos] == n - 1) --pos;
    if (pos < 0) return;
    ++idx[pos];
    for (unsigned q = pos + 1; q < k; ++q) idx[q] = idx[pos];
  }
}

Monomial from_indices(const std::vector<VarIndex>& idx) {
  std::vector<VarPower> f;
  for (VarIndex v : idx) {
    if (!f.empty() && f.back().var == v) {
      ++f.back().exp;
    } else {
      f.push_back({v, 1});
    }
  }
  return Monomial(std::move(f));
}

// C(n + k, k) without overflow for the sizes we care about.
double multiset_count(double n, int max_degree) {
  double total = 0.0, term = 1.0;
  for (int k = 0; k <= max_degree; ++k) {
    if (k > 0) term *= (n + k - 1) / k;
    total += term;
  }
  return total;
}

// Range of x^e for x in [l, u].
std::pair<double, double> power_range(double l, double u, std::uint32_t e) {
  const double pl = std::pow(l, e), pu = std::pow(u, e);
  if (e % 2 == 1) return {pl, pu};
  const double hi = std::max(pl, pu);
  return {(l <= 0.0 && u >= 0.0) ? 0.0 : std::min(pl, pu), hi};
}

}  // namespace

MomentLayout::MomentLayout(VarIndex num_vars, int level, std::size_t max_moments)
    : num_vars_(num_vars), level_(level) {
  if (level < 1 || level > 2) throw LevelError("relaxation level must be 1 or 2");
  if (multiset_count(num_vars, 2 * level) > static_cast<double>(max_moments)) {
    throw LevelError("relaxation has too many moments for this level");
  }
  const unsigned top = 2 * static_cast<unsigned>(level);
  for (unsigned k = 0; k <= top; ++k) {
    for_each_multiset(num_vars, k, [&](const std::vector<VarIndex>& idx) {
      index_.emplace(from_indices(idx), moments_.size());
      moments_.push_back(from_indices(idx));
    });
    if (k == static_cast<unsigned>(level)) basis_size_ = moments_.size();
  }
  const auto b = static_cast<Eigen::Index>(basis_size_);
  matrix_.resize(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = i; j < b; ++j) {
      const auto k = static_cast<int>(index_of(moments_[i] * moments_[j]));
      matrix_(i, j) = k;
      matrix_(j, i) = k;
    }
  }
}

std::size_t MomentLayout::index_of(const Monomial& m) const {
  auto it = index_.find(m);
  if (it == index_.end()) {
    throw LevelError("monomial degree exceeds twice the relaxation level");
  }
  return it->second;
}

std::size_t MomentLayout::square(VarIndex i) const {
  return index_of(Monomial::variable(i, 2));
}

Eigen::VectorXd MomentLayout::moments_of(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() < static_cast<Eigen::Index>(num_vars_)) {
    throw ShapeError("moments_of: point is shorter than the variable count");
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(moments_.size()));
  for (std::size_t k = 0; k < moments_.size(); ++k) {
    double v = 1.0;
    for (const auto& f : moments_[k].factors()) v *= std::pow(x[f.var], f.exp);
    y[static_cast<Eigen::Index>(k)] = v;
  }
  return y;
}

double LinearRow::evaluate(const Eigen::Ref<const Eigen::VectorXd>& moments) const {
  double v = constant;
  for (const auto& [k, a] : coeffs) v += a * moments[static_cast<Eigen::Index>(k)];
  return v;
}

LinearRow linearize(const Polynomial& p, const MomentLayout& layout) {
  LinearRow row;
  for (const auto& [m, a] : p.sorted_terms()) {
    const std::size_t k = layout.index_of(m);
    if (k == 0) {
      row.constant += a;
    } else {
      row.coeffs.emplace_back(k, a);
    }
  }
  return row;
}

bool RelaxedProblem::admits(const Eigen::Ref<const Eigen::VectorXd>& moments, double lambda,
                            double tol) const {
  if (moments.size() != static_cast<Eigen::Index>(num_moments)) {
    throw ShapeError("admits: moment vector has the wrong length");
  }
  for (const auto& r : equalities) {
    if (std::abs(r.evaluate(moments)) > tol) return false;
  }
  for (const auto& r : inequalities) {
    if (r.evaluate(moments) < -tol) return false;
  }
  if (lambda < lambda_lower - tol) return false;
  const auto n = moment_matrix.rows();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = moments[moment_matrix(i, j)];
  }
  m.diagonal().array() += lambda;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0] >= -tol;
}

RelaxedProblem assemble(const EquationSystem& system, const MomentLayout& layout,
                        const Region& region, const RelaxationOptions& options) {
  const auto n = static_cast<VarIndex>(system.num_vars());
  if (layout.num_vars() != n) throw ShapeError("assemble: layout does not match the system");
  if (region.size() != static_cast<Eigen::Index>(n)) {
    throw ShapeError("assemble: region does not match the system");
  }
  RelaxedProblem out;
  out.num_moments = layout.num_moments();
  out.moment_matrix = layout.moment_matrix();
  out.lambda_lower = -static_cast<double>(layout.basis_size());
  out.moment_lower.resize(static_cast<Eigen::Index>(layout.num_moments()));
  out.moment_upper.resize(static_cast<Eigen::Index>(layout.num_moments()));
  for (std::size_t k = 0; k < layout.num_moments(); ++k) {
    double lo = 1.0, hi = 1.0;
    for (const auto& f : layout.moment(k).factors()) {
      const auto [a, b] = power_range(region.lower[f.var], region.upper[f.var], f.exp);
      const double c[4] = {lo * a, lo * b, hi * a, hi * b};
      lo = *std::min_element(c, c + 4);
      hi = *std::max_element(c, c + 4);
    }
    // Outward padding absorbs rounding in the products.
    out.moment_lower[static_cast<Eigen::Index>(k)] = lo - 1e-12 * (1.0 + std::abs(lo));
    out.moment_upper[static_cast<Eigen::Index>(k)] = hi + 1e-12 * (1.0 + std::abs(hi));
  }

  const unsigned top = 2 * static_cast<unsigned>(layout.level());
  for (const auto& h : system.equalities) out.equalities.push_back(linearize(h, layout));
  out.num_problem_equalities = out.equalities.size();
  if (options.equality_products && layout.level() >= 2) {
    for (const auto& h : system.equalities) {
      const unsigned dh = h.degree();
      for (std::size_t k = 1; k < layout.num_moments(); ++k) {
        const Monomial& mu = layout.moment(k);
        if (mu.degree() + dh > top) break;
        out.equalities.push_back(linearize(mul(Polynomial(mu, 1.0), h), layout));
      }
    }
  }

  for (const auto& g : system.inequalities) out.inequalities.push_back(linearize(g, layout));
  for (VarIndex i = 0; i < n; ++i) {
    const double l = region.lower[i], u = region.upper[i];
    const std::size_t xi = layout.first_order(i), xii = layout.square(i);
    out.inequalities.push_back({{{xi, 1.0}}, -l});
    out.inequalities.push_back({{{xi, -1.0}}, u});
    out.inequalities.push_back({{{xi, l + u}, {xii, -1.0}}, -l * u});
  }
  if (options.cross_mccormick) {
    for (VarIndex i = 0; i < n; ++i) {
      for (VarIndex j = i + 1; j < n; ++j) {
        const double li = region.lower[i], ui = region.upper[i];
        const double lj = region.lower[j], uj = region.upper[j];
        const std::size_t xi = layout.first_order(i), xj = layout.first_order(j);
        const std::size_t xij = layout.index_of(Monomial{{i, 1}, {j, 1}});
        out.inequalities.push_back({{{xij, 1.0}, {xi, -lj}, {xj, -li}}, li * lj});
        out.inequalities.push_back({{{xij, 1.0}, {xi, -uj}, {xj, -ui}}, ui * uj});
        out.inequalities.push_back({{{xij, -1.0}, {xi, lj}, {xj, ui}}, -ui * lj});
        out.inequalities.push_back({{{xij, -1.0}, {xi, uj}, {xj, li}}, -li * uj});
      }
    }
  }
  return out;
}

RelaxedProblem assemble(const EquationSystem& system, const Region& region, int level,
                        const RelaxationOptions& options) {
  const MomentLayout layout(static_cast<VarIndex>(system.num_vars()), level);
  return assemble(system, layout, region, options);
}

ExtractedPoint extract(const Eigen::Ref<const Eigen::VectorXd>& moments,
                       const MomentLayout& layout) {
  const auto n = static_cast<Eigen::Index>(layout.num_vars());
  ExtractedPoint out;
  out.point.resize(n);
  out.errors.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = static_cast<VarIndex>(i);
    const double xi = moments[static_cast<Eigen::Index>(layout.first_order(v))];
    const double xii = moments[static_cast<Eigen::Index>(layout.square(v))];
    const double e = (xii - xi * xi) * (xii - xi * xi);
    out.point[i] = xi;
    out.errors[i] = e;
    if (e > out.max_error) {
      out.max_error = e;
      out.argmax = v;
    }
  }
  return out;
}

}  // namespace mub
