#include "mub/musb_model.hpp"

#include <cmath>
#include <sstream>

#include "mub/errors.hpp"

namespace mub {

void ProblemSpec::validate() const {
  if (d < 2) throw ValidationError("dimension must be at least 2");
  if (sizes.size() < 2) throw ValidationError("need at least two sets");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1 || sizes[i] > d) {
      throw ValidationError("set size " + std::to_string(sizes[i]) + " outside 1.." +
                            std::to_string(d));
    }
    if (i > 0 && sizes[i] > sizes[i - 1]) {
      throw ValidationError("set sizes must be non-increasing");
    }
  }
}

std::string VariableDescriptor::name() const {
  switch (kind) {
    case VariableKind::Re:
      return "a[" + std::to_string(set + 1) + "," + std::to_string(vec + 1) + "," +
             std::to_string(element) + "]";
    case VariableKind::Im:
      return "b[" + std::to_string(set + 1) + "," + std::to_string(vec + 1) + "," +
             std::to_string(element) + "]";
    case VariableKind::UnbiasRe:
      return "c[" + std::to_string(pair + 1) + "]";
    case VariableKind::UnbiasIm:
      return "d[" + std::to_string(pair + 1) + "]";
  }
  return "?";
}

std::string to_string(EqualityKind kind) {
  switch (kind) {
    case EqualityKind::Norm: return "norm";
    case EqualityKind::ElementMagnitude: return "element_magnitude";
    case EqualityKind::Orthogonality: return "orthogonality";
    case EqualityKind::UniformOrthogonality: return "uniform_orthogonality";
    case EqualityKind::UniformUnbiased: return "uniform_unbiased";
    case EqualityKind::UnbiasedReal: return "unbiased_real";
    case EqualityKind::UnbiasedImag: return "unbiased_imag";
    case EqualityKind::Circle: return "circle";
  }
  return "?";
}

namespace {

// Set 0 is the computational basis; set 1 starts with the uniform vector.
bool vector_is_free(int set, int vec) { return set >= 2 || (set == 1 && vec >= 1); }

int free_in_set(const ProblemSpec& spec, int set) {
  if (set == 0) return 0;
  if (set == 1) return spec.sizes[1] - 1;
  return spec.sizes[set];
}

}  // namespace

VariableRegistry::VariableRegistry(const ProblemSpec& spec) : d_(spec.d) {
  const double r = 1.0 / std::sqrt(static_cast<double>(spec.d));
  const int s1 = spec.sizes[0];
  for (int set = 0; set < spec.bases(); ++set) {
    for (int vec = 0; vec < spec.sizes[set]; ++vec) {
      if (!vector_is_free(set, vec)) continue;
      free_.push_back({set, vec});
      free_offset_.push_back(static_cast<int>(vars_.size()));
      for (int m = 2; m <= spec.d; ++m) {
        const double bound = m <= s1 ? r : 1.0;
        vars_.push_back({VariableKind::Re, set, vec, m, -1, -bound, bound});
        vars_.push_back({VariableKind::Im, set, vec, m, -1, -bound, bound});
      }
    }
  }
  for (std::size_t i = 0; i < free_.size(); ++i) {
    for (std::size_t j = i + 1; j < free_.size(); ++j) {
      if (free_[i].set != free_[j].set) pairs_.push_back({free_[i], free_[j]});
    }
  }
  pair_offset_ = static_cast<VarIndex>(vars_.size());
  for (int t = 0; t < static_cast<int>(pairs_.size()); ++t) {
    vars_.push_back({VariableKind::UnbiasRe, -1, -1, -1, t, -r, r});
    vars_.push_back({VariableKind::UnbiasIm, -1, -1, -1, t, -r, r});
  }
}

bool VariableRegistry::is_free(VectorRef v) const {
  return std::find(free_.begin(), free_.end(), v) != free_.end();
}

VarIndex VariableRegistry::re(VectorRef v, int m) const {
  auto it = std::find(free_.begin(), free_.end(), v);
  if (it == free_.end() || m < 2 || m > d_) throw ShapeError("no such free coordinate");
  return static_cast<VarIndex>(free_offset_[it - free_.begin()] + 2 * (m - 2));
}

VarIndex VariableRegistry::im(VectorRef v, int m) const { return re(v, m) + 1; }

VarIndex VariableRegistry::unbias_re(int pair) const {
  return pair_offset_ + 2 * static_cast<VarIndex>(pair);
}

VarIndex VariableRegistry::unbias_im(int pair) const { return unbias_re(pair) + 1; }

namespace {

struct ComplexPoly {
  Polynomial re;
  Polynomial im;
};

// Elements 1..d of a vector as polynomials (index 0 holds element 1).
std::vector<ComplexPoly> vector_elements(const ProblemSpec& spec, const VariableRegistry& reg,
                                         VectorRef v) {
  const double r = 1.0 / std::sqrt(static_cast<double>(spec.d));
  std::vector<ComplexPoly> out(spec.d);
  if (!vector_is_free(v.set, v.vec)) {
    if (v.set == 0) {
      out[v.vec].re = Polynomial(1.0);
    } else {
      for (auto& e : out) e.re = Polynomial(r);
    }
    return out;
  }
  out[0].re = Polynomial(r);
  for (int m = 2; m <= spec.d; ++m) {
    out[m - 1].re = Polynomial::variable(reg.re(v, m));
    out[m - 1].im = Polynomial::variable(reg.im(v, m));
  }
  return out;
}

// <u, v> = sum conj(u_m) v_m
ComplexPoly inner(const std::vector<ComplexPoly>& u, const std::vector<ComplexPoly>& v) {
  ComplexPoly out;
  for (std::size_t m = 0; m < u.size(); ++m) {
    out.re += u[m].re * v[m].re + u[m].im * v[m].im;
    out.im += u[m].re * v[m].im - u[m].im * v[m].re;
  }
  return out;
}

Polynomial component_sum(const ProblemSpec& spec, const VariableRegistry& reg, VectorRef v) {
  Polynomial out;
  for (int m = 2; m <= spec.d; ++m) {
    out.add_term(Monomial::variable(reg.re(v, m)), 1.0);
    out.add_term(Monomial::variable(reg.im(v, m)), 1.0);
  }
  return out;
}

}  // namespace

EquationSystem build_problem(const ProblemSpec& spec) {
  spec.validate();
  if (spec.reduction != Reduction::Full) {
    throw ValidationError("only the fully reduced system can be built; use counts for none");
  }
  EquationSystem sys;
  sys.spec = spec;
  sys.registry = VariableRegistry(spec);
  const auto& reg = sys.registry;
  const int d = spec.d;
  const int s1 = spec.sizes[0];
  const double inv_d = 1.0 / d;
  const double r = 1.0 / std::sqrt(static_cast<double>(d));
  const VarIndex nvars = static_cast<VarIndex>(reg.size());
  int merged_pairs = 0;

  auto emit = [&](Polynomial p, EqualityKind kind) {
    p.reserve_vars(nvars);
    sys.equalities.push_back(std::move(p));
    sys.equality_kinds.push_back(kind);
  };

  // (a) norms; implied by the element magnitudes when s1 == d.
  if (s1 < d) {
    for (const auto& v : reg.free_vectors()) {
      Polynomial h(-(1.0 - inv_d));
      for (int m = 2; m <= d; ++m) {
        h.add_term(Monomial::variable(reg.re(v, m), 2), 1.0);
        h.add_term(Monomial::variable(reg.im(v, m), 2), 1.0);
      }
      emit(std::move(h), EqualityKind::Norm);
    }
  }

  // (b) unbiased against computational vectors e_2 .. e_{s1}.
  for (const auto& v : reg.free_vectors()) {
    for (int k = 2; k <= s1; ++k) {
      Polynomial h(-inv_d);
      h.add_term(Monomial::variable(reg.re(v, k), 2), 1.0);
      h.add_term(Monomial::variable(reg.im(v, k), 2), 1.0);
      emit(std::move(h), EqualityKind::ElementMagnitude);
    }
  }

  // (c) orthogonality within each set.
  for (int set = 1; set < spec.bases(); ++set) {
    for (int k = 0; k < spec.sizes[set]; ++k) {
      for (int l = k + 1; l < spec.sizes[set]; ++l) {
        const VectorRef u{set, k}, v{set, l};
        if (!reg.is_free(u)) {
          Polynomial re(r), im;
          for (int m = 2; m <= d; ++m) {
            re.add_term(Monomial::variable(reg.re(v, m)), 1.0);
            im.add_term(Monomial::variable(reg.im(v, m)), 1.0);
          }
          emit(std::move(re), EqualityKind::UniformOrthogonality);
          emit(std::move(im), EqualityKind::UniformOrthogonality);
          ++merged_pairs;
        } else {
          auto ip = inner(vector_elements(spec, reg, u), vector_elements(spec, reg, v));
          emit(std::move(ip.re), EqualityKind::Orthogonality);
          emit(std::move(ip.im), EqualityKind::Orthogonality);
        }
      }
    }
  }

  // (d) unbiased against the uniform vector.
  for (const auto& v : reg.free_vectors()) {
    if (v.set < 2) continue;
    Polynomial sa(r), sb;
    for (int m = 2; m <= d; ++m) {
      sa.add_term(Monomial::variable(reg.re(v, m)), 1.0);
      sb.add_term(Monomial::variable(reg.im(v, m)), 1.0);
    }
    emit(sa * sa + sb * sb - 1.0, EqualityKind::UniformUnbiased);
  }

  // (e) free-free cross-set pairs through the circle variables.
  for (int t = 0; t < static_cast<int>(reg.pairs().size()); ++t) {
    const auto& pr = reg.pairs()[t];
    auto ip = inner(vector_elements(spec, reg, pr.first), vector_elements(spec, reg, pr.second));
    const auto c = Polynomial::variable(reg.unbias_re(t));
    const auto dd = Polynomial::variable(reg.unbias_im(t));
    emit(ip.re - c, EqualityKind::UnbiasedReal);
    emit(ip.im - dd, EqualityKind::UnbiasedImag);
    emit(c * c + dd * dd - inv_d, EqualityKind::Circle);
  }

  sys.reported_equalities = static_cast<int>(sys.equalities.size()) - merged_pairs;

  auto emit_ineq = [&](Polynomial p, std::string label) {
    p.reserve_vars(nvars);
    sys.inequalities.push_back(std::move(p));
    sys.inequality_labels.push_back(std::move(label));
  };

  if (spec.conjugation && !reg.free_vectors().empty()) {
    Polynomial h;
    for (const auto& v : reg.free_vectors()) {
      for (int m = 2; m <= d; ++m) h.add_term(Monomial::variable(reg.im(v, m)), 1.0);
    }
    emit_ineq(std::move(h), "conjugation");
  }
  if (spec.vector_swap) {
    for (int set = 1; set < spec.bases(); ++set) {
      const int first = set == 1 ? 1 : 0;
      for (int k = first; k + 1 < spec.sizes[set]; ++k) {
        emit_ineq(component_sum(spec, reg, {set, k}) - component_sum(spec, reg, {set, k + 1}),
                  "vector_swap set=" + std::to_string(set + 1) + " vec=" + std::to_string(k + 1));
      }
    }
  }
  if (spec.set_swap) {
    for (int set = 2; set + 1 < spec.bases(); ++set) {
      if (spec.sizes[set] != spec.sizes[set + 1]) continue;
      Polynomial h;
      for (int k = 0; k < spec.sizes[set]; ++k) {
        h += component_sum(spec, reg, {set, k});
        h -= component_sum(spec, reg, {set + 1, k});
      }
      emit_ineq(std::move(h), "set_swap set=" + std::to_string(set + 1));
    }
  }
  return sys;
}

long long unreduced_count(int d, int n) {
  const long long dd = static_cast<long long>(d) * d;
  return n * dd + dd * n * (n - 1) / 2;
}

CountProfile count_profile(const ProblemSpec& spec) {
  spec.validate();
  const int d = spec.d;
  const int n = spec.bases();
  CountProfile out;
  if (spec.reduction == Reduction::None) {
    out.variables = static_cast<int>(unreduced_count(d, n));
    // norms, real+imaginary orthogonality, and (re, im, circle) per cross pair
    out.reported_equalities = n * d + n * d * (d - 1) + 3 * d * d * n * (n - 1) / 2;
    return out;
  }
  int free_total = 0;
  std::vector<int> free(n);
  for (int i = 0; i < n; ++i) {
    free[i] = free_in_set(spec, i);
    free_total += free[i];
  }
  int pairs = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs += free[i] * free[j];

  out.variables = 2 * (d - 1) * free_total + 2 * pairs;

  int eq = 0;
  if (spec.sizes[0] < d) eq += free_total;
  eq += (spec.sizes[0] - 1) * free_total;
  eq += free[1] + free[1] * (free[1] - 1);  // uniform pairs once, free pairs twice
  for (int i = 2; i < n; ++i) eq += free[i] * (free[i] - 1);
  for (int i = 2; i < n; ++i) eq += free[i];
  eq += 3 * pairs;
  out.reported_equalities = eq;

  int ineq = 0;
  if (spec.conjugation && free_total > 0) ++ineq;
  if (spec.vector_swap) {
    for (int i = 1; i < n; ++i) ineq += std::max(0, free[i] - 1);
  }
  if (spec.set_swap) {
    for (int i = 2; i + 1 < n; ++i) ineq += spec.sizes[i] == spec.sizes[i + 1] ? 1 : 0;
  }
  out.inequalities = ineq;
  return out;
}

CandidateSolution verify_candidate(const EquationSystem& system,
                                   const Eigen::Ref<const Eigen::VectorXd>& assignment,
                                   double inequality_tol) {
  if (static_cast<std::size_t>(assignment.size()) != system.num_vars()) {
    throw ShapeError("verify_candidate: assignment has " + std::to_string(assignment.size()) +
                     " entries, registry has " + std::to_string(system.num_vars()));
  }
  CandidateSolution out;
  out.assignment = assignment;
  out.residuals.resize(static_cast<Eigen::Index>(system.equalities.size()));
  for (std::size_t i = 0; i < system.equalities.size(); ++i) {
    const double r = evaluate(system.equalities[i], assignment);
    out.residuals[static_cast<Eigen::Index>(i)] = r;
    out.combined += r * r;
    out.max_residual = std::max(out.max_residual, std::abs(r));
  }
  out.inequality_values.resize(static_cast<Eigen::Index>(system.inequalities.size()));
  for (std::size_t i = 0; i < system.inequalities.size(); ++i) {
    const double v = evaluate(system.inequalities[i], assignment);
    out.inequality_values[static_cast<Eigen::Index>(i)] = v;
    if (v < -inequality_tol) out.violated_inequalities.push_back(static_cast<int>(i));
  }
  return out;
}

Region initial_region(const EquationSystem& system) {
  const auto n = static_cast<Eigen::Index>(system.num_vars());
  Region region;
  region.lower.resize(n);
  region.upper.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    region.lower[i] = system.registry[static_cast<std::size_t>(i)].lower;
    region.upper[i] = system.registry[static_cast<std::size_t>(i)].upper;
  }
  region.volume_fraction = 1.0;
  return region;
}

ComplexSets reconstruct_vectors(const EquationSystem& system,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != system.num_vars()) {
    throw ShapeError("reconstruct_vectors: assignment length mismatch");
  }
  const auto& spec = system.spec;
  const int d = spec.d;
  const double r = 1.0 / std::sqrt(static_cast<double>(d));
  ComplexSets sets(spec.bases());
  for (int set = 0; set < spec.bases(); ++set) {
    for (int vec = 0; vec < spec.sizes[set]; ++vec) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
      if (set == 0) {
        v[vec] = 1.0;
      } else if (!vector_is_free(set, vec)) {
        v.setConstant(r);
      } else {
        v[0] = r;
        for (int m = 2; m <= d; ++m) {
          v[m - 1] = {x[system.registry.re({set, vec}, m)], x[system.registry.im({set, vec}, m)]};
        }
      }
      sets[set].push_back(std::move(v));
    }
  }
  return sets;
}

double reconstruction_error(const EquationSystem& system,
                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto sets = reconstruct_vectors(system, x);
  const double r = 1.0 / std::sqrt(static_cast<double>(system.spec.d));
  double worst = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t k = 0; k < sets[i].size(); ++k) {
      for (std::size_t j = i; j < sets.size(); ++j) {
        for (std::size_t l = (j == i ? k : 0); l < sets[j].size(); ++l) {
          const double mag = std::abs(sets[i][k].dot(sets[j][l]));
          const double target = i != j ? r : (k == l ? 1.0 : 0.0);
          worst = std::max(worst, std::abs(mag - target));
        }
      }
    }
  }
  return worst;
}

Eigen::VectorXd conjugate_assignment(const EquationSystem& system,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd out = x;
  for (std::size_t i = 0; i < system.num_vars(); ++i) {
    const auto kind = system.registry[i].kind;
    if (kind == VariableKind::Im || kind == VariableKind::UnbiasIm) {
      out[static_cast<Eigen::Index>(i)] = -out[static_cast<Eigen::Index>(i)];
    }
  }
  return out;
}

Eigen::VectorXd reduce_vectors(const EquationSystem& system, const ComplexSets& sets) {
  const auto& reg = system.registry;
  Eigen::VectorXd x(static_cast<Eigen::Index>(reg.size()));
  for (const auto& v : reg.free_vectors()) {
    const auto& vec = sets.at(v.set).at(v.vec);
    for (int m = 2; m <= system.spec.d; ++m) {
      x[reg.re(v, m)] = vec[m - 1].real();
      x[reg.im(v, m)] = vec[m - 1].imag();
    }
  }
  for (int t = 0; t < static_cast<int>(reg.pairs().size()); ++t) {
    const auto& pr = reg.pairs()[t];
    const std::complex<double> ip =
        sets.at(pr.first.set).at(pr.first.vec).dot(sets.at(pr.second.set).at(pr.second.vec));
    x[reg.unbias_re(t)] = ip.real();
    x[reg.unbias_im(t)] = ip.imag();
  }
  return x;
}

std::string to_text(const EquationSystem& system) {
  std::ostringstream out;
  out << "dim " << system.spec.d << "\nsizes";
  for (int s : system.spec.sizes) out << ' ' << s;
  out << "\nflags vector_swap=" << system.spec.vector_swap
      << " set_swap=" << system.spec.set_swap << " conjugation=" << system.spec.conjugation
      << "\nvariables " << system.num_vars() << '\n';
  for (std::size_t i = 0; i < system.num_vars(); ++i) {
    const auto& v = system.registry[i];
    out << "var " << i << ' ' << v.name() << ' ' << format_double(v.lower) << ' '
        << format_double(v.upper) << '\n';
  }
  out << "equalities " << system.equalities.size() << " reported "
      << system.reported_equalities << '\n';
  for (std::size_t i = 0; i < system.equalities.size(); ++i) {
    out << "equality " << i << ' ' << to_string(system.equality_kinds[i]) << '\n'
        << to_text(system.equalities[i]);
  }
  out << "inequalities " << system.inequalities.size() << '\n';
  for (std::size_t i = 0; i < system.inequalities.size(); ++i) {
    out << "inequality " << i << ' ' << system.inequality_labels[i] << '\n'
        << to_text(system.inequalities[i]);
  }
  return out.str();
}

ParsedSystem parse_system_text(const std::string& text) {
  ParsedSystem out;
  std::istringstream in(text);
  std::string line;
  std::string body;
  std::vector<Polynomial>* target = nullptr;
  auto flush = [&] {
    if (target) target->push_back(from_text(body));
    body.clear();
    target = nullptr;
  };
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head.empty()) continue;
    const char c0 = head[0];
    if (c0 == '-' || c0 == '+' || c0 == '.' || (c0 >= '0' && c0 <= '9') || head == "inf" ||
        head == "nan") {
      body += line;
      body += '\n';
      continue;
    }
    flush();
    if (head == "dim") {
      ls >> out.d;
    } else if (head == "sizes") {
      int s;
      while (ls >> s) out.sizes.push_back(s);
    } else if (head == "variables") {
      ls >> out.variables;
    } else if (head == "equality") {
      target = &out.equalities;
    } else if (head == "inequality") {
      target = &out.inequalities;
    }
  }
  flush();
  return out;
}

}  // namespace mub
