#include "mub/poly.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "mub/errors.hpp"

namespace mub {

Monomial::Monomial(std::vector<VarPower> factors) {
  std::sort(factors.begin(), factors.end(),
            [](const VarPower& a, const VarPower& b) { return a.var < b.var; });
  for (const auto& f : factors) {
    if (f.exp == 0) continue;
    if (!factors_.empty() && factors_.back().var == f.var) {
      factors_.back().exp += f.exp;
    } else {
      factors_.push_back(f);
    }
    degree_ += f.exp;
  }
}

Monomial Monomial::variable(VarIndex v, std::uint32_t exp) {
  return Monomial({VarPower{v, exp}});
}

std::uint32_t Monomial::exponent(VarIndex v) const {
  for (const auto& f : factors_) {
    if (f.var == v) return f.exp;
    if (f.var > v) break;
  }
  return 0;
}

std::vector<VarIndex> Monomial::indices() const {
  std::vector<VarIndex> out;
  out.reserve(degree_);
  for (const auto& f : factors_) out.insert(out.end(), f.exp, f.var);
  return out;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.factors_.reserve(factors_.size() + other.factors_.size());
  auto a = factors_.begin();
  auto b = other.factors_.begin();
  while (a != factors_.end() || b != other.factors_.end()) {
    if (b == other.factors_.end() || (a != factors_.end() && a->var < b->var)) {
      out.factors_.push_back(*a++);
    } else if (a == factors_.end() || b->var < a->var) {
      out.factors_.push_back(*b++);
    } else {
      out.factors_.push_back({a->var, a->exp + b->exp});
      ++a;
      ++b;
    }
  }
  out.degree_ = degree_ + other.degree_;
  return out;
}

Monomial Monomial::with_exponent(VarIndex v, std::uint32_t exp) const {
  std::vector<VarPower> f;
  f.reserve(factors_.size() + 1);
  bool placed = false;
  for (const auto& p : factors_) {
    if (p.var == v) {
      if (exp > 0) f.push_back({v, exp});
      placed = true;
    } else {
      if (!placed && p.var > v) {
        if (exp > 0) f.push_back({v, exp});
        placed = true;
      }
      f.push_back(p);
    }
  }
  if (!placed && exp > 0) f.push_back({v, exp});
  Monomial out;
  out.factors_ = std::move(f);
  for (const auto& p : out.factors_) out.degree_ += p.exp;
  return out;
}

std::size_t Monomial::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& f : factors_) {
    h ^= (static_cast<std::uint64_t>(f.var) << 8) ^ f.exp;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

std::strong_ordering operator<=>(const Monomial& a, const Monomial& b) {
  if (a.degree_ != b.degree_) return a.degree_ <=> b.degree_;
  // Walk both index multisets in lockstep without materializing them.
  std::size_t ia = 0, ib = 0;
  std::uint32_t ua = 0, ub = 0;  // copies of the current factor consumed
  while (ia < a.factors_.size() && ib < b.factors_.size()) {
    VarIndex va = a.factors_[ia].var;
    VarIndex vb = b.factors_[ib].var;
    if (va != vb) return va <=> vb;
    ++ua;
    ++ub;
    if (ua == a.factors_[ia].exp) { ++ia; ua = 0; }
    if (ub == b.factors_[ib].exp) { ++ib; ub = 0; }
  }
  return std::strong_ordering::equal;
}

Polynomial::Polynomial(double constant) {
  add_term(Monomial{}, constant);
}

Polynomial::Polynomial(const Monomial& m, double coeff) {
  add_term(m, coeff);
}

Polynomial Polynomial::variable(VarIndex v, double coeff) {
  return Polynomial(Monomial::variable(v), coeff);
}

unsigned Polynomial::degree() const {
  unsigned d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double coeff) {
  num_vars_ = std::max(num_vars_, m.span());
  auto [it, inserted] = terms_.try_emplace(m, coeff);
  if (!inserted) it->second += coeff;
  if (std::abs(it->second) < kCleanupThreshold) terms_.erase(it);
}

std::vector<std::pair<Monomial, double>> Polynomial::sorted_terms() const {
  std::vector<std::pair<Monomial, double>> out(terms_.begin(), terms_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& q) {
  num_vars_ = std::max(num_vars_, q.num_vars_);
  for (const auto& [m, c] : q.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& q) {
  num_vars_ = std::max(num_vars_, q.num_vars_);
  for (const auto& [m, c] : q.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= s;
    if (std::abs(it->second) < kCleanupThreshold) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

bool Polynomial::approx_equal(const Polynomial& other, double tol) const {
  for (const auto& [m, c] : terms_) {
    if (std::abs(c - other.coefficient(m)) > tol) return false;
  }
  for (const auto& [m, c] : other.terms_) {
    if (!terms_.contains(m) && std::abs(c) > tol) return false;
  }
  return true;
}

Polynomial add(const Polynomial& p, const Polynomial& q, double scale) {
  Polynomial out = p;
  out.reserve_vars(q.num_vars());
  for (const auto& [m, c] : q.terms()) out.add_term(m, scale * c);
  return out;
}

Polynomial mul(const Polynomial& p, const Polynomial& q) {
  Polynomial out;
  out.reserve_vars(std::max(p.num_vars(), q.num_vars()));
  for (const auto& [mp, cp] : p.terms()) {
    for (const auto& [mq, cq] : q.terms()) out.add_term(mp * mq, cp * cq);
  }
  return out;
}

Polynomial differentiate(const Polynomial& p, VarIndex v) {
  Polynomial out;
  out.reserve_vars(p.num_vars());
  for (const auto& [m, c] : p.terms()) {
    std::uint32_t e = m.exponent(v);
    if (e == 0) continue;
    out.add_term(m.with_exponent(v, e - 1), c * e);
  }
  return out;
}

Polynomial integrate(const Polynomial& p, VarIndex v) {
  Polynomial out;
  out.reserve_vars(std::max<VarIndex>(p.num_vars(), v + 1));
  for (const auto& [m, c] : p.terms()) {
    std::uint32_t e = m.exponent(v) + 1;
    out.add_term(m.with_exponent(v, e), c / e);
  }
  return out;
}

Polynomial substitute(const Polynomial& p, VarIndex v, double value) {
  Polynomial out;
  out.reserve_vars(p.num_vars());
  for (const auto& [m, c] : p.terms()) {
    std::uint32_t e = m.exponent(v);
    out.add_term(e == 0 ? m : m.with_exponent(v, 0), c * std::pow(value, e));
  }
  return out;
}

double evaluate(const Polynomial& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
  double total = 0.0;
  for (const auto& [m, c] : p.terms()) {
    double t = c;
    for (const auto& f : m.factors()) {
      if (f.var >= static_cast<VarIndex>(x.size())) {
        throw ShapeError("evaluate: point has " + std::to_string(x.size()) +
                         " entries but polynomial uses x" + std::to_string(f.var));
      }
      for (std::uint32_t k = 0; k < f.exp; ++k) t *= x[f.var];
    }
    total += t;
  }
  return total;
}

std::vector<Polynomial> gradient(const Polynomial& p, VarIndex n) {
  std::vector<Polynomial> g;
  g.reserve(n);
  for (VarIndex v = 0; v < n; ++v) g.push_back(differentiate(p, v));
  return g;
}

std::vector<Polynomial> gradient(const Polynomial& p) { return gradient(p, p.num_vars()); }

PolynomialMatrix hessian(const Polynomial& p, VarIndex n) {
  PolynomialMatrix h{n, std::vector<Polynomial>(static_cast<std::size_t>(n) * n)};
  for (VarIndex i = 0; i < n; ++i) {
    Polynomial di = differentiate(p, i);
    for (VarIndex j = i; j < n; ++j) {
      h(i, j) = differentiate(di, j);
      if (j != i) h(j, i) = h(i, j);
    }
  }
  return h;
}

PolynomialMatrix hessian(const Polynomial& p) { return hessian(p, p.num_vars()); }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_text(const Polynomial& p) {
  std::string out;
  for (const auto& [m, c] : p.sorted_terms()) {
    out += format_double(c);
    if (m.is_unit()) {
      out += " 1";
    } else {
      for (const auto& f : m.factors()) {
        out += ' ';
        out += std::to_string(f.var);
        out += '^';
        out += std::to_string(f.exp);
      }
    }
    out += '\n';
  }
  return out;
}

namespace {

double parse_double(std::string_view tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw ValidationError("bad coefficient '" + std::string(tok) + "'");
  }
  return v;
}

std::uint32_t parse_uint(std::string_view tok) {
  std::uint32_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw ValidationError("bad integer '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

Polynomial from_text(std::string_view text) {
  Polynomial p;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    double c = parse_double(tok);
    std::vector<VarPower> factors;
    bool unit = false;
    while (ls >> tok) {
      auto caret = tok.find('^');
      if (caret == std::string::npos) {
        if (tok != "1") throw ValidationError("bad monomial token '" + tok + "'");
        unit = true;
        continue;
      }
      factors.push_back({parse_uint(std::string_view(tok).substr(0, caret)),
                         parse_uint(std::string_view(tok).substr(caret + 1))});
    }
    if (unit && !factors.empty()) throw ValidationError("unit marker mixed with variables");
    p.add_term(Monomial(std::move(factors)), c);
  }
  return p;
}

CompiledPolynomials::CompiledPolynomials(const std::vector<Polynomial>& polys) {
  poly_offsets_.push_back(0);
  term_offsets_.push_back(0);
  for (const auto& p : polys) {
    for (const auto& [m, c] : p.sorted_terms()) {
      coeffs_.push_back(c);
      for (const auto& f : m.factors()) {
        vars_.push_back(f.var);
        exps_.push_back(static_cast<std::uint8_t>(f.exp));
        num_vars_ = std::max(num_vars_, f.var + 1);
      }
      term_offsets_.push_back(static_cast<std::uint32_t>(vars_.size()));
    }
    poly_offsets_.push_back(static_cast<std::uint32_t>(coeffs_.size()));
  }
}

double CompiledPolynomials::evaluate_one(std::size_t k, const double* x) const {
  double total = 0.0;
  for (std::uint32_t t = poly_offsets_[k]; t < poly_offsets_[k + 1]; ++t) {
    double v = coeffs_[t];
    for (std::uint32_t f = term_offsets_[t]; f < term_offsets_[t + 1]; ++f) {
      const double xv = x[vars_[f]];
      switch (exps_[f]) {
        case 1: v *= xv; break;
        case 2: v *= xv * xv; break;
        case 3: v *= xv * xv * xv; break;
        case 4: { double s = xv * xv; v *= s * s; break; }
        default:
          for (std::uint8_t e = 0; e < exps_[f]; ++e) v *= xv;
      }
    }
    total += v;
  }
  return total;
}

void CompiledPolynomials::evaluate_into(const double* x, double* out) const {
  for (std::size_t k = 0; k + 1 < poly_offsets_.size(); ++k) out[k] = evaluate_one(k, x);
}

}  // namespace mub
