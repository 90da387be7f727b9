#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mub/poly.hpp"
#include "mub/region.hpp"

namespace mub {

enum class Reduction { None, Full };

/// Dimension plus a size profile {s1 >= s2 >= ... >= sn}: set i holds s_i
/// orthonormal vectors, and vectors from different sets are unbiased.
struct ProblemSpec {
  int d = 2;
  std::vector<int> sizes;
  bool vector_swap = true;
  bool set_swap = true;
  bool conjugation = true;
  Reduction reduction = Reduction::Full;

  int bases() const { return static_cast<int>(sizes.size()); }
  // Throws ValidationError.
  void validate() const;
};

enum class VariableKind { Re, Im, UnbiasRe, UnbiasIm };

struct VariableDescriptor {
  VariableKind kind = VariableKind::Re;
  int set = -1;      // 0-based set index (Re/Im)
  int vec = -1;      // 0-based vector index within the set (Re/Im)
  int element = -1;  // 1-based element index, 2..d (Re/Im)
  int pair = -1;     // free-free pair index (UnbiasRe/UnbiasIm)
  double lower = 0.0;
  double upper = 0.0;

  // 1-based human-readable name, e.g. "a[3,1,2]" or "c[4]".
  std::string name() const;
};

struct VectorRef {
  int set = 0;
  int vec = 0;
  friend bool operator==(const VectorRef&, const VectorRef&) = default;
};

// Cross-set pair of free vectors carrying circle variables (c_t, d_t).
struct FreePair {
  VectorRef first;
  VectorRef second;
};

class VariableRegistry {
 public:
  VariableRegistry() = default;
  explicit VariableRegistry(const ProblemSpec& spec);

  std::size_t size() const { return vars_.size(); }
  const VariableDescriptor& operator[](std::size_t i) const { return vars_[i]; }
  const std::vector<VariableDescriptor>& descriptors() const { return vars_; }
  const std::vector<VectorRef>& free_vectors() const { return free_; }
  const std::vector<FreePair>& pairs() const { return pairs_; }

  bool is_free(VectorRef v) const;
  // Index of Re/Im of element m (2..d) of a free vector.
  VarIndex re(VectorRef v, int m) const;
  VarIndex im(VectorRef v, int m) const;
  VarIndex unbias_re(int pair) const;
  VarIndex unbias_im(int pair) const;

 private:
  int d_ = 0;
  std::vector<VariableDescriptor> vars_;
  std::vector<VectorRef> free_;
  std::vector<int> free_offset_;  // first Re index of each free vector
  std::vector<FreePair> pairs_;
  VarIndex pair_offset_ = 0;
};

enum class EqualityKind {
  Norm,
  ElementMagnitude,
  Orthogonality,
  UniformOrthogonality,
  UniformUnbiased,
  UnbiasedReal,
  UnbiasedImag,
  Circle,
};

std::string to_string(EqualityKind kind);

/// The reduced real system. Equalities read h(x) = 0, inequalities h(x) >= 0.
struct EquationSystem {
  ProblemSpec spec;
  VariableRegistry registry;
  std::vector<Polynomial> equalities;
  std::vector<EqualityKind> equality_kinds;
  std::vector<Polynomial> inequalities;
  std::vector<std::string> inequality_labels;
  // The uniform/free orthogonality pair is two scalars but counts as one.
  int reported_equalities = 0;

  std::size_t num_vars() const { return registry.size(); }
};

struct CountProfile {
  int variables = 0;
  int reported_equalities = 0;
  int inequalities = 0;
};

EquationSystem build_problem(const ProblemSpec& spec);

/// Closed-form counts. With Reduction::None the unreduced formulation is
/// counted instead (variables by the n d^2 + d^2 n(n-1)/2 formula).
CountProfile count_profile(const ProblemSpec& spec);

long long unreduced_count(int d, int n);

struct CandidateSolution {
  Eigen::VectorXd assignment;
  Eigen::VectorXd residuals;
  double max_residual = 0.0;
  double combined = 0.0;  // sum of squared residuals
  Eigen::VectorXd inequality_values;
  std::vector<int> violated_inequalities;
};

CandidateSolution verify_candidate(const EquationSystem& system,
                                   const Eigen::Ref<const Eigen::VectorXd>& assignment,
                                   double inequality_tol = 1e-8);

Region initial_region(const EquationSystem& system);

// Full complex vectors per set, fixed vectors included.
using ComplexSets = std::vector<std::vector<Eigen::VectorXcd>>;
ComplexSets reconstruct_vectors(const EquationSystem& system,
                                const Eigen::Ref<const Eigen::VectorXd>& assignment);

/// Largest deviation of |<u, v>| from its target (1 for u = v, 0 within a
/// set, 1/sqrt(d) across sets) over all vector pairs.
double reconstruction_error(const EquationSystem& system,
                            const Eigen::Ref<const Eigen::VectorXd>& assignment);

/// Complex conjugation of every vector: negates all Im and UnbiasIm entries.
Eigen::VectorXd conjugate_assignment(const EquationSystem& system,
                                     const Eigen::Ref<const Eigen::VectorXd>& assignment);

/// Maps full complex vectors (element 1 already real and equal to 1/sqrt(d),
/// set 1 computational, set 2 starting with the uniform vector) into reduced
/// coordinates, filling circle variables from the inner products.
Eigen::VectorXd reduce_vectors(const EquationSystem& system, const ComplexSets& sets);

// Text form written by `build --out`.
std::string to_text(const EquationSystem& system);

struct ParsedSystem {
  int d = 0;
  std::vector<int> sizes;
  std::size_t variables = 0;
  std::vector<Polynomial> equalities;
  std::vector<Polynomial> inequalities;
};
ParsedSystem parse_system_text(const std::string& text);

}  // namespace mub
