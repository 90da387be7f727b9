#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mub/poly.hpp"

namespace mub {

struct BranchRecord {
  VarIndex variable = 0;
  double split = 0.0;
  bool upper = false;  // true for the [split, u] child
};

/// Axis-aligned box over the problem variables; the unit of branch-and-bound
/// work. volume_fraction is relative to the initial box.
struct Region {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double volume_fraction = 1.0;
  int depth = 0;
  std::vector<BranchRecord> history;

  Eigen::Index size() const { return lower.size(); }
  Eigen::VectorXd widths() const { return upper - lower; }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const {
    return x.size() == lower.size() && ((x - lower).array() >= -tol).all() &&
           ((upper - x).array() >= -tol).all();
  }
};

}  // namespace mub
