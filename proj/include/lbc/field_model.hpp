#pragma once

#include <utility>

#include <Eigen/Dense>

namespace lbc {

/// Anything that can report (ua, uw) along a depth profile at one physical time.
class FieldModel {
 public:
  virtual ~FieldModel() = default;
  /// Returns (ua, uw) at depths `z` (m) and time `t` (s).
  virtual std::pair<Eigen::VectorXd, Eigen::VectorXd> profile(const Eigen::VectorXd& z, double t) const = 0;
};

}  // namespace lbc
