#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace lbc {

/// Value and input derivatives of one network output at one point, in normalized
/// coordinates: v, d/dzbar, d2/dzbar2, d/dtbar.
struct Jet {
  double v = 0.0;
  double dz = 0.0;
  double dzz = 0.0;
  double dt = 0.0;

  bool finite() const noexcept {
    return std::isfinite(v) && std::isfinite(dz) && std::isfinite(dzz) && std::isfinite(dt);
  }
};

enum class JetPart : std::uint8_t { value = 0, dz = 1, dzz = 2, dt = 3 };

/// Which jet parts are carried for a batch of B points. A batch is stored as a
/// (width x count*B) matrix whose column blocks hold the active parts in the order
/// value, dz, dzz, dt. The value block is always present; dzz requires dz.
class JetLayout {
 public:
  JetLayout() = default;
  JetLayout(Eigen::Index batch, bool dz, bool dzz, bool dt);

  static JetLayout value_only(Eigen::Index batch) { return {batch, false, false, false}; }
  static JetLayout with_dz(Eigen::Index batch) { return {batch, true, false, false}; }
  static JetLayout full(Eigen::Index batch) { return {batch, true, true, true}; }

  Eigen::Index batch() const noexcept { return batch_; }
  bool has(JetPart part) const noexcept { return offset_[static_cast<int>(part)] >= 0; }
  /// First column of `part`'s block; -1 if inactive.
  Eigen::Index offset(JetPart part) const noexcept { return offset_[static_cast<int>(part)]; }
  Eigen::Index columns() const noexcept { return parts_ * batch_; }
  int parts() const noexcept { return parts_; }

  bool operator==(const JetLayout& other) const noexcept {
    return batch_ == other.batch_ && offset_ == other.offset_;
  }

 private:
  Eigen::Index batch_ = 0;
  int parts_ = 0;
  std::array<Eigen::Index, 4> offset_{-1, -1, -1, -1};
};

/// Seed jets for inputs (zbar, tbar): the 2 x columns() input block.
Eigen::MatrixXd seed_inputs(const Eigen::VectorXd& zbar, const Eigen::VectorXd& tbar,
                            const JetLayout& layout);

namespace kernels {

/// Y = W X on every part block; b added to the value block only.
void jet_affine(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const Eigen::MatrixXd& X,
                const JetLayout& layout, Eigen::MatrixXd& Y);

/// Elementwise tanh lifted to jets: v' = tanh v, dz' = s dz,
/// dzz' = s dzz - 2 tanh(v) s dz^2, dt' = s dt, with s = 1 - tanh^2 v.
void jet_tanh(const Eigen::MatrixXd& X, const JetLayout& layout, Eigen::MatrixXd& Y);

/// Adjoint of jet_tanh: given X, Y = jet_tanh(X) and dL/dY, accumulates dL/dX.
void jet_tanh_backward(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& gY,
                       const JetLayout& layout, Eigen::MatrixXd& gX);

}  // namespace kernels

}  // namespace lbc
