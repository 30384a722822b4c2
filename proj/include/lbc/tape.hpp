#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lbc/jet.hpp"

namespace lbc::ad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid with its tape.
class Var {
 public:
  Var() = default;
  int id() const noexcept { return id_; }
  const Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr && id_ >= 0; }

 private:
  friend class Tape;
  Var(const Tape* tape, int id) : tape_(tape), id_(id) {}
  const Tape* tape_ = nullptr;
  int id_ = -1;
};

enum class OpKind : std::uint8_t {
  leaf,
  jet_affine,
  jet_tanh,
  jet_part,
  axpby,
  scale,
  mul,
  add_constant,
  mean_square,
  exp,
  sum,
};

const char* op_name(OpKind kind) noexcept;

/// Reverse-mode tape over matrix-valued nodes.
///
/// Every node holds a dense value; scalars are 1x1. Only first-order adjoints are
/// ever formed: input derivatives travel forward inside jets, so a loss built from
/// jets needs a single reverse sweep and no derivative-of-derivative nodes.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input (parameters, trainable coefficients).
  Var variable(Eigen::MatrixXd value);
  /// Non-differentiable input.
  Var constant(Eigen::MatrixXd value);

  Var jet_affine(Var W, Var b, Var X, const JetLayout& layout);
  Var jet_tanh(Var X, const JetLayout& layout);
  /// Row `row` of part `part`, as a 1 x batch row.
  Var jet_part(Var X, const JetLayout& layout, Eigen::Index row, JetPart part);

  Var axpby(double a, Var x, double b, Var y);
  Var scale(double a, Var x);
  /// Elementwise product; a 1x1 operand broadcasts.
  Var mul(Var x, Var y);
  Var add_constant(Var x, const Eigen::MatrixXd& c);
  /// mean(x.^2) as a 1x1 node.
  Var mean_square(Var x);
  Var exp(Var x);
  /// Sum of weighted 1x1 nodes.
  Var sum(std::span<const Var> terms, std::span<const double> weights);

  /// Seeds d(root)/d(root) = 1 and sweeps backward once. Root must be 1x1.
  void backward(Var root);

  const Eigen::MatrixXd& value(Var v) const;
  double scalar(Var v) const;
  /// Adjoint after backward(); zero matrix if the node did not influence the root.
  const Eigen::MatrixXd& grad(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  OpKind kind(std::size_t index) const { return nodes_.at(index).kind; }
  bool backward_done() const noexcept { return backward_done_; }

 private:
  struct Node {
    OpKind kind = OpKind::leaf;
    bool needs_grad = false;
    int in0 = -1, in1 = -1, in2 = -1;
    double a = 0.0, b = 0.0;
    Eigen::Index row = 0;
    JetPart part = JetPart::value;
    JetLayout layout;
    std::vector<int> inputs;
    std::vector<double> weights;
    Eigen::MatrixXd value;
    Eigen::MatrixXd adjoint;
  };

  int index_of(Var v) const;
  Var push(Node node);
  Eigen::MatrixXd& adjoint_of(int id);
  void backprop(const Node& node);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace lbc::ad
