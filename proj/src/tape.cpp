#include "lbc/tape.hpp"

#include <string>

#include "lbc/errors.hpp"

namespace lbc::ad {

const char* op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::jet_affine: return "jet_affine";
    case OpKind::jet_tanh: return "jet_tanh";
    case OpKind::jet_part: return "jet_part";
    case OpKind::axpby: return "axpby";
    case OpKind::scale: return "scale";
    case OpKind::mul: return "mul";
    case OpKind::add_constant: return "add_constant";
    case OpKind::mean_square: return "mean_square";
    case OpKind::exp: return "exp";
    case OpKind::sum: return "sum";
  }
  return "?";
}

int Tape::index_of(Var v) const {
  if (v.tape_ != this) throw TapeError("variable belongs to a different tape");
  if (v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size()) {
    throw TapeError("variable id out of range");
  }
  return v.id_;
}

Var Tape::push(Node node) {
  if (backward_done_) throw TapeError("cannot record after backward()");
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::variable(Eigen::MatrixXd value) {
  Node n;
  n.kind = OpKind::leaf;
  n.needs_grad = true;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(Eigen::MatrixXd value) {
  Node n;
  n.kind = OpKind::leaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::jet_affine(Var W, Var b, Var X, const JetLayout& layout) {
  const int iw = index_of(W), ib = index_of(b), ix = index_of(X);
  const auto& w = nodes_[iw].value;
  const auto& bias = nodes_[ib].value;
  const auto& x = nodes_[ix].value;
  if (bias.cols() != 1 || bias.rows() != w.rows()) throw TapeError("jet_affine: bias shape mismatch");
  if (x.rows() != w.cols() || x.cols() != layout.columns()) throw TapeError("jet_affine: input shape mismatch");
  Node n;
  n.kind = OpKind::jet_affine;
  n.in0 = iw;
  n.in1 = ib;
  n.in2 = ix;
  n.layout = layout;
  n.needs_grad = nodes_[iw].needs_grad || nodes_[ib].needs_grad || nodes_[ix].needs_grad;
  kernels::jet_affine(w, bias.col(0), x, layout, n.value);
  return push(std::move(n));
}

Var Tape::jet_tanh(Var X, const JetLayout& layout) {
  const int ix = index_of(X);
  if (nodes_[ix].value.cols() != layout.columns()) throw TapeError("jet_tanh: layout mismatch");
  Node n;
  n.kind = OpKind::jet_tanh;
  n.in0 = ix;
  n.layout = layout;
  n.needs_grad = nodes_[ix].needs_grad;
  kernels::jet_tanh(nodes_[ix].value, layout, n.value);
  return push(std::move(n));
}

Var Tape::jet_part(Var X, const JetLayout& layout, Eigen::Index row, JetPart part) {
  const int ix = index_of(X);
  const auto& x = nodes_[ix].value;
  if (x.cols() != layout.columns()) throw TapeError("jet_part: layout mismatch");
  if (!layout.has(part)) throw TapeError("jet_part: requested part is not carried by this layout");
  if (row < 0 || row >= x.rows()) throw TapeError("jet_part: row out of range");
  Node n;
  n.kind = OpKind::jet_part;
  n.in0 = ix;
  n.layout = layout;
  n.row = row;
  n.part = part;
  n.needs_grad = nodes_[ix].needs_grad;
  n.value = x.row(row).segment(layout.offset(part), layout.batch());
  return push(std::move(n));
}

Var Tape::axpby(double a, Var x, double b, Var y) {
  const int ix = index_of(x), iy = index_of(y);
  const auto& xv = nodes_[ix].value;
  const auto& yv = nodes_[iy].value;
  if (xv.rows() != yv.rows() || xv.cols() != yv.cols()) throw TapeError("axpby: shape mismatch");
  Node n;
  n.kind = OpKind::axpby;
  n.in0 = ix;
  n.in1 = iy;
  n.a = a;
  n.b = b;
  n.needs_grad = nodes_[ix].needs_grad || nodes_[iy].needs_grad;
  n.value = a * xv + b * yv;
  return push(std::move(n));
}

Var Tape::scale(double a, Var x) {
  const int ix = index_of(x);
  Node n;
  n.kind = OpKind::scale;
  n.in0 = ix;
  n.a = a;
  n.needs_grad = nodes_[ix].needs_grad;
  n.value = a * nodes_[ix].value;
  return push(std::move(n));
}

Var Tape::mul(Var x, Var y) {
  const int ix = index_of(x), iy = index_of(y);
  const auto& xv = nodes_[ix].value;
  const auto& yv = nodes_[iy].value;
  Node n;
  n.kind = OpKind::mul;
  n.in0 = ix;
  n.in1 = iy;
  n.needs_grad = nodes_[ix].needs_grad || nodes_[iy].needs_grad;
  if (xv.size() == 1) {
    n.value = xv(0, 0) * yv;
  } else if (yv.size() == 1) {
    n.value = yv(0, 0) * xv;
  } else if (xv.rows() == yv.rows() && xv.cols() == yv.cols()) {
    n.value = xv.cwiseProduct(yv);
  } else {
    throw TapeError("mul: shape mismatch");
  }
  return push(std::move(n));
}

Var Tape::add_constant(Var x, const Eigen::MatrixXd& c) {
  const int ix = index_of(x);
  const auto& xv = nodes_[ix].value;
  if (xv.rows() != c.rows() || xv.cols() != c.cols()) throw TapeError("add_constant: shape mismatch");
  Node n;
  n.kind = OpKind::add_constant;
  n.in0 = ix;
  n.needs_grad = nodes_[ix].needs_grad;
  n.value = xv + c;
  return push(std::move(n));
}

Var Tape::mean_square(Var x) {
  const int ix = index_of(x);
  const auto& xv = nodes_[ix].value;
  if (xv.size() == 0) throw TapeError("mean_square of an empty node");
  Node n;
  n.kind = OpKind::mean_square;
  n.in0 = ix;
  n.needs_grad = nodes_[ix].needs_grad;
  n.value = Eigen::MatrixXd::Constant(1, 1, xv.squaredNorm() / static_cast<double>(xv.size()));
  return push(std::move(n));
}

Var Tape::exp(Var x) {
  const int ix = index_of(x);
  Node n;
  n.kind = OpKind::exp;
  n.in0 = ix;
  n.needs_grad = nodes_[ix].needs_grad;
  n.value = nodes_[ix].value.array().exp().matrix();
  return push(std::move(n));
}

Var Tape::sum(std::span<const Var> terms, std::span<const double> weights) {
  if (terms.size() != weights.size()) throw TapeError("sum: terms and weights differ in length");
  Node n;
  n.kind = OpKind::sum;
  double total = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const int id = index_of(terms[k]);
    if (nodes_[id].value.size() != 1) throw TapeError("sum: terms must be scalars");
    total += weights[k] * nodes_[id].value(0, 0);
    n.inputs.push_back(id);
    n.weights.push_back(weights[k]);
    n.needs_grad = n.needs_grad || nodes_[id].needs_grad;
  }
  n.value = Eigen::MatrixXd::Constant(1, 1, total);
  return push(std::move(n));
}

const Eigen::MatrixXd& Tape::value(Var v) const { return nodes_[index_of(v)].value; }

double Tape::scalar(Var v) const {
  const auto& m = value(v);
  if (m.size() != 1) throw TapeError("scalar(): node is not 1x1");
  return m(0, 0);
}

const Eigen::MatrixXd& Tape::grad(Var v) const {
  if (!backward_done_) throw TapeError("grad() before backward()");
  const auto& n = nodes_[index_of(v)];
  if (n.adjoint.size() == 0) {
    // Lazily sized zero adjoint for nodes the root does not depend on.
    auto& mutable_node = const_cast<Node&>(n);
    mutable_node.adjoint = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
  }
  return n.adjoint;
}

Eigen::MatrixXd& Tape::adjoint_of(int id) {
  auto& n = nodes_[id];
  if (n.adjoint.size() == 0) n.adjoint = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
  return n.adjoint;
}

void Tape::backward(Var root) {
  const int ir = index_of(root);
  if (backward_done_) throw TapeError("backward() may run once per tape");
  if (nodes_[ir].value.size() != 1) throw TapeError("backward() requires a scalar root");
  backward_done_ = true;
  adjoint_of(ir)(0, 0) = 1.0;
  for (int i = ir; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (!n.needs_grad || n.adjoint.size() == 0 || n.kind == OpKind::leaf) continue;
    backprop(n);
  }
}

void Tape::backprop(const Node& n) {
  const Eigen::MatrixXd& g = n.adjoint;
  switch (n.kind) {
    case OpKind::leaf:
      return;
    case OpKind::jet_affine: {
      const auto& W = nodes_[n.in0].value;
      const auto& X = nodes_[n.in2].value;
      const Eigen::Index B = n.layout.batch();
      if (nodes_[n.in0].needs_grad) adjoint_of(n.in0).noalias() += g * X.transpose();
      if (nodes_[n.in1].needs_grad) adjoint_of(n.in1).col(0) += g.leftCols(B).rowwise().sum();
      if (nodes_[n.in2].needs_grad) adjoint_of(n.in2).noalias() += W.transpose() * g;
      return;
    }
    case OpKind::jet_tanh: {
      if (!nodes_[n.in0].needs_grad) return;
      kernels::jet_tanh_backward(nodes_[n.in0].value, n.value, g, n.layout, adjoint_of(n.in0));
      return;
    }
    case OpKind::jet_part: {
      if (!nodes_[n.in0].needs_grad) return;
      adjoint_of(n.in0).row(n.row).segment(n.layout.offset(n.part), n.layout.batch()) += g;
      return;
    }
    case OpKind::axpby:
      if (nodes_[n.in0].needs_grad) adjoint_of(n.in0) += n.a * g;
      if (nodes_[n.in1].needs_grad) adjoint_of(n.in1) += n.b * g;
      return;
    case OpKind::scale:
      if (nodes_[n.in0].needs_grad) adjoint_of(n.in0) += n.a * g;
      return;
    case OpKind::mul: {
      const auto& x = nodes_[n.in0].value;
      const auto& y = nodes_[n.in1].value;
      if (x.size() == 1 && y.size() != 1) {
        if (nodes_[n.in0].needs_grad) adjoint_of(n.in0)(0, 0) += g.cwiseProduct(y).sum();
        if (nodes_[n.in1].needs_grad) adjoint_of(n.in1) += x(0, 0) * g;
      } else if (y.size() == 1 && x.size() != 1) {
        if (nodes_[n.in0].needs_grad) adjoint_of(n.in0) += y(0, 0) * g;
        if (nodes_[n.in1].needs_grad) adjoint_of(n.in1)(0, 0) += g.cwiseProduct(x).sum();
      } else {
        if (nodes_[n.in0].needs_grad) adjoint_of(n.in0) += g.cwiseProduct(y);
        if (nodes_[n.in1].needs_grad) adjoint_of(n.in1) += g.cwiseProduct(x);
      }
      return;
    }
    case OpKind::add_constant:
      if (nodes_[n.in0].needs_grad) adjoint_of(n.in0) += g;
      return;
    case OpKind::mean_square: {
      if (!nodes_[n.in0].needs_grad) return;
      const auto& x = nodes_[n.in0].value;
      adjoint_of(n.in0) += (2.0 * g(0, 0) / static_cast<double>(x.size())) * x;
      return;
    }
    case OpKind::exp:
      if (nodes_[n.in0].needs_grad) adjoint_of(n.in0) += g.cwiseProduct(n.value);
      return;
    case OpKind::sum:
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        if (nodes_[n.inputs[k]].needs_grad) adjoint_of(n.inputs[k])(0, 0) += n.weights[k] * g(0, 0);
      }
      return;
  }
  throw TapeError(std::string("unsupported operation on tape: ") + op_name(n.kind));
}

}  // namespace lbc::ad
