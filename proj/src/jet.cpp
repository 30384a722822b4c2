#include "lbc/jet.hpp"

#include "lbc/errors.hpp"

namespace lbc {

JetLayout::JetLayout(Eigen::Index batch, bool dz, bool dzz, bool dt) : batch_(batch) {
  if (dzz && !dz) throw ShapeError("jet layout: dzz requires dz");
  const std::array<bool, 4> active{true, dz, dzz, dt};
  for (int k = 0; k < 4; ++k) {
    if (active[k]) offset_[k] = static_cast<Eigen::Index>(parts_++) * batch;
  }
}

Eigen::MatrixXd seed_inputs(const Eigen::VectorXd& zbar, const Eigen::VectorXd& tbar,
                            const JetLayout& layout) {
  const Eigen::Index B = layout.batch();
  if (zbar.size() != B || tbar.size() != B) throw ShapeError("seed_inputs: batch size mismatch");
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, layout.columns());
  X.row(0).segment(0, B) = zbar.transpose();
  X.row(1).segment(0, B) = tbar.transpose();
  if (layout.has(JetPart::dz)) X.row(0).segment(layout.offset(JetPart::dz), B).setOnes();
  if (layout.has(JetPart::dt)) X.row(1).segment(layout.offset(JetPart::dt), B).setOnes();
  return X;
}

namespace kernels {

void jet_affine(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const Eigen::MatrixXd& X,
                const JetLayout& layout, Eigen::MatrixXd& Y) {
  const Eigen::Index B = layout.batch();
  Y.resize(W.rows(), layout.columns());
  // One product per part block, so the value block is computed identically
  // whatever other parts ride along.
  for (int k = 0; k < layout.parts(); ++k) {
    Y.middleCols(k * B, B).noalias() = W * X.middleCols(k * B, B);
  }
  Y.leftCols(B).colwise() += b;
}

namespace {

// tanh through the vectorized exp; |x| is clamped where tanh is 1 to double precision.
void tanh_into(const double* x, double* y, Eigen::Index n) {
  Eigen::Map<const Eigen::ArrayXd> xs(x, n);
  Eigen::Map<Eigen::ArrayXd> ys(y, n);
  ys = (-2.0 * xs.abs().min(20.0)).exp();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = y[i];
    const double t = (1.0 - e) / (1.0 + e);
    y[i] = x[i] < 0.0 ? -t : t;
  }
}

}  // namespace

void jet_tanh(const Eigen::MatrixXd& X, const JetLayout& layout, Eigen::MatrixXd& Y) {
  const Eigen::Index n = X.rows() * layout.batch();
  Y.resize(X.rows(), X.cols());
  const double* x = X.data();
  double* y = Y.data();
  tanh_into(x, y, n);
  if (layout.parts() == 1) return;
  const Eigen::Index oz = layout.has(JetPart::dz) ? layout.offset(JetPart::dz) * X.rows() : -1;
  const Eigen::Index ozz = layout.has(JetPart::dzz) ? layout.offset(JetPart::dzz) * X.rows() : -1;
  const Eigen::Index ot = layout.has(JetPart::dt) ? layout.offset(JetPart::dt) * X.rows() : -1;
  if (oz >= 0 && ozz >= 0 && ot >= 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double th = y[i], s = 1.0 - th * th, dz = x[oz + i];
      y[oz + i] = s * dz;
      y[ozz + i] = s * x[ozz + i] - 2.0 * th * s * dz * dz;
      y[ot + i] = s * x[ot + i];
    }
    return;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double th = y[i], s = 1.0 - th * th;
    if (oz >= 0) {
      const double dz = x[oz + i];
      y[oz + i] = s * dz;
      if (ozz >= 0) y[ozz + i] = s * x[ozz + i] - 2.0 * th * s * dz * dz;
    }
    if (ot >= 0) y[ot + i] = s * x[ot + i];
  }
}

void jet_tanh_backward(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& gY,
                       const JetLayout& layout, Eigen::MatrixXd& gX) {
  const Eigen::Index n = X.rows() * layout.batch();
  if (gX.rows() != X.rows() || gX.cols() != X.cols()) gX = Eigen::MatrixXd::Zero(X.rows(), X.cols());
  const double* x = X.data();
  const double* y = Y.data();
  const double* g = gY.data();
  double* gx = gX.data();
  const Eigen::Index oz = layout.has(JetPart::dz) ? layout.offset(JetPart::dz) * X.rows() : -1;
  const Eigen::Index ozz = layout.has(JetPart::dzz) ? layout.offset(JetPart::dzz) * X.rows() : -1;
  const Eigen::Index ot = layout.has(JetPart::dt) ? layout.offset(JetPart::dt) * X.rows() : -1;
  // s = 1 - th^2, ds/dv = -2 th s, d(th s)/dv = s^2 + th ds.
  if (oz >= 0 && ozz >= 0 && ot >= 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double th = y[i], s = 1.0 - th * th, ds = -2.0 * th * s;
      const double dz = x[oz + i], dzz = x[ozz + i], dt = x[ot + i];
      const double gz = g[oz + i], gzz = g[ozz + i], gt = g[ot + i];
      gx[i] += g[i] * s + gz * ds * dz + gzz * (ds * dzz - 2.0 * dz * dz * (s * s + th * ds)) + gt * ds * dt;
      gx[oz + i] += gz * s - 4.0 * gzz * th * s * dz;
      gx[ozz + i] += gzz * s;
      gx[ot + i] += gt * s;
    }
    return;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double th = y[i], s = 1.0 - th * th, ds = -2.0 * th * s;
    double gv = g[i] * s;
    if (oz >= 0) {
      const double dz = x[oz + i], gz = g[oz + i];
      gv += gz * ds * dz;
      double gdz = gz * s;
      if (ozz >= 0) {
        const double gzz = g[ozz + i];
        gv += gzz * (ds * x[ozz + i] - 2.0 * dz * dz * (s * s + th * ds));
        gdz -= 4.0 * gzz * th * s * dz;
        gx[ozz + i] += gzz * s;
      }
      gx[oz + i] += gdz;
    }
    if (ot >= 0) {
      gv += g[ot + i] * ds * x[ot + i];
      gx[ot + i] += g[ot + i] * s;
    }
    gx[i] += gv;
  }
}

}  // namespace kernels

}  // namespace lbc
