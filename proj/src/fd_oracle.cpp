#include "lbc/fd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <vector>

#include "lbc/csv.hpp"
#include "lbc/errors.hpp"

namespace lbc {

namespace {

using Eigen::Matrix2d;
using Eigen::Vector2d;

// Builds the internal step schedule: a short backward-Euler start to t_lo, then a
// geometric ladder with `steps_per_decade` steps per decade, merged with the output times.
std::vector<double> step_schedule(const GridSpec& gs, const Eigen::VectorXd& outputs) {
  const double t_lo = gs.tmin * 1e-4;
  std::vector<double> times;
  times.push_back(t_lo);
  const double ratio = std::pow(10.0, 1.0 / gs.steps_per_decade);
  for (double t = t_lo * ratio; t < gs.tmax; t *= ratio) times.push_back(t);
  for (Eigen::Index j = 0; j < outputs.size(); ++j) times.push_back(outputs[j]);
  std::sort(times.begin(), times.end());
  std::vector<double> merged;
  for (double t : times) {
    if (!merged.empty() && t - merged.back() <= 1e-12 * t) {
      merged.back() = std::max(merged.back(), t);
      continue;
    }
    merged.push_back(t);
  }
  // Output times must survive deduplication exactly.
  for (Eigen::Index j = 0; j < outputs.size(); ++j) {
    auto it = std::lower_bound(merged.begin(), merged.end(), outputs[j] * (1.0 - 1e-12));
    if (it != merged.end()) *it = outputs[j];
  }
  return merged;
}

// Scalar Thomas solve of (I - theta*dt*c*L) x = rhs with L the drained/impermeable Laplacian.
// Node 0 is pinned to zero.
void solve_scalar(double coeff, double dt, double theta, double h, Eigen::VectorXd& x, int step,
                  std::vector<double>& cprime) {
  const Eigen::Index n = x.size();
  const double r = theta * dt * coeff / (h * h);
  // Unknowns 1..n-1. Row i: -r x_{i-1} + (1+2r) x_i - r x_{i+1}; last row: -2r x_{n-2} + (1+2r) x_{n-1}.
  cprime.assign(static_cast<size_t>(n), 0.0);
  x[0] = 0.0;
  double prev_c = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double lower = (i == 1) ? 0.0 : (i == n - 1 ? -2.0 * r : -r);
    const double upper = (i == n - 1) ? 0.0 : -r;
    const double diag = 1.0 + 2.0 * r - lower * prev_c;
    if (!(std::abs(diag) > 1e-300) || !std::isfinite(diag)) {
      throw NumericalError("tridiagonal breakdown at step " + std::to_string(step));
    }
    prev_c = upper / diag;
    cprime[static_cast<size_t>(i)] = prev_c;
    x[i] = (x[i] - lower * x[i - 1]) / diag;
  }
  for (Eigen::Index i = n - 2; i >= 1; --i) x[i] -= cprime[static_cast<size_t>(i)] * x[i + 1];
}

// Applies (I + alpha*dt*c*L) to x in place (alpha = 1 - theta).
void apply_explicit_scalar(double coeff, double dt, double alpha, double h, Eigen::VectorXd& x,
                           Eigen::VectorXd& work) {
  const Eigen::Index n = x.size();
  const double r = alpha * dt * coeff / (h * h);
  work = x;
  work[0] = 0.0;
  for (Eigen::Index i = 1; i < n - 1; ++i) {
    x[i] = work[i] + r * (work[i - 1] - 2.0 * work[i] + work[i + 1]);
  }
  x[n - 1] = work[n - 1] + r * 2.0 * (work[n - 2] - work[n - 1]);
  x[0] = 0.0;
}

class DecoupledStepper {
 public:
  DecoupledStepper(const Matrix2d& V, const Vector2d& lambda, double h, Eigen::Index nz)
      : V_(V), Vinv_(V.inverse()), lambda_(lambda), h_(h), w_(2, Eigen::VectorXd::Zero(nz)) {}

  void set_state(const Eigen::VectorXd& ua, const Eigen::VectorXd& uw) {
    for (Eigen::Index i = 0; i < ua.size(); ++i) {
      const Vector2d w = Vinv_ * Vector2d(ua[i], uw[i]);
      w_[0][i] = w[0];
      w_[1][i] = w[1];
    }
  }

  void step(double dt, double theta, int index) {
    for (int k = 0; k < 2; ++k) {
      if (theta < 1.0) apply_explicit_scalar(lambda_[k], dt, 1.0 - theta, h_, w_[k], work_);
      solve_scalar(lambda_[k], dt, theta, h_, w_[k], index, cprime_);
    }
  }

  void read_state(Eigen::Ref<Eigen::VectorXd> ua, Eigen::Ref<Eigen::VectorXd> uw) const {
    for (Eigen::Index i = 0; i < ua.size(); ++i) {
      const Vector2d u = V_ * Vector2d(w_[0][i], w_[1][i]);
      ua[i] = u[0];
      uw[i] = u[1];
    }
    ua[0] = 0.0;
    uw[0] = 0.0;
  }

 private:
  Matrix2d V_;
  Matrix2d Vinv_;
  Vector2d lambda_;
  double h_;
  std::vector<Eigen::VectorXd> w_;
  Eigen::VectorXd work_;
  std::vector<double> cprime_;
};

class BlockStepper {
 public:
  BlockStepper(const Matrix2d& A, double h, Eigen::Index nz)
      : A_(A), h_(h), u_(nz), rhs_(nz), cprime_(nz) {}

  void set_state(const Eigen::VectorXd& ua, const Eigen::VectorXd& uw) {
    for (Eigen::Index i = 0; i < ua.size(); ++i) u_[i] = Vector2d(ua[i], uw[i]);
  }

  void step(double dt, double theta, int index) {
    const Eigen::Index n = static_cast<Eigen::Index>(u_.size());
    const Matrix2d Re = (1.0 - theta) * dt / (h_ * h_) * A_;
    const Matrix2d Ri = theta * dt / (h_ * h_) * A_;
    const Matrix2d I = Matrix2d::Identity();
    rhs_[0].setZero();
    for (Eigen::Index i = 1; i < n - 1; ++i) {
      rhs_[i] = u_[i] + Re * (u_[i - 1] - 2.0 * u_[i] + u_[i + 1]);
    }
    rhs_[n - 1] = u_[n - 1] + Re * (2.0 * (u_[n - 2] - u_[n - 1]));
    rhs_[0].setZero();

    // Block Thomas on unknowns 1..n-1: lower*x_{i-1} + diag*x_i + upper*x_{i+1} = rhs_i.
    const Matrix2d diag = I + 2.0 * Ri;
    Vector2d prev_d = Vector2d::Zero();
    Matrix2d prev_c = Matrix2d::Zero();
    for (Eigen::Index i = 1; i < n; ++i) {
      const Matrix2d lower = (i == 1) ? Matrix2d::Zero() : Matrix2d((i == n - 1 ? -2.0 : -1.0) * Ri);
      const Matrix2d upper = (i == n - 1) ? Matrix2d::Zero() : Matrix2d(-Ri);
      const Matrix2d pivot = diag - lower * prev_c;
      const double det = pivot.determinant();
      if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) {
        throw NumericalError("block-tridiagonal breakdown at step " + std::to_string(index));
      }
      const Matrix2d pivot_inv = pivot.inverse();
      prev_c = pivot_inv * upper;
      cprime_[i] = prev_c;
      prev_d = pivot_inv * (rhs_[i] - lower * prev_d);
      u_[i] = prev_d;
    }
    for (Eigen::Index i = n - 2; i >= 1; --i) u_[i] -= cprime_[i] * u_[i + 1];
    u_[0].setZero();
  }

  void read_state(Eigen::Ref<Eigen::VectorXd> ua, Eigen::Ref<Eigen::VectorXd> uw) const {
    for (Eigen::Index i = 0; i < ua.size(); ++i) {
      ua[i] = u_[static_cast<size_t>(i)][0];
      uw[i] = u_[static_cast<size_t>(i)][1];
    }
  }

 private:
  Matrix2d A_;
  double h_;
  std::vector<Vector2d> u_;
  std::vector<Vector2d> rhs_;
  std::vector<Matrix2d> cprime_;
};

template <typename Stepper>
void march(Stepper& stepper, const GridSpec& gs, const Eigen::VectorXd& outputs, SolutionGrid& out) {
  const auto schedule = step_schedule(gs, outputs);
  constexpr int kStartupSteps = 4;  // backward Euler damps the corner discontinuity
  double t = 0.0;
  int index = 0;
  for (int k = 1; k <= kStartupSteps; ++k) {
    const double next = schedule.front() * k / kStartupSteps;
    stepper.step(next - t, 1.0, index++);
    t = next;
  }
  Eigen::Index j = 0;
  for (size_t s = 0; s < schedule.size(); ++s) {
    const double next = schedule[s];
    if (next > t) {
      stepper.step(next - t, s == 0 ? 1.0 : 0.5, index++);
      t = next;
    }
    while (j < outputs.size() && outputs[j] <= t) {
      stepper.read_state(out.ua.col(j), out.uw.col(j));
      ++j;
    }
  }
  if (j != outputs.size()) throw NumericalError("output times beyond the step schedule");
  if (!out.ua.allFinite() || !out.uw.allFinite()) {
    throw NumericalError("non-finite pressures in finite-difference solve");
  }
}

}  // namespace

void GridSpec::validate() const {
  if (nz < 3) throw ParameterError("GridSpec.nz must be at least 3");
  if (nt < 2) throw ParameterError("GridSpec.nt must be at least 2");
  if (!(tmin > 0.0 && tmin < tmax)) throw ParameterError("GridSpec requires 0 < tmin < tmax");
  if (steps_per_decade < 4) throw ParameterError("GridSpec.steps_per_decade must be at least 4");
}

Eigen::VectorXd output_times(const GridSpec& gs) {
  gs.validate();
  Eigen::VectorXd t(gs.nt);
  for (int j = 0; j < gs.nt; ++j) {
    const double f = static_cast<double>(j) / (gs.nt - 1);
    t[j] = gs.log_time ? std::pow(10.0, std::log10(gs.tmin) + f * (std::log10(gs.tmax) - std::log10(gs.tmin)))
                       : gs.tmin + f * (gs.tmax - gs.tmin);
  }
  t[0] = gs.tmin;
  t[gs.nt - 1] = gs.tmax;
  return t;
}

SolutionGrid solve_coupled_fd(const SoilModel& sm, const GridSpec& gs, CouplingSolve method) {
  sm.validate();
  gs.validate();
  const auto report = validate_coupling(sm);
  if (!report.dissipative) {
    throw WellPosednessError("coupled system is not dissipative: eigenvalues of M^-1 D must be positive");
  }

  SolutionGrid out;
  out.log_time = gs.log_time;
  out.z = Eigen::VectorXd::LinSpaced(gs.nz, 0.0, sm.H);
  out.t = output_times(gs);
  out.ua = Eigen::MatrixXd::Zero(gs.nz, gs.nt);
  out.uw = Eigen::MatrixXd::Zero(gs.nz, gs.nt);

  const double h = sm.H / (gs.nz - 1);
  Eigen::VectorXd ua0 = Eigen::VectorXd::Constant(gs.nz, sm.ua0);
  Eigen::VectorXd uw0 = Eigen::VectorXd::Constant(gs.nz, sm.uw0);
  ua0[0] = 0.0;
  uw0[0] = 0.0;

  const auto a = diffusion_matrix(sm);
  Matrix2d A;
  A << a[0], a[1], a[2], a[3];

  if (method != CouplingSolve::block) {
    const Vector2d lambda(report.eigenvalues[0].real(), report.eigenvalues[1].real());
    Matrix2d V;
    for (int k = 0; k < 2; ++k) {
      // Null vector of A - lambda I from whichever row is better scaled.
      const double r0 = std::hypot(a[0] - lambda[k], a[1]);
      const double r1 = std::hypot(a[2], a[3] - lambda[k]);
      Vector2d v = (r0 >= r1) ? Vector2d(-a[1], a[0] - lambda[k]) : Vector2d(a[3] - lambda[k], -a[2]);
      if (v.norm() == 0.0) v = (k == 0) ? Vector2d(1.0, 0.0) : Vector2d(0.0, 1.0);
      V.col(k) = v.normalized();
    }
    const Eigen::JacobiSVD<Matrix2d> svd(V);
    const double cond = svd.singularValues()[0] / std::max(svd.singularValues()[1], 1e-300);
    if (cond < 1e8) {
      DecoupledStepper stepper(V, lambda, h, gs.nz);
      stepper.set_state(ua0, uw0);
      march(stepper, gs, out.t, out);
      return out;
    }
    if (method == CouplingSolve::decoupled) {
      throw NumericalError("M^-1 D is (nearly) defective; decoupled solve unavailable");
    }
  }
  BlockStepper stepper(A, h, gs.nz);
  stepper.set_state(ua0, uw0);
  march(stepper, gs, out.t, out);
  return out;
}

double terzaghi_series(double cv, double H, double u0, double z, double t, int nterms) {
  double sum = 0.0;
  const double tv = cv * t / (H * H);
  for (int m = 0; m < nterms; ++m) {
    const double M = (2.0 * m + 1.0) * std::numbers::pi / 2.0;
    sum += 2.0 * u0 / M * std::sin(M * z / H) * std::exp(-M * M * tv);
  }
  return sum;
}

namespace {

// Index i with x[i] <= q <= x[i+1] and the fractional position within that cell.
std::pair<Eigen::Index, double> locate(const Eigen::VectorXd& x, double q, bool logscale) {
  const Eigen::Index n = x.size();
  const auto* begin = x.data();
  const auto* it = std::upper_bound(begin, begin + n, q);
  Eigen::Index i = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(it - begin) - 1, 0, n - 2);
  const double lo = logscale ? std::log10(x[i]) : x[i];
  const double hi = logscale ? std::log10(x[i + 1]) : x[i + 1];
  const double v = logscale ? std::log10(q) : q;
  double frac = (v - lo) / (hi - lo);
  frac = std::clamp(frac, 0.0, 1.0);
  return {i, frac};
}

}  // namespace

std::pair<double, double> sample_solution(const SolutionGrid& g, double z, double t) {
  const auto nz = g.z.size();
  const auto nt = g.t.size();
  if (nz < 2 || nt < 2) throw RangeError("solution grid too small to interpolate");
  const double zlo = g.z[0], zhi = g.z[nz - 1];
  const double tlo = g.t[0], thi = g.t[nt - 1];
  const double ztol = 1e-12 * std::max(1.0, std::abs(zhi));
  const double ttol = 1e-12 * std::abs(thi);
  if (!(z >= zlo - ztol && z <= zhi + ztol)) throw RangeError("depth " + std::to_string(z) + " outside grid");
  if (!(t >= tlo - ttol && t <= thi + ttol)) throw RangeError("time " + std::to_string(t) + " outside grid");
  z = std::clamp(z, zlo, zhi);
  t = std::clamp(t, tlo, thi);

  const auto [i, fz] = locate(g.z, z, false);
  const auto [j, ft] = locate(g.t, t, g.log_time);
  auto bilinear = [&](const Eigen::MatrixXd& m) {
    const double a = m(i, j) * (1.0 - fz) + m(i + 1, j) * fz;
    const double b = m(i, j + 1) * (1.0 - fz) + m(i + 1, j + 1) * fz;
    if (ft == 0.0) return a;
    if (ft == 1.0) return b;
    return a * (1.0 - ft) + b * ft;
  };
  if (fz == 0.0 && ft == 0.0) return {g.ua(i, j), g.uw(i, j)};
  return {bilinear(g.ua), bilinear(g.uw)};
}

void write_solution_csv(const SolutionGrid& g, std::ostream& os) {
  os << "z,t,ua,uw\n";
  for (Eigen::Index j = 0; j < g.t.size(); ++j) {
    for (Eigen::Index i = 0; i < g.z.size(); ++i) {
      os << csv::fmt(g.z[i]) << ',' << csv::fmt(g.t[j]) << ',' << csv::fmt(g.ua(i, j)) << ','
         << csv::fmt(g.uw(i, j)) << '\n';
    }
  }
}

void write_solution_csv(const SolutionGrid& g, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_solution_csv(g, os);
}

}  // namespace lbc
