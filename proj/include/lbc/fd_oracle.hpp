#pragma once

#include <iosfwd>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lbc/physics.hpp"

namespace lbc {

struct GridSpec {
  int nz = 101;
  double tmin = 1.0;
  double tmax = 1e10;
  int nt = 200;
  bool log_time = true;
  int steps_per_decade = 100;

  void validate() const;
};

/// Output times requested by a GridSpec (log- or linearly spaced, both ends included).
Eigen::VectorXd output_times(const GridSpec& gs);

/// Tabulated pressures; ua(i, j) is the value at depth z[i] and time t[j].
struct SolutionGrid {
  Eigen::VectorXd z;
  Eigen::VectorXd t;
  Eigen::MatrixXd ua;
  Eigen::MatrixXd uw;
  bool log_time = true;
};

/// How the 2x2 coupling is handled inside each Crank-Nicolson step.
enum class CouplingSolve {
  automatic,  // decoupled eigenbasis when well conditioned, block otherwise
  decoupled,  // two scalar tridiagonal systems in the eigenbasis of M^{-1}D
  block,      // 2x2 block-tridiagonal elimination on (ua, uw) directly
};

/// Crank-Nicolson solution of M u_t = D u_zz, drained at z = 0, impermeable at z = H.
SolutionGrid solve_coupled_fd(const SoilModel& sm, const GridSpec& gs,
                              CouplingSolve method = CouplingSolve::automatic);

/// Decoupled one-way-drainage Terzaghi series, drained face at z = 0.
double terzaghi_series(double cv, double H, double u0, double z, double t, int nterms);

/// Bilinear lookup; linear in log10(t) when the grid is log-spaced.
std::pair<double, double> sample_solution(const SolutionGrid& g, double z, double t);

/// `z,t,ua,uw` rows with 17 significant digits.
void write_solution_csv(const SolutionGrid& g, std::ostream& os);
void write_solution_csv(const SolutionGrid& g, const std::string& path);

}  // namespace lbc
