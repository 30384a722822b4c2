#pragma once

#include <array>
#include <complex>

namespace lbc {

inline constexpr double kGravity = 9.81;  // m/s^2, used by the gas-law factor of cva

/// Constitutive constants of an unsaturated soil (Fredlund-Hasan model).
/// Pressures in kPa, permeabilities in m/s, gammaw in kN/m^3.
struct ConstitutiveParameters {
  double m1a = 0.0;
  double m2a = 0.0;
  double m1w = 0.0;
  double m2w = 0.0;
  double n = 0.5;     // porosity
  double Sr = 0.8;    // degree of saturation, fraction
  double ka = 1e-10;
  double kw = 1e-10;
  double ua0 = 20.0;
  double uw0 = 40.0;
  double uatm = 101.325;
  double R = 8.314;       // J/mol/K
  double T = 293.15;      // K
  double M = 0.029;       // kg/mol
  double gammaw = 9.8;    // kN/m^3
};

/// Layer geometry, interactive constants and consolidation coefficients.
///
/// Governing system (dissipative form): M u_t = D u_zz with
/// M = [[1, Ca], [Cw, 1]] and D = diag(cva, cvw), u = (ua, uw).
struct SoilModel {
  double H = 10.0;
  double Ca = 0.0;
  double Cw = 0.0;
  double cva = 0.0;  // m^2/s
  double cvw = 0.0;  // m^2/s
  double ua0 = 0.0;  // kPa
  double uw0 = 0.0;  // kPa

  /// Throws ParameterError (or SingularCouplingError) if a field invariant fails.
  void validate() const;

  double determinant() const noexcept { return 1.0 - Ca * Cw; }
};

/// The forward problem used throughout: H = 10 m, ka = kw = 1e-10 m/s.
SoilModel table1_soil();

struct WellPosednessReport {
  double determinant = 0.0;
  std::array<std::complex<double>, 2> eigenvalues{};
  bool dissipative = false;
};

SoilModel derive_coefficients(const ConstitutiveParameters& cp, double H);

WellPosednessReport validate_coupling(const SoilModel& sm);

/// Effective diffusion matrix M^{-1} D, row-major {a00, a01, a10, a11}.
std::array<double, 4> diffusion_matrix(const SoilModel& sm);

/// H^2 / cva floored to a power of ten.
double characteristic_air_time(const SoilModel& sm);

/// Largest power of ten not exceeding x (x > 0).
double floor_to_decade(double x);

}  // namespace lbc
