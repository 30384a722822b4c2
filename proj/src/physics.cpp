#include "lbc/physics.hpp"

#include <cmath>
#include <string>

#include "lbc/errors.hpp"

namespace lbc {

namespace {

void require_nonzero(double value, const char* name) {
  if (value == 0.0 || !std::isfinite(value)) {
    throw ParameterError(std::string("division by zero: ") + name + " must be finite and nonzero");
  }
}

}  // namespace

void SoilModel::validate() const {
  if (!(H > 0.0) || !std::isfinite(H)) throw ParameterError("H must be positive");
  require_nonzero(cva, "cva");
  require_nonzero(cvw, "cvw");
  if (!(ua0 >= 0.0)) throw ParameterError("ua0 must be nonnegative");
  if (!(uw0 >= 0.0)) throw ParameterError("uw0 must be nonnegative");
  if (!std::isfinite(Ca) || !std::isfinite(Cw)) throw ParameterError("Ca and Cw must be finite");
  if (std::abs(determinant()) < 1e-12) {
    throw SingularCouplingError("1 - Ca*Cw vanishes (Ca=" + std::to_string(Ca) +
                                ", Cw=" + std::to_string(Cw) + ")");
  }
}

SoilModel table1_soil() {
  SoilModel sm;
  sm.H = 10.0;
  sm.Ca = 0.0882;
  sm.Cw = 0.75;
  sm.cva = 6.3e-6;
  sm.cvw = 6.3e-8;
  sm.ua0 = 20.0;
  sm.uw0 = 40.0;
  return sm;
}

SoilModel derive_coefficients(const ConstitutiveParameters& cp, double H) {
  if (!(cp.n > 0.0 && cp.n < 1.0)) throw ParameterError("n must lie in (0, 1)");
  if (!(cp.Sr >= 0.0 && cp.Sr <= 1.0)) throw ParameterError("Sr must lie in [0, 1]");
  if (!(cp.ka > 0.0)) throw ParameterError("ka must be positive");
  if (!(cp.kw > 0.0)) throw ParameterError("kw must be positive");
  if (!(cp.gammaw > 0.0)) throw ParameterError("gammaw must be positive");
  if (!(cp.ua0 + cp.uatm > 0.0)) throw ParameterError("ua0 + uatm must be positive");
  require_nonzero(cp.m2a, "m2a");
  require_nonzero(cp.m2w, "m2w");
  require_nonzero(cp.M, "M");

  const double abs_air = cp.ua0 + cp.uatm;
  const double air_ratio = cp.m1a / cp.m2a - 1.0;
  const double free_air = (1.0 - cp.Sr) * cp.n;

  const double ca_denominator = air_ratio - free_air / (cp.m2a * abs_air);
  require_nonzero(ca_denominator, "Ca denominator ((m1a/m2a - 1) - (1-Sr)n/(m2a(ua0+uatm)))");

  const double cva_denominator = cp.m2a * abs_air * air_ratio - free_air;
  require_nonzero(cva_denominator, "cva denominator (m2a(ua0+uatm)(m1a/m2a - 1) - (1-Sr)n)");

  SoilModel sm;
  sm.H = H;
  sm.Ca = 1.0 / ca_denominator;
  sm.Cw = cp.m1w / cp.m2w - 1.0;
  sm.cva = cp.ka * cp.R * cp.T / (kGravity * cp.M) / cva_denominator;
  sm.cvw = cp.kw / (cp.m2w * cp.gammaw);
  sm.ua0 = cp.ua0;
  sm.uw0 = cp.uw0;
  return sm;
}

std::array<double, 4> diffusion_matrix(const SoilModel& sm) {
  const double det = sm.determinant();
  if (std::abs(det) < 1e-12) throw SingularCouplingError("1 - Ca*Cw vanishes");
  // M^{-1} = [[1, -Ca], [-Cw, 1]] / det
  return {sm.cva / det, -sm.Ca * sm.cvw / det, -sm.Cw * sm.cva / det, sm.cvw / det};
}

WellPosednessReport validate_coupling(const SoilModel& sm) {
  WellPosednessReport report;
  report.determinant = sm.determinant();
  if (std::abs(report.determinant) < 1e-12) {
    throw SingularCouplingError("1 - Ca*Cw = " + std::to_string(report.determinant) +
                                " is below 1e-12");
  }
  const auto a = diffusion_matrix(sm);
  const double trace = a[0] + a[3];
  const double det = a[0] * a[3] - a[1] * a[2];
  // (a0 - a3)^2 + 4 a1 a2 equals trace^2 - 4 det without the cancellation.
  const double d = a[0] - a[3];
  const std::complex<double> disc = std::sqrt(std::complex<double>(d * d + 4.0 * a[1] * a[2]));
  // Larger-magnitude root first, the second via det/root to avoid cancellation.
  std::complex<double> first = 0.5 * (trace + (trace >= 0.0 ? disc : -disc));
  std::complex<double> second = (first == 0.0) ? std::complex<double>(0.0) : det / first;
  report.eigenvalues = {first, second};
  report.dissipative = true;
  for (const auto& ev : report.eigenvalues) {
    if (ev.imag() != 0.0 || !(ev.real() > 0.0)) report.dissipative = false;
  }
  return report;
}

double floor_to_decade(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError("cannot floor a nonpositive value to a decade");
  double p = std::pow(10.0, std::floor(std::log10(x)));
  if (p > x) p /= 10.0;
  if (p * 10.0 <= x) p *= 10.0;
  return p;
}

double characteristic_air_time(const SoilModel& sm) {
  if (!(sm.cva > 0.0)) throw ParameterError("cva must be positive for the air dissipation time");
  return floor_to_decade(sm.H * sm.H / sm.cva);
}

}  // namespace lbc
