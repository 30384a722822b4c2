#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "lbc/fd_oracle.hpp"
#include "lbc/field_model.hpp"

namespace lbc {

/// Error statistics of one predicted series against its reference.
/// mre is sum|u - ref| / sum|ref|; mre_signed keeps the signed numerator.
/// Undefined ratios (zero denominators) are left empty.
struct SeriesMetrics {
  double mae = 0.0;
  double max_abs = 0.0;
  std::optional<double> mre;
  std::optional<double> mre_signed;
  std::optional<double> r2;
  std::size_t n = 0;
};

struct MetricsReport {
  SeriesMetrics ua;
  SeriesMetrics uw;
  SeriesMetrics combined;  // on the concatenation of both series
};

SeriesMetrics compute_series_metrics(std::span<const double> predicted, std::span<const double> reference);

MetricsReport compute_metrics(std::span<const double> pred_a, std::span<const double> ref_a,
                              std::span<const double> pred_w, std::span<const double> ref_w);

/// Evaluates `model` at every grid node, divides both fields by (ua0, uw0) and
/// compares per variable and combined. A zero initial pressure leaves that field unscaled.
MetricsReport compare_to_oracle(const FieldModel& model, const SolutionGrid& grid, double ua0, double uw0);

/// `variable,mae,mre,max_abs,r2,n` with rows ua, uw, combined. Undefined values are empty.
void write_metrics_csv(const MetricsReport& report, std::ostream& os);
void write_metrics_csv(const MetricsReport& report, const std::string& path);

}  // namespace lbc
