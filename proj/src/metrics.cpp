#include "lbc/metrics.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <vector>

#include "lbc/csv.hpp"
#include "lbc/errors.hpp"

namespace lbc {

SeriesMetrics compute_series_metrics(std::span<const double> predicted, std::span<const double> reference) {
  if (predicted.size() != reference.size()) throw ShapeError("predicted and reference lengths differ");
  if (predicted.empty()) throw ShapeError("metrics need at least one sample");
  SeriesMetrics m;
  m.n = predicted.size();
  double abs_sum = 0.0, signed_sum = 0.0, ref_abs = 0.0, ref_sum = 0.0, sq_err = 0.0, mean = 0.0;
  for (std::size_t k = 0; k < m.n; ++k) mean += reference[k];
  mean /= static_cast<double>(m.n);
  double ss_tot = 0.0;
  for (std::size_t k = 0; k < m.n; ++k) {
    const double e = predicted[k] - reference[k];
    abs_sum += std::abs(e);
    signed_sum += e;
    sq_err += e * e;
    ref_abs += std::abs(reference[k]);
    ref_sum += reference[k];
    m.max_abs = std::max(m.max_abs, std::abs(e));
    ss_tot += (reference[k] - mean) * (reference[k] - mean);
  }
  m.mae = abs_sum / static_cast<double>(m.n);
  if (ref_abs > 0.0) m.mre = abs_sum / ref_abs;
  if (ref_sum != 0.0) m.mre_signed = signed_sum / ref_sum;
  if (ss_tot > 0.0) m.r2 = 1.0 - sq_err / ss_tot;
  return m;
}

MetricsReport compute_metrics(std::span<const double> pred_a, std::span<const double> ref_a,
                              std::span<const double> pred_w, std::span<const double> ref_w) {
  MetricsReport r;
  r.ua = compute_series_metrics(pred_a, ref_a);
  r.uw = compute_series_metrics(pred_w, ref_w);
  std::vector<double> pred(pred_a.begin(), pred_a.end());
  pred.insert(pred.end(), pred_w.begin(), pred_w.end());
  std::vector<double> ref(ref_a.begin(), ref_a.end());
  ref.insert(ref.end(), ref_w.begin(), ref_w.end());
  r.combined = compute_series_metrics(pred, ref);
  return r;
}

MetricsReport compare_to_oracle(const FieldModel& model, const SolutionGrid& grid, double ua0, double uw0) {
  const double sa = ua0 != 0.0 ? 1.0 / ua0 : 1.0;
  const double sw = uw0 != 0.0 ? 1.0 / uw0 : 1.0;
  const Eigen::Index nz = grid.z.size(), nt = grid.t.size();
  std::vector<double> pa, ra, pw, rw;
  pa.reserve(static_cast<std::size_t>(nz * nt));
  ra.reserve(pa.capacity());
  pw.reserve(pa.capacity());
  rw.reserve(pa.capacity());
  for (Eigen::Index j = 0; j < nt; ++j) {
    const auto [ua, uw] = model.profile(grid.z, grid.t[j]);
    for (Eigen::Index i = 0; i < nz; ++i) {
      pa.push_back(ua[i] * sa);
      ra.push_back(grid.ua(i, j) * sa);
      pw.push_back(uw[i] * sw);
      rw.push_back(grid.uw(i, j) * sw);
    }
  }
  return compute_metrics(pa, ra, pw, rw);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? csv::fmt(*v) : std::string(); }

void row(std::ostream& os, const char* name, const SeriesMetrics& m) {
  os << name << ',' << csv::fmt(m.mae) << ',' << opt(m.mre) << ',' << csv::fmt(m.max_abs) << ',' << opt(m.r2) << ','
     << m.n << '\n';
}

}  // namespace

void write_metrics_csv(const MetricsReport& report, std::ostream& os) {
  os << "variable,mae,mre,max_abs,r2,n\n";
  row(os, "ua", report.ua);
  row(os, "uw", report.uw);
  row(os, "combined", report.combined);
}

void write_metrics_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_metrics_csv(report, os);
}

}  // namespace lbc
