#include "podpipe/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "podpipe/errors.hpp"
#include "podpipe/series.hpp"

namespace podpipe {

namespace {

struct Moments {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
};

void validate_series(const PairedSeries& series, std::size_t min_n) {
  if (series.records.size() < min_n)
    fail(Errc::insufficient_data, "series '" + series.label_x + "' vs '" + series.label_y +
                                      "' has " + std::to_string(series.records.size()) +
                                      " records, needs >= " + std::to_string(min_n));
  std::vector<std::pair<int, int>> keys;
  keys.reserve(series.records.size());
  for (const auto& rec : series.records) {
    if (!std::isfinite(rec.x) || !std::isfinite(rec.y))
      fail(Errc::validation, "plot " + std::to_string(rec.plot_id) + " has a non-finite value");
    keys.emplace_back(rec.plot_id, rec.side ? static_cast<int>(*rec.side) : -1);
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
    fail(Errc::validation, "duplicate plot record in series");
}

/// Two-pass compensated central moments; schedule-stable to ~1e-15.
Moments central_moments(const PairedSeries& series) {
  const auto& recs = series.records;
  const double n = static_cast<double>(recs.size());
  NeumaierSum sx, sy;
  for (const auto& r : recs) {
    sx.add(r.x);
    sy.add(r.y);
  }
  Moments m;
  m.mean_x = sx.value() / n;
  m.mean_y = sy.value() / n;
  NeumaierSum sxx, syy, sxy;
  for (const auto& r : recs) {
    const double dx = r.x - m.mean_x;
    const double dy = r.y - m.mean_y;
    sxx.add(dx * dx);
    syy.add(dy * dy);
    sxy.add(dx * dy);
  }
  m.sxx = sxx.value();
  m.syy = syy.value();
  m.sxy = sxy.value();
  return m;
}

const char* coordinate_label(const PairedSeries& series, bool x) {
  if (x) return series.label_x.empty() ? "x" : series.label_x.c_str();
  return series.label_y.empty() ? "y" : series.label_y.c_str();
}

CorrelationReport report_for(const PairedSeries& series, std::string stage) {
  const LinearFitResult fit = linear_fit(series);
  CorrelationReport rep;
  rep.stage = std::move(stage);
  rep.n = static_cast<int>(series.records.size());
  rep.r = pearson_r(series);
  rep.slope = fit.slope;
  rep.intercept = fit.intercept;
  return rep;
}

/// filter_2sigma, but a zero-spread or too-short series filters nothing
/// instead of failing; stage pipelines treat those as "no outliers".
FilterResult filter_or_keep(const PairedSeries& series) {
  if (series.records.size() >= 4) {
    try {
      return filter_2sigma(series);
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_series) throw;
    }
  }
  return {series, {}};
}

}  // namespace

double pearson_r(const PairedSeries& series) {
  validate_series(series, 3);
  const Moments m = central_moments(series);
  if (m.sxx == 0.0)
    fail(Errc::degenerate_series,
         std::string("series '") + coordinate_label(series, true) + "' has zero variance");
  if (m.syy == 0.0)
    fail(Errc::degenerate_series,
         std::string("series '") + coordinate_label(series, false) + "' has zero variance");
  // Cauchy-Schwarz bounds |r| by 1; rounding in the quotient can poke an
  // ulp past it, so clamp.
  return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

LinearFitResult linear_fit(const PairedSeries& series) {
  validate_series(series, 3);
  const Moments m = central_moments(series);
  if (m.sxx == 0.0)
    fail(Errc::degenerate_series,
         std::string("series '") + coordinate_label(series, true) + "' has zero variance");
  LinearFitResult fit;
  fit.slope = m.sxy / m.sxx;
  fit.intercept = m.mean_y - fit.slope * m.mean_x;
  fit.residuals.reserve(series.records.size());
  for (const auto& r : series.records)
    fit.residuals.push_back(r.y - (fit.slope * r.x + fit.intercept));
  return fit;
}

FilterResult filter_2sigma(const PairedSeries& series) {
  validate_series(series, 4);
  const LinearFitResult fit = linear_fit(series);
  const double n = static_cast<double>(fit.residuals.size());
  NeumaierSum sum;
  for (double r : fit.residuals) sum.add(r);
  const double mean = sum.value() / n;
  NeumaierSum sq;
  for (double r : fit.residuals) sq.add((r - mean) * (r - mean));
  const double sd = std::sqrt(sq.value() / (n - 1.0));
  // A spread that is zero up to rounding (billionths of the response
  // spread) means the points sit on the fitted line; standardizing
  // would only amplify arithmetic dust into fake outliers.
  const double y_sd = std::sqrt(central_moments(series).syy / (n - 1.0));
  if (sd <= y_sd * 1e-9)
    fail(Errc::degenerate_series, "residual spread is zero, nothing to filter");

  FilterResult out;
  out.kept.label_x = series.label_x;
  out.kept.label_y = series.label_y;
  for (std::size_t i = 0; i < series.records.size(); ++i) {
    const double z = fit.residuals[i] / sd;
    if (std::abs(z) > 2.0)
      out.removed.push_back({series.records[i].plot_id, series.records[i].side, z});
    else
      out.kept.records.push_back(series.records[i]);
  }
  return out;
}

StageReports run_stages(const std::vector<PlotResult>& results) {
  PairedSeries stage1;
  stage1.label_x = "pod_count";
  stage1.label_y = "yield_g";
  for (const auto& r : results) {
    if (!r.yield_g) continue;
    if (r.count_left) stage1.records.push_back({r.plot_id, Side::left, *r.count_left, *r.yield_g});
    if (r.count_right)
      stage1.records.push_back({r.plot_id, Side::right, *r.count_right, *r.yield_g});
  }
  if (stage1.records.size() < 3)
    fail(Errc::insufficient_data, "joined " + std::to_string(stage1.records.size()) +
                                      " plot-side rows with yield, need >= 3");

  StageReports reports;
  reports.all = report_for(stage1, "all");

  FilterResult filtered = filter_or_keep(stage1);
  reports.filtered = report_for(filtered.kept, "filtered");
  reports.filtered.removed = filtered.removed;

  PairedSeries averaged;
  averaged.label_x = "pod_count_mean";
  averaged.label_y = "yield_g";
  std::map<int, std::pair<NeumaierSum, int>> by_plot;
  std::map<int, double> yields;
  for (const auto& rec : filtered.kept.records) {
    by_plot[rec.plot_id].first.add(rec.x);
    ++by_plot[rec.plot_id].second;
    yields[rec.plot_id] = rec.y;
  }
  for (auto& [plot_id, acc] : by_plot)
    averaged.records.push_back(
        {plot_id, std::nullopt, acc.first.value() / acc.second, yields[plot_id]});
  reports.averaged = report_for(averaged, "averaged");

  reports.series_all = std::move(stage1);
  reports.series_filtered = std::move(filtered.kept);
  reports.series_averaged = std::move(averaged);
  return reports;
}

ManualComparison manual_count_comparison(const std::vector<PlotResult>& results) {
  PairedSeries series;
  series.label_x = "combined_count";
  series.label_y = "manual_count";
  for (const auto& r : results) {
    if (!r.manual_count) continue;
    series.records.push_back(
        {r.plot_id, std::nullopt, r.combined_count, static_cast<double>(*r.manual_count)});
  }
  if (series.records.size() < 3)
    fail(Errc::insufficient_data, "only " + std::to_string(series.records.size()) +
                                      " plots have manual counts, need >= 3");
  ManualComparison cmp;
  cmp.before = report_for(series, "manual-all");
  FilterResult filtered = filter_or_keep(series);
  cmp.after = report_for(filtered.kept, "manual-filtered");
  cmp.after.removed = filtered.removed;
  return cmp;
}

}  // namespace podpipe
