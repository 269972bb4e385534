#pragma once

#include <optional>
#include <string>
#include <vector>

#include "podpipe/collection.hpp"
#include "podpipe/count.hpp"

namespace podpipe {

/// One (x, y) pair. side distinguishes the two per-side rows a plot
/// contributes before averaging; records are unique by (plot_id, side).
struct PairedRecord {
  int plot_id = 0;
  std::optional<Side> side;
  double x = 0.0;
  double y = 0.0;
};

struct PairedSeries {
  std::vector<PairedRecord> records;
  std::string label_x;
  std::string label_y;
};

struct RemovedOutlier {
  int plot_id = 0;
  std::optional<Side> side;
  double standardized_residual = 0.0;
};

struct LinearFitResult {
  double slope = 0.0;
  double intercept = 0.0;
  /// y - (slope*x + intercept), aligned with the input records.
  std::vector<double> residuals;
};

struct CorrelationReport {
  std::string stage;  // "all", "filtered", "averaged", "manual-*"
  int n = 0;
  double r = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<RemovedOutlier> removed;
};

/// Pearson correlation via compensated two-pass sums, clamped to [-1, 1].
double pearson_r(const PairedSeries& series);

/// Ordinary least squares of y on x.
LinearFitResult linear_fit(const PairedSeries& series);

struct FilterResult {
  PairedSeries kept;
  std::vector<RemovedOutlier> removed;
};

/// Fits once, standardizes residuals by their sample (n-1) deviation, and
/// removes records with |z| > 2. Single pass, no re-iteration.
FilterResult filter_2sigma(const PairedSeries& series);

struct StageReports {
  CorrelationReport all;       // every plot-side row vs yield
  CorrelationReport filtered;  // after one 2-sigma pass
  CorrelationReport averaged;  // surviving rows collapsed per plot
  /// The series each report was computed from, kept for rendering.
  PairedSeries series_all;
  PairedSeries series_filtered;
  PairedSeries series_averaged;
};

/// The three-stage yield analysis over results that carry yield_g.
StageReports run_stages(const std::vector<PlotResult>& results);

struct ManualComparison {
  CorrelationReport before;
  CorrelationReport after;
};

/// Machine estimates against manual reference counts, before and after a
/// single 2-sigma pass.
ManualComparison manual_count_comparison(const std::vector<PlotResult>& results);

}  // namespace podpipe
