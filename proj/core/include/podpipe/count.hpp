#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "podpipe/collection.hpp"
#include "podpipe/frames.hpp"

namespace podpipe {

struct PlotObservation {
  int plot_id = 0;
  Side side = Side::left;
  /// Per selected frame, aligned with the selection order.
  std::vector<int> frame_counts;
  int raw_count = 0;
  double calibrated_count = 0.0;
  /// Fraction of the plot length covered by the selected footprints.
  double coverage_frac = 0.0;
  /// Sorted; "low-coverage" below 0.8 coverage, "empty-frames" when any
  /// selected frame produced zero detections.
  std::vector<std::string> quality_flags;
};

struct PlotResult {
  int plot_id = 0;
  std::optional<double> count_left;
  std::optional<double> count_right;
  /// Arithmetic mean of the sides present.
  double combined_count = 0.0;
  int n_sides = 0;
  std::optional<double> yield_g;
  std::optional<int> manual_count;
  /// Union of the contributing observations' flags, side-prefixed.
  std::vector<std::string> flags;
};

/// Sums per-frame counts and normalizes by footprint coverage of the plot
/// (floored at 0.5 so sparse slices are flagged rather than extrapolated).
PlotObservation aggregate_plot(const FrameSelection& selection,
                               const std::vector<int>& frame_counts, double calibration_c,
                               double plot_length_m);

/// Merges one plot's 1 or 2 per-side observations into a single result.
PlotResult merge_sides(const std::vector<PlotObservation>& observations);

/// Least-squares scale fitting reference counts from raw estimates
/// (reference ~ c * estimate, through the origin). Never auto-applied.
double fit_calibration(const std::vector<std::pair<double, double>>& estimate_reference);

std::vector<PlotResult> read_counts(const std::filesystem::path& path);
void write_counts(const std::vector<PlotResult>& results, const std::filesystem::path& path);

}  // namespace podpipe
