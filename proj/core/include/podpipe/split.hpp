#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "podpipe/collection.hpp"
#include "podpipe/field_layout.hpp"
#include "podpipe/geo.hpp"

namespace podpipe {

enum class SplitMethod { gps, lidar };
const char* to_string(SplitMethod m);
std::optional<SplitMethod> split_method_from_string(std::string_view s);

/// One plot traversal carved out of a collection. Windows are half-open in
/// spirit but stored as closed endpoints; t_start < t_end and
/// d_start < d_end always hold for emitted slices.
struct PlotSlice {
  int plot_id = 0;
  Side side = Side::left;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double d_start_m = 0.0;
  double d_end_m = 0.0;
  double confidence = 0.0;
  SplitMethod method = SplitMethod::gps;
};

struct SplitOptions {
  /// Minimum fraction of plot length traversed for a slice to be emitted.
  double coverage_threshold = 0.8;
  /// Centered moving-average window (samples) applied to the projected
  /// along-track coordinate before boundary intersection. Odd; exact on
  /// linear motion, so it removes GPS noise without biasing boundaries.
  int smoothing_window = 15;
  /// GPS mode requires at least this fraction of rtk-quality fixes.
  double min_rtk_fraction = 0.5;
  /// Presence binarization: on at >= on_threshold, off again only below
  /// on_threshold - hysteresis.
  double on_threshold = 0.5;
  double hysteresis = 0.1;
};

/// Splits by intersecting the projected GPS trajectory with plot
/// boundaries. Fails with mode-unavailable when GPS is absent or rtk
/// quality is below options.min_rtk_fraction.
std::vector<PlotSlice> split_by_gps(const Collection& c, const FieldLayout& layout,
                                    const SplitOptions& options = {});

/// Splits from the rear LiDAR presence stream: presence runs are plots,
/// gaps shorter than half the alley are bridged, and runs map to ranges in
/// manifest traversal order. Boundary positions are odometer midpoints
/// between the bracketing samples.
std::vector<PlotSlice> split_by_lidar(const Collection& c, const FieldLayout& layout,
                                      const SplitOptions& options = {});

struct PlotCenterEstimate {
  int plot_id = 0;
  Side side = Side::left;
  GeoPoint position;
};

struct VerifyReport {
  /// Human-readable diagnostics, each prefixed with a stable kebab-case
  /// category ("direction-mismatch:", "plot-id:", "odometer-window:", ...).
  std::vector<std::string> flags;
  std::vector<PlotCenterEstimate> centers;
};

/// Cross-checks slice plot ids against the manifest and emits per-slice
/// plot-center estimates (mean in-window GPS along-position, snapped to the
/// plot's column line). Mismatches are flagged, never silently fixed.
VerifyReport assign_and_verify(const std::vector<PlotSlice>& slices, const Collection& c,
                               const FieldLayout& layout);

std::vector<PlotSlice> read_slices(const std::filesystem::path& path);
void write_slices(const std::vector<PlotSlice>& slices, const std::filesystem::path& path);

/// Writes one row per plot id, averaging estimates across sides.
void write_plot_centers(const std::vector<PlotCenterEstimate>& centers,
                        const std::filesystem::path& path);

}  // namespace podpipe
