#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "podpipe/collection.hpp"
#include "podpipe/split.hpp"

namespace podpipe {

struct SelectedFrame {
  std::string frame_id;
  /// Interpolated odometer position relative to the slice start.
  double odometer_m = 0.0;
  /// The equidistant target this frame was chosen for.
  double target_m = 0.0;
};

struct FrameSelection {
  int plot_id = 0;
  Side side = Side::left;
  /// Sorted by odometer_m; pairwise spacing >= footprint_m * 0.95.
  std::vector<SelectedFrame> selected;
  double footprint_m = 0.0;
  /// Targets that had to be skipped to preserve the spacing constraint.
  std::vector<std::string> notes;
};

/// Picks, for each of k equidistant targets inside the slice, the nearest
/// unused frame by interpolated odometer position. A pick that would land
/// closer than footprint_m * 0.95 to an already selected frame is dropped
/// and noted instead, so footprints never overlap enough to double count.
FrameSelection select_frames(const PlotSlice& slice, const std::vector<FrameRecord>& frames,
                             const std::vector<OdomSample>& odometry, int k,
                             double footprint_m);

/// Frames needed to tile plot_length_m with non-overlapping footprints.
int default_frame_count(double plot_length_m, double footprint_m);

/// Fractions of the raw frame removed from each edge before detection.
struct CropSpec {
  double left_frac = 0.25;
  double right_frac = 0.25;
  double top_frac = 0.0;
  double bottom_frac = 0.0;
};

void validate(const CropSpec& spec);

/// Renormalizes a raw-frame box into crop coordinates; boxes touching the
/// removed margin are discarded (nullopt), never clipped.
std::optional<Detection> apply_crop(const CropSpec& spec, const Detection& box);

std::vector<FrameSelection> read_selections(const std::filesystem::path& path);
void write_selections(const std::vector<FrameSelection>& selections,
                      const std::filesystem::path& path);

}  // namespace podpipe
