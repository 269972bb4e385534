#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "podpipe/field_layout.hpp"
#include "podpipe/geo.hpp"

namespace podpipe {

enum class Side { left, right };
const char* to_string(Side s);
std::optional<Side> side_from_string(std::string_view s);

enum class FixQuality { rtk, flt, single };
const char* to_string(FixQuality q);
std::optional<FixQuality> fix_from_string(std::string_view s);

enum class Direction { increasing, decreasing };
const char* to_string(Direction d);
std::optional<Direction> direction_from_string(std::string_view s);

struct GpsSample {
  double time_s = 0.0;
  GeoPoint position;
  FixQuality fix = FixQuality::rtk;
};

struct OdomSample {
  double time_s = 0.0;
  double odometer_m = 0.0;
};

struct LidarSample {
  double time_s = 0.0;
  double left_presence = 0.0;
  double right_presence = 0.0;
};

/// Axis-aligned detection box, normalized to [0,1]^2 of the (cropped)
/// frame, with x/y the top-left corner.
struct Detection {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double conf = 0.0;
};

struct FrameRecord {
  std::string frame_id;
  double time_s = 0.0;
  Side side = Side::left;
  std::string image_path;  // empty when absent
  /// Embedded detections. An empty list with has_detections=true means
  /// "this frame was processed and nothing was found", which is distinct
  /// from "no detections recorded".
  std::vector<Detection> detections;
  bool has_detections = false;
};

/// User-recorded metadata for one observed side of a pass.
struct SideMeta {
  int column_index = 0;
  int start_plot_id = 0;
  int end_plot_id = 0;
};

struct CollectionManifest {
  std::string collection_id;
  int pass_index = 0;
  std::optional<SideMeta> left;
  std::optional<SideMeta> right;
  Direction direction = Direction::increasing;
  std::string layout_ref;

  const std::optional<SideMeta>& side(Side s) const {
    return s == Side::left ? left : right;
  }
};

/// One robot pass worth of sensor logs. The GPS stream may be empty
/// (degraded collections without positioning); the other streams must be
/// non-empty.
struct Collection {
  CollectionManifest manifest;
  std::vector<GpsSample> gps;
  std::vector<OdomSample> odometry;
  std::vector<LidarSample> lidar;
  std::vector<FrameRecord> frames;
};

/// Reads manifest.json, gps.csv, odom.csv, lidar.csv and frames.jsonl
/// from `dir`. Missing files produce not-found errors naming the file;
/// schema violations produce parse errors naming file and line; breaches
/// of stream invariants (monotonic time, decreasing odometer, frame
/// times outside the GPS window by more than 1 s) produce integrity
/// errors citing the offending line.
Collection read_collection(const std::filesystem::path& dir);

/// Writes the five canonical files. Floats use the shortest round-trip
/// form, so write_collection(read_collection(dir)) reproduces canonical
/// inputs byte for byte.
void write_collection(const Collection& c, const std::filesystem::path& dir);

CollectionManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const CollectionManifest& m, const std::filesystem::path& path);

/// Cross-checks recorded metadata against the GPS trajectory: lateral
/// corridor position against the claimed column indices, traversal
/// direction, and the plot-ID span. Returns human-readable warnings; an
/// empty or low-quality GPS stream yields a single "gps-skipped" warning.
std::vector<std::string> validate_metadata(const Collection& c, const FieldLayout& layout);

/// Sibling per-frame detection store (detections.jsonl), used when frames
/// carry no embedded detections. Boxes are normalized to the raw frame.
struct FrameDetections {
  std::string frame_id;
  std::vector<Detection> detections;
};

std::vector<FrameDetections> read_detections_file(const std::filesystem::path& path);
void write_detections_file(const std::vector<FrameDetections>& v, const std::filesystem::path& path);

}  // namespace podpipe
