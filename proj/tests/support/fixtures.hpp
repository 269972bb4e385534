// Shared test fixtures: disposable directories, small field layouts,
// hand-built sensor collections (including traversal directions the
// simulator never produces), and a corpus of deliberately malformed
// collection directories.
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "podpipe/collection.hpp"
#include "podpipe/field_layout.hpp"

namespace podpipe::testing {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// A small layout for fast tests: plot ids start at 100, 10 Hz-friendly
/// 1 m plots with 0.9 m alleys.
FieldLayout tiny_layout(int n_columns = 2, int n_ranges = 3);

/// Geometry of one hand-built robot pass with perfect (noise-free)
/// sensors. Corridor p runs between columns p-1 and p.
struct PassSpec {
  int corridor = 1;
  Direction direction = Direction::increasing;
  double speed_mps = 0.5;
  double sensor_rate_hz = 20.0;
  double frame_rate_hz = 10.0;
  double lead_margin_m = 1.0;
  std::string collection_id = "fix_pass";
};

/// Builds the pass's Collection entirely from the layout's geometry.
/// When the pass runs in the decreasing direction the robot has turned
/// around, so the side-to-column mapping mirrors: left sees column p,
/// right sees column p-1.
Collection build_pass(const FieldLayout& layout, const PassSpec& spec);

/// Writes build_pass output for corridor 1 of tiny_layout() — the valid
/// baseline the malformed corpus corrupts.
void write_valid_collection(const std::filesystem::path& dir);

struct MalformedCase {
  std::string name;
  /// Applied to a fresh copy of the valid collection directory.
  std::function<void(const std::filesystem::path& dir)> corrupt;
};

/// At least 20 distinct ways a collection directory can be malformed.
const std::vector<MalformedCase>& malformed_corpus();

}  // namespace podpipe::testing
