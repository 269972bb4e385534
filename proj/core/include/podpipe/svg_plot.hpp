#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace podpipe {

struct ScatterSpec {
  std::string title;
  std::string label_x;
  std::string label_y;
  std::vector<std::pair<double, double>> points;
  /// Rendered with a distinct marker (filtered outliers).
  std::vector<std::pair<double, double>> removed;
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
  int n = 0;
};

/// Dependency-free scatter plot: points, removed-point markers, the fitted
/// line, and an "r, N" annotation. Output is deterministic for fixed input.
std::string render_scatter(const ScatterSpec& spec);

void write_scatter(const ScatterSpec& spec, const std::filesystem::path& path);

}  // namespace podpipe
