#pragma once

#include <filesystem>

#include "podpipe/geo.hpp"

namespace podpipe {

/// Row-crop trial layout: `n_columns` planted rows ("columns"), each cut
/// into `n_ranges` plots of `plot_length_m` separated by alleys. Plot IDs
/// snake through the grid column by column: even-indexed columns ascend
/// through the ranges and odd-indexed columns descend (or the reverse
/// when serpentine_even_ascending is false).
struct FieldLayout {
  int n_ranges = 36;
  int n_columns = 40;
  int base_plot_id = 4560;
  double row_spacing_m = 0.76;
  double plot_length_m = 1.0;
  double alley_length_m = 0.9;
  GeoPoint origin;
  /// Compass bearing (degrees, clockwise from north) of the direction of
  /// increasing range index. Column index increases to the right of it.
  double column_axis_bearing_deg = 0.0;
  bool serpentine_even_ascending = true;
};

struct PlotAddress {
  int column_index = 0;
  int range_index = 0;
};

struct Interval {
  double start_m = 0.0;
  double end_m = 0.0;
};

void validate(const FieldLayout& layout);

/// Serpentine plot ID for a grid cell. The mapping is a bijection from
/// the full grid onto [base_plot_id, base_plot_id + n_ranges*n_columns).
int serpentine_id(const FieldLayout& layout, int column_index, int range_index);

/// Inverse of serpentine_id; fails with a lookup error for IDs outside
/// the grid.
PlotAddress invert_id(const FieldLayout& layout, int plot_id);

/// Along-column interval [start, end) occupied by the given range's plot,
/// measured in meters from the field origin end of the column.
Interval plot_interval(const FieldLayout& layout, int range_index);

/// Center-to-center distance between consecutive ranges.
double plot_pitch_m(const FieldLayout& layout);

/// Along-column coordinate spanned by plots: from the start of range 0 to
/// the end of the last range.
double along_extent_m(const FieldLayout& layout);

/// Cross-row offset of a column from the origin, meters.
double column_cross_m(const FieldLayout& layout, int column_index);

LocalPoint plot_center_local(const FieldLayout& layout, const PlotAddress& addr);

/// WGS84 position of a plot's row-segment midpoint.
GeoPoint plot_center_geo(const FieldLayout& layout, const PlotAddress& addr);

/// Unit vectors of the field frame in east/north coordinates.
LocalPoint along_unit(const FieldLayout& layout);
LocalPoint cross_unit(const FieldLayout& layout);

FieldLayout read_layout(const std::filesystem::path& path);
/// Parses layout JSON held in memory; source_name labels parse errors.
FieldLayout parse_layout_text(std::string_view json_text, const std::string& source_name);
void write_layout(const FieldLayout& layout, const std::filesystem::path& path);

}  // namespace podpipe
