#include "podpipe/field_layout.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "podpipe/errors.hpp"
#include "podpipe/textio.hpp"

namespace podpipe {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;

using nlohmann::json;

double require_number(const json& j, const char* key, const std::string& file) {
  if (!j.contains(key) || !j.at(key).is_number())
    fail_at(Errc::parse, file, 1, std::string("layout field missing or not a number: ") + key);
  return j.at(key).get<double>();
}

int require_int(const json& j, const char* key, const std::string& file) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    fail_at(Errc::parse, file, 1, std::string("layout field missing or not an integer: ") + key);
  return j.at(key).get<int>();
}
}  // namespace

void validate(const FieldLayout& layout) {
  if (layout.n_ranges < 1) fail(Errc::validation, "n_ranges must be >= 1");
  if (layout.n_columns < 1) fail(Errc::validation, "n_columns must be >= 1");
  if (!(layout.row_spacing_m > 0.0)) fail(Errc::validation, "row_spacing_m must be > 0");
  if (!(layout.plot_length_m > 0.0)) fail(Errc::validation, "plot_length_m must be > 0");
  if (layout.alley_length_m < 0.0) fail(Errc::validation, "alley_length_m must be >= 0");
  validate(layout.origin);
  if (!(layout.column_axis_bearing_deg >= 0.0 && layout.column_axis_bearing_deg < 360.0))
    fail(Errc::validation, "column_axis_bearing_deg out of range [0, 360)");
}

int serpentine_id(const FieldLayout& layout, int column_index, int range_index) {
  if (column_index < 0 || column_index >= layout.n_columns)
    fail(Errc::lookup, "column_index out of range: " + std::to_string(column_index));
  if (range_index < 0 || range_index >= layout.n_ranges)
    fail(Errc::lookup, "range_index out of range: " + std::to_string(range_index));
  const bool ascending = (column_index % 2 == 0) == layout.serpentine_even_ascending;
  const int within = ascending ? range_index : layout.n_ranges - 1 - range_index;
  return layout.base_plot_id + column_index * layout.n_ranges + within;
}

PlotAddress invert_id(const FieldLayout& layout, int plot_id) {
  const int offset = plot_id - layout.base_plot_id;
  if (offset < 0 || offset >= layout.n_ranges * layout.n_columns)
    fail(Errc::lookup, "plot_id outside layout: " + std::to_string(plot_id));
  const int column = offset / layout.n_ranges;
  const int within = offset % layout.n_ranges;
  const bool ascending = (column % 2 == 0) == layout.serpentine_even_ascending;
  return PlotAddress{column, ascending ? within : layout.n_ranges - 1 - within};
}

Interval plot_interval(const FieldLayout& layout, int range_index) {
  if (range_index < 0 || range_index >= layout.n_ranges)
    fail(Errc::lookup, "range_index out of range: " + std::to_string(range_index));
  const double start = range_index * plot_pitch_m(layout);
  return Interval{start, start + layout.plot_length_m};
}

double plot_pitch_m(const FieldLayout& layout) {
  return layout.plot_length_m + layout.alley_length_m;
}

double along_extent_m(const FieldLayout& layout) {
  return (layout.n_ranges - 1) * plot_pitch_m(layout) + layout.plot_length_m;
}

double column_cross_m(const FieldLayout& layout, int column_index) {
  return column_index * layout.row_spacing_m;
}

LocalPoint along_unit(const FieldLayout& layout) {
  const double b = layout.column_axis_bearing_deg * kDegToRad;
  return LocalPoint{std::sin(b), std::cos(b)};
}

LocalPoint cross_unit(const FieldLayout& layout) {
  // 90 degrees clockwise from the along direction (to the right of it).
  const double b = layout.column_axis_bearing_deg * kDegToRad;
  return LocalPoint{std::cos(b), -std::sin(b)};
}

LocalPoint plot_center_local(const FieldLayout& layout, const PlotAddress& addr) {
  const Interval iv = plot_interval(layout, addr.range_index);
  const double along = 0.5 * (iv.start_m + iv.end_m);
  const double cross = column_cross_m(layout, addr.column_index);
  const LocalPoint a = along_unit(layout);
  const LocalPoint c = cross_unit(layout);
  return LocalPoint{along * a.east_m + cross * c.east_m, along * a.north_m + cross * c.north_m};
}

GeoPoint plot_center_geo(const FieldLayout& layout, const PlotAddress& addr) {
  return unproject_from_local(layout.origin, plot_center_local(layout, addr));
}

FieldLayout parse_layout_text(std::string_view text, const std::string& source_name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail_at(Errc::parse, source_name, 1, std::string("invalid JSON: ") + e.what());
  }
  const std::string& file = source_name;
  FieldLayout layout;
  layout.n_ranges = require_int(j, "n_ranges", file);
  layout.n_columns = require_int(j, "n_columns", file);
  layout.base_plot_id = require_int(j, "base_plot_id", file);
  layout.row_spacing_m = require_number(j, "row_spacing_m", file);
  layout.plot_length_m = require_number(j, "plot_length_m", file);
  layout.alley_length_m = require_number(j, "alley_length_m", file);
  if (!j.contains("origin") || !j.at("origin").is_object())
    fail_at(Errc::parse, file, 1, "layout field missing or not an object: origin");
  layout.origin.latitude_deg = require_number(j.at("origin"), "latitude_deg", file);
  layout.origin.longitude_deg = require_number(j.at("origin"), "longitude_deg", file);
  layout.column_axis_bearing_deg = require_number(j, "column_axis_bearing_deg", file);
  if (j.contains("serpentine_even_ascending")) {
    if (!j.at("serpentine_even_ascending").is_boolean())
      fail_at(Errc::parse, file, 1, "layout field not a boolean: serpentine_even_ascending");
    layout.serpentine_even_ascending = j.at("serpentine_even_ascending").get<bool>();
  }
  validate(layout);
  return layout;
}

FieldLayout read_layout(const std::filesystem::path& path) {
  return parse_layout_text(read_file_or_fail(path), path.string());
}

void write_layout(const FieldLayout& layout, const std::filesystem::path& path) {
  validate(layout);
  json j{
      {"n_ranges", layout.n_ranges},
      {"n_columns", layout.n_columns},
      {"base_plot_id", layout.base_plot_id},
      {"row_spacing_m", layout.row_spacing_m},
      {"plot_length_m", layout.plot_length_m},
      {"alley_length_m", layout.alley_length_m},
      {"origin",
       {{"latitude_deg", layout.origin.latitude_deg},
        {"longitude_deg", layout.origin.longitude_deg}}},
      {"column_axis_bearing_deg", layout.column_axis_bearing_deg},
      {"serpentine_even_ascending", layout.serpentine_even_ascending},
  };
  write_file(path, j.dump(2) + "\n");
}

}  // namespace podpipe
