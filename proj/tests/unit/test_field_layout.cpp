#include <cmath>
#include <set>

#include "doctest.h"
#include "podpipe/errors.hpp"
#include "podpipe/field_layout.hpp"
#include "podpipe/textio.hpp"
#include "support/fixtures.hpp"

using namespace podpipe;
using namespace podpipe::testing;

namespace {

FieldLayout default_layout() {
  FieldLayout l;
  l.origin = {40.1, -88.2};
  return l;
}

}  // namespace

TEST_CASE("plot ids snake through the grid as a bijection") {
  const FieldLayout l = default_layout();
  std::set<int> ids;
  for (int c = 0; c < l.n_columns; ++c)
    for (int r = 0; r < l.n_ranges; ++r) {
      const int id = serpentine_id(l, c, r);
      CHECK(ids.insert(id).second);
      const PlotAddress back = invert_id(l, id);
      CHECK(back.column_index == c);
      CHECK(back.range_index == r);
    }
  CHECK(ids.size() == 1440);
  CHECK(*ids.begin() == 4560);
  CHECK(*ids.rbegin() == 5999);
}

TEST_CASE("adjacent columns advance ids in opposite range directions") {
  const FieldLayout l = default_layout();
  // Column 0 ascends with range index, column 1 descends.
  CHECK(serpentine_id(l, 0, 0) == 4560);
  CHECK(serpentine_id(l, 0, 35) == 4595);
  CHECK(serpentine_id(l, 1, 35) == 4596);
  CHECK(serpentine_id(l, 1, 0) == 4631);
  CHECK(serpentine_id(l, 2, 0) == 4632);

  FieldLayout flipped = l;
  flipped.serpentine_even_ascending = false;
  CHECK(serpentine_id(flipped, 0, 35) == 4560);
  CHECK(serpentine_id(flipped, 0, 0) == 4595);
  CHECK(serpentine_id(flipped, 1, 0) == 4596);
}

TEST_CASE("id inversion rejects ids outside the grid") {
  const FieldLayout l = default_layout();
  for (int bad : {4559, 6000, 0, -1}) {
    try {
      (void)invert_id(l, bad);
      FAIL("expected an error for id ", bad);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::lookup);
    }
  }
}

TEST_CASE("plot intervals tile the column with alleys between") {
  const FieldLayout l = tiny_layout();  // 1 m plots, 0.9 m alleys
  CHECK(plot_pitch_m(l) == doctest::Approx(1.9).epsilon(1e-15));
  const Interval r0 = plot_interval(l, 0);
  const Interval r1 = plot_interval(l, 1);
  CHECK(r0.start_m == 0.0);
  CHECK(r0.end_m == doctest::Approx(1.0));
  CHECK(r1.start_m == doctest::Approx(1.9));
  CHECK(r1.end_m == doctest::Approx(2.9));
  CHECK(along_extent_m(l) == doctest::Approx(2 * 1.9 + 1.0));
  CHECK(column_cross_m(l, 0) == 0.0);
  CHECK(column_cross_m(l, 3) == doctest::Approx(3 * l.row_spacing_m));
}

TEST_CASE("plot centers follow the column bearing") {
  FieldLayout l = tiny_layout();
  l.column_axis_bearing_deg = 0.0;  // along = north, cross = east
  const LocalPoint c00 = plot_center_local(l, {0, 0});
  CHECK(c00.east_m == doctest::Approx(0.0));
  CHECK(c00.north_m == doctest::Approx(0.5));
  const LocalPoint c12 = plot_center_local(l, {1, 2});
  CHECK(c12.east_m == doctest::Approx(l.row_spacing_m));
  CHECK(c12.north_m == doctest::Approx(2 * 1.9 + 0.5));

  l.column_axis_bearing_deg = 90.0;  // along = east, cross = south
  const LocalPoint e00 = plot_center_local(l, {0, 1});
  CHECK(e00.east_m == doctest::Approx(1.9 + 0.5));
  CHECK(e00.north_m == doctest::Approx(0.0));
  const LocalPoint e10 = plot_center_local(l, {1, 0});
  CHECK(e10.east_m == doctest::Approx(0.5));
  CHECK(e10.north_m == doctest::Approx(-l.row_spacing_m));

  // The frame's unit vectors stay orthonormal at any bearing.
  l.column_axis_bearing_deg = 37.0;
  const LocalPoint a = along_unit(l);
  const LocalPoint x = cross_unit(l);
  CHECK(std::hypot(a.east_m, a.north_m) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::hypot(x.east_m, x.north_m) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a.east_m * x.east_m + a.north_m * x.north_m == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("geographic plot centers round-trip through the local frame") {
  const FieldLayout l = default_layout();
  const GeoPoint g = plot_center_geo(l, {7, 11});
  const LocalPoint local = project_to_local(l.origin, g);
  const LocalPoint want = plot_center_local(l, {7, 11});
  CHECK(local.east_m == doctest::Approx(want.east_m).epsilon(1e-9));
  CHECK(local.north_m == doctest::Approx(want.north_m).epsilon(1e-9));
}

TEST_CASE("layout validation rejects non-positive dimensions") {
  FieldLayout l = default_layout();
  CHECK_NOTHROW(validate(l));
  auto expect_reject = [](FieldLayout bad) {
    try {
      validate(bad);
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::validation);
    }
  };
  FieldLayout bad = l;
  bad.n_ranges = 0;
  expect_reject(bad);
  bad = l;
  bad.n_columns = -1;
  expect_reject(bad);
  bad = l;
  bad.plot_length_m = 0.0;
  expect_reject(bad);
  bad = l;
  bad.row_spacing_m = -0.5;
  expect_reject(bad);
  bad = l;
  bad.alley_length_m = -0.1;
  expect_reject(bad);
  bad = l;
  bad.origin.latitude_deg = 95.0;
  expect_reject(bad);
}

TEST_CASE("layout files round-trip through read and write") {
  TempDir tmp;
  FieldLayout l = tiny_layout(5, 7);
  l.column_axis_bearing_deg = 123.25;
  l.serpentine_even_ascending = false;
  const auto path = tmp.path() / "layout.json";
  write_layout(l, path);
  const FieldLayout back = read_layout(path);
  CHECK(back.n_ranges == l.n_ranges);
  CHECK(back.n_columns == l.n_columns);
  CHECK(back.base_plot_id == l.base_plot_id);
  CHECK(back.row_spacing_m == l.row_spacing_m);
  CHECK(back.plot_length_m == l.plot_length_m);
  CHECK(back.alley_length_m == l.alley_length_m);
  CHECK(back.origin.latitude_deg == l.origin.latitude_deg);
  CHECK(back.origin.longitude_deg == l.origin.longitude_deg);
  CHECK(back.column_axis_bearing_deg == l.column_axis_bearing_deg);
  CHECK(back.serpentine_even_ascending == l.serpentine_even_ascending);

  // Re-serialization is byte-stable.
  const auto path2 = tmp.path() / "layout2.json";
  write_layout(back, path2);
  CHECK(read_file_or_fail(path) == read_file_or_fail(path2));
}

TEST_CASE("layout parsing reports the source name on malformed text") {
  try {
    (void)parse_layout_text("{\"n_ranges\": []}", "cfg#layout");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse);
    CHECK(e.file() == "cfg#layout");
  }
  CHECK_THROWS_AS((void)parse_layout_text("not json", "x"), Error);
  // Unknown keys are rejected rather than ignored.
  CHECK_THROWS_AS(
      (void)parse_layout_text("{\"n_ranges\": 2, \"n_columns\": 2, \"surprise\": 1}", "x"),
      Error);
}
