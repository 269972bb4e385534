#include "support/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "podpipe/textio.hpp"

namespace podpipe::testing {

namespace {

using nlohmann::json;

std::filesystem::path unique_temp_dir() {
  static std::mt19937_64 rng(std::random_device{}());
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 64; ++attempt) {
    char name[32];
    std::snprintf(name, sizeof name, "podpipe-%016llx",
                  static_cast<unsigned long long>(rng()));
    const auto candidate = base / name;
    std::error_code ec;
    if (std::filesystem::create_directory(candidate, ec)) return candidate;
  }
  throw std::runtime_error("could not create a temp directory");
}

void replace_line(const std::filesystem::path& path, std::size_t line_no,
                  const std::string& replacement) {
  const std::string text = read_file_or_fail(path);
  std::string out;
  std::size_t start = 0, n = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find('\n', start);
    const std::string_view line =
        text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    ++n;
    out += (n == line_no) ? std::string_view(replacement) : line;
    if (pos == std::string::npos) break;
    out += '\n';
    start = pos + 1;
  }
  write_file(path, out);
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  std::string text = read_file_or_fail(path);
  if (!text.empty() && text.back() != '\n') text += '\n';
  text += line;
  text += '\n';
  write_file(path, text);
}

void edit_manifest(const std::filesystem::path& dir,
                   const std::function<void(json&)>& mutate) {
  json j = json::parse(read_file_or_fail(dir / "manifest.json"));
  mutate(j);
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace

TempDir::TempDir() : path_(unique_temp_dir()) {}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

FieldLayout tiny_layout(int n_columns, int n_ranges) {
  FieldLayout l;
  l.n_columns = n_columns;
  l.n_ranges = n_ranges;
  l.base_plot_id = 100;
  l.row_spacing_m = 0.76;
  l.plot_length_m = 1.0;
  l.alley_length_m = 0.9;
  l.origin = {40.1, -88.2};
  l.column_axis_bearing_deg = 0.0;
  l.serpentine_even_ascending = true;
  return l;
}

Collection build_pass(const FieldLayout& layout, const PassSpec& spec) {
  const double extent = along_extent_m(layout);
  const double margin = spec.lead_margin_m;
  const double duration = (extent + 2.0 * margin) / spec.speed_mps;
  const bool increasing = spec.direction == Direction::increasing;

  const auto along_at = [&](double t) {
    const double travelled = spec.speed_mps * t;
    return increasing ? -margin + travelled : extent + margin - travelled;
  };
  const double cross = (spec.corridor - 0.5) * layout.row_spacing_m;
  const LocalPoint au = along_unit(layout);
  const LocalPoint cu = cross_unit(layout);

  const int left_col = increasing ? spec.corridor - 1 : spec.corridor;
  const int right_col = increasing ? spec.corridor : spec.corridor - 1;
  const auto col_exists = [&](int col) { return col >= 0 && col < layout.n_columns; };

  const auto in_any_plot = [&](double along) {
    for (int r = 0; r < layout.n_ranges; ++r) {
      const Interval iv = plot_interval(layout, r);
      if (along >= iv.start_m && along < iv.end_m) return true;
    }
    return false;
  };

  Collection c;
  c.manifest.collection_id = spec.collection_id;
  c.manifest.pass_index = spec.corridor;
  c.manifest.direction = spec.direction;
  const int first_range = increasing ? 0 : layout.n_ranges - 1;
  const int last_range = increasing ? layout.n_ranges - 1 : 0;
  const auto meta_for = [&](int col) {
    SideMeta m;
    m.column_index = col;
    m.start_plot_id = serpentine_id(layout, col, first_range);
    m.end_plot_id = serpentine_id(layout, col, last_range);
    return m;
  };
  if (col_exists(left_col)) c.manifest.left = meta_for(left_col);
  if (col_exists(right_col)) c.manifest.right = meta_for(right_col);

  const int n_sensor = static_cast<int>(std::floor(duration * spec.sensor_rate_hz)) + 1;
  for (int i = 0; i < n_sensor; ++i) {
    const double t = i / spec.sensor_rate_hz;
    const double along = along_at(t);

    GpsSample g;
    g.time_s = t;
    const LocalPoint lp{along * au.east_m + cross * cu.east_m,
                        along * au.north_m + cross * cu.north_m};
    g.position = unproject_from_local(layout.origin, lp);
    g.fix = FixQuality::rtk;
    c.gps.push_back(g);

    c.odometry.push_back({t, spec.speed_mps * t});

    LidarSample ls;
    ls.time_s = t;
    const bool over_plot = in_any_plot(along);
    ls.left_presence = (over_plot && col_exists(left_col)) ? 1.0 : 0.0;
    ls.right_presence = (over_plot && col_exists(right_col)) ? 1.0 : 0.0;
    c.lidar.push_back(ls);
  }

  const int n_frames = static_cast<int>(std::floor(duration * spec.frame_rate_hz)) + 1;
  for (int i = 0; i < n_frames; ++i) {
    const double t = i / spec.frame_rate_hz;
    for (const Side side : {Side::left, Side::right}) {
      FrameRecord f;
      char id[64];
      std::snprintf(id, sizeof id, "%s_%06d_%c", spec.collection_id.c_str(), i,
                    side == Side::left ? 'L' : 'R');
      f.frame_id = id;
      f.time_s = t;
      f.side = side;
      c.frames.push_back(f);
    }
  }
  return c;
}

void write_valid_collection(const std::filesystem::path& dir) {
  PassSpec spec;
  spec.collection_id = "fix_pass";
  write_collection(build_pass(tiny_layout(), spec), dir);
}

const std::vector<MalformedCase>& malformed_corpus() {
  static const std::vector<MalformedCase> corpus = {
      {"manifest-truncated-json",
       [](const auto& d) {
         write_file(d / "manifest.json", "{\"collection_id\": \"fix");
       }},
      {"manifest-empty-collection-id",
       [](const auto& d) { edit_manifest(d, [](json& j) { j["collection_id"] = ""; }); }},
      {"manifest-collection-id-not-string",
       [](const auto& d) { edit_manifest(d, [](json& j) { j["collection_id"] = 7; }); }},
      {"manifest-bad-direction",
       [](const auto& d) { edit_manifest(d, [](json& j) { j["direction"] = "sideways"; }); }},
      {"manifest-negative-pass-index",
       [](const auto& d) { edit_manifest(d, [](json& j) { j["pass_index"] = -1; }); }},
      {"manifest-no-observed-sides",
       [](const auto& d) {
         edit_manifest(d, [](json& j) {
           for (const char* k :
                {"left_column_index", "left_start_plot_id", "left_end_plot_id",
                 "right_column_index", "right_start_plot_id", "right_end_plot_id"})
             j.erase(k);
         });
       }},
      {"manifest-negative-column-index",
       [](const auto& d) {
         edit_manifest(d, [](json& j) { j["left_column_index"] = -5; });
       }},
      {"gps-bad-header",
       [](const auto& d) { replace_line(d / "gps.csv", 1, "time,lat,lon,fix"); }},
      {"gps-wrong-column-count", [](const auto& d) { append_line(d / "gps.csv", "1,2,3"); }},
      {"gps-non-numeric-time",
       [](const auto& d) { replace_line(d / "gps.csv", 2, "abc,40.1,-88.2,rtk"); }},
      {"gps-time-regression",
       [](const auto& d) { append_line(d / "gps.csv", "0,40.1,-88.2,rtk"); }},
      {"gps-latitude-out-of-range",
       [](const auto& d) { append_line(d / "gps.csv", "99999,95,-88.2,rtk"); }},
      {"gps-unknown-fix-quality",
       [](const auto& d) { append_line(d / "gps.csv", "99999,40.1,-88.2,awesome"); }},
      {"odom-bad-header", [](const auto& d) { replace_line(d / "odom.csv", 1, "t,dist"); }},
      {"odom-non-numeric-value",
       [](const auto& d) { replace_line(d / "odom.csv", 2, "0,abc"); }},
      {"odom-distance-regression",
       [](const auto& d) { append_line(d / "odom.csv", "99999,0.001"); }},
      {"odom-wrong-column-count", [](const auto& d) { append_line(d / "odom.csv", "5"); }},
      {"lidar-bad-header",
       [](const auto& d) { replace_line(d / "lidar.csv", 1, "time_s,l,r"); }},
      {"lidar-presence-out-of-range",
       [](const auto& d) { append_line(d / "lidar.csv", "99999,2,0"); }},
      {"lidar-non-numeric-presence",
       [](const auto& d) { replace_line(d / "lidar.csv", 2, "0,x,0"); }},
      {"lidar-time-regression", [](const auto& d) { append_line(d / "lidar.csv", "0,0,0"); }},
      {"frames-invalid-json", [](const auto& d) { append_line(d / "frames.jsonl", "{oops"); }},
      {"frames-blank-line",
       [](const auto& d) { replace_line(d / "frames.jsonl", 2, ""); }},
      {"frames-missing-frame-id",
       [](const auto& d) {
         append_line(d / "frames.jsonl", R"({"side":"left","time_s":99999.0})");
       }},
      {"frames-bad-side",
       [](const auto& d) {
         append_line(d / "frames.jsonl",
                     R"({"frame_id":"zz_000001_X","side":"center","time_s":99999.0})");
       }},
      {"frames-duplicate-frame-id",
       [](const auto& d) {
         append_line(d / "frames.jsonl",
                     R"({"frame_id":"fix_pass_000000_L","side":"left","time_s":99999.0})");
       }},
      {"frames-time-regression",
       [](const auto& d) {
         append_line(d / "frames.jsonl",
                     R"({"frame_id":"zz_000002_L","side":"left","time_s":-50.0})");
       }},
      {"frames-detection-outside-unit-box",
       [](const auto& d) {
         append_line(
             d / "frames.jsonl",
             R"({"frame_id":"zz_000003_L","side":"left","time_s":99999.0,"detections":[{"x":0.9,"y":0.1,"w":0.5,"h":0.1,"conf":0.9}]})");
       }},
      {"frames-detection-bad-confidence",
       [](const auto& d) {
         append_line(
             d / "frames.jsonl",
             R"({"frame_id":"zz_000004_L","side":"left","time_s":99999.0,"detections":[{"x":0.1,"y":0.1,"w":0.2,"h":0.2,"conf":1.5}]})");
       }},
      {"frames-detection-missing-width",
       [](const auto& d) {
         append_line(
             d / "frames.jsonl",
             R"({"frame_id":"zz_000005_L","side":"left","time_s":99999.0,"detections":[{"x":0.1,"y":0.1,"h":0.2,"conf":0.5}]})");
       }},
      {"frames-outside-gps-window",
       [](const auto& d) {
         append_line(d / "frames.jsonl",
                     R"({"frame_id":"zz_000006_L","side":"left","time_s":7777777.0})");
       }},
  };
  return corpus;
}

}  // namespace podpipe::testing
