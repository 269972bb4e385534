#include "podpipe/collection.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "podpipe/errors.hpp"
#include "podpipe/textio.hpp"

namespace podpipe {

namespace {

using nlohmann::json;

constexpr double kFrameGpsSlackS = 1.0;

double parse_double_at(std::string_view field, const std::string& file, int line,
                       const char* what) {
  const auto v = parse_double(field);
  if (!v || !std::isfinite(*v))
    fail_at(Errc::parse, file, line,
            std::string(what) + " is not a finite number: '" + std::string(field) + "'");
  return *v;
}

void expect_header(std::string_view got, std::string_view want, const std::string& file) {
  if (got != want)
    fail_at(Errc::parse, file, 1,
            "bad header: expected '" + std::string(want) + "', got '" + std::string(got) + "'");
}

void expect_columns(const std::vector<std::string_view>& fields, std::size_t n,
                    const std::string& file, int line) {
  if (fields.size() != n)
    fail_at(Errc::parse, file, line,
            "expected " + std::to_string(n) + " columns, got " + std::to_string(fields.size()));
}

json parse_json_line(std::string_view text, const std::string& file, int line) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail_at(Errc::parse, file, line, std::string("invalid JSON: ") + e.what());
  }
}

double json_number(const json& j, const char* key, const std::string& file, int line) {
  if (!j.contains(key) || !j.at(key).is_number())
    fail_at(Errc::parse, file, line, std::string("missing or non-numeric field: ") + key);
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v))
    fail_at(Errc::parse, file, line, std::string("non-finite field: ") + key);
  return v;
}

std::string json_string(const json& j, const char* key, const std::string& file, int line) {
  if (!j.contains(key) || !j.at(key).is_string())
    fail_at(Errc::parse, file, line, std::string("missing or non-string field: ") + key);
  return j.at(key).get<std::string>();
}

Detection parse_detection(const json& j, const std::string& file, int line) {
  Detection d;
  d.x = json_number(j, "x", file, line);
  d.y = json_number(j, "y", file, line);
  d.w = json_number(j, "w", file, line);
  d.h = json_number(j, "h", file, line);
  d.conf = json_number(j, "conf", file, line);
  if (d.w < 0.0 || d.h < 0.0)
    fail_at(Errc::parse, file, line, "detection box has negative size");
  if (d.x < 0.0 || d.y < 0.0 || d.x + d.w > 1.0 + 1e-9 || d.y + d.h > 1.0 + 1e-9)
    fail_at(Errc::parse, file, line, "detection box outside [0,1]x[0,1]");
  if (d.conf < 0.0 || d.conf > 1.0)
    fail_at(Errc::parse, file, line, "detection confidence outside [0,1]");
  return d;
}

json detection_to_json(const Detection& d) {
  return json{{"x", d.x}, {"y", d.y}, {"w", d.w}, {"h", d.h}, {"conf", d.conf}};
}

std::vector<GpsSample> read_gps(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  if (lines.empty()) fail_at(Errc::parse, file, 1, "empty file, expected a header");
  expect_header(lines[0], "time_s,lat_deg,lon_deg,fix", file);
  std::vector<GpsSample> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    const auto fields = split_csv(lines[i]);
    expect_columns(fields, 4, file, line);
    GpsSample s;
    s.time_s = parse_double_at(fields[0], file, line, "time_s");
    s.position.latitude_deg = parse_double_at(fields[1], file, line, "lat_deg");
    s.position.longitude_deg = parse_double_at(fields[2], file, line, "lon_deg");
    if (s.position.latitude_deg < -90.0 || s.position.latitude_deg > 90.0)
      fail_at(Errc::parse, file, line, "lat_deg out of range [-90, 90]");
    if (s.position.longitude_deg < -180.0 || s.position.longitude_deg > 180.0)
      fail_at(Errc::parse, file, line, "lon_deg out of range [-180, 180]");
    const auto fix = fix_from_string(fields[3]);
    if (!fix)
      fail_at(Errc::parse, file, line, "fix must be rtk|float|single, got '" + std::string(fields[3]) + "'");
    s.fix = *fix;
    if (!out.empty() && s.time_s <= out.back().time_s)
      fail_at(Errc::integrity, file, line,
              "time_s not strictly increasing at t=" + canon(s.time_s));
    out.push_back(s);
  }
  return out;
}

std::vector<OdomSample> read_odom(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  if (lines.empty()) fail_at(Errc::parse, file, 1, "empty file, expected a header");
  expect_header(lines[0], "time_s,odometer_m", file);
  std::vector<OdomSample> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    const auto fields = split_csv(lines[i]);
    expect_columns(fields, 2, file, line);
    OdomSample s;
    s.time_s = parse_double_at(fields[0], file, line, "time_s");
    s.odometer_m = parse_double_at(fields[1], file, line, "odometer_m");
    if (!out.empty()) {
      if (s.time_s <= out.back().time_s)
        fail_at(Errc::integrity, file, line,
                "time_s not strictly increasing at t=" + canon(s.time_s));
      if (s.odometer_m < out.back().odometer_m)
        fail_at(Errc::integrity, file, line,
                "odometer_m decreases at t=" + canon(s.time_s));
    }
    out.push_back(s);
  }
  if (out.empty()) fail_at(Errc::integrity, file, 1, "odometry stream is empty");
  return out;
}

std::vector<LidarSample> read_lidar(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  if (lines.empty()) fail_at(Errc::parse, file, 1, "empty file, expected a header");
  expect_header(lines[0], "time_s,left_presence,right_presence", file);
  std::vector<LidarSample> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    const auto fields = split_csv(lines[i]);
    expect_columns(fields, 3, file, line);
    LidarSample s;
    s.time_s = parse_double_at(fields[0], file, line, "time_s");
    s.left_presence = parse_double_at(fields[1], file, line, "left_presence");
    s.right_presence = parse_double_at(fields[2], file, line, "right_presence");
    if (s.left_presence < 0.0 || s.left_presence > 1.0 || s.right_presence < 0.0 ||
        s.right_presence > 1.0)
      fail_at(Errc::parse, file, line, "presence values must lie in [0, 1]");
    if (!out.empty() && s.time_s <= out.back().time_s)
      fail_at(Errc::integrity, file, line,
              "time_s not strictly increasing at t=" + canon(s.time_s));
    out.push_back(s);
  }
  if (out.empty()) fail_at(Errc::integrity, file, 1, "lidar stream is empty");
  return out;
}

std::vector<FrameRecord> read_frames(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  std::vector<FrameRecord> out;
  std::unordered_set<std::string> seen_ids;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    if (lines[i].empty()) fail_at(Errc::parse, file, line, "blank line");
    const json j = parse_json_line(lines[i], file, line);
    FrameRecord f;
    f.frame_id = json_string(j, "frame_id", file, line);
    f.time_s = json_number(j, "time_s", file, line);
    const auto side = side_from_string(json_string(j, "side", file, line));
    if (!side) fail_at(Errc::parse, file, line, "side must be left|right");
    f.side = *side;
    if (j.contains("image_path")) f.image_path = json_string(j, "image_path", file, line);
    if (j.contains("detections")) {
      if (!j.at("detections").is_array())
        fail_at(Errc::parse, file, line, "detections must be an array");
      f.has_detections = true;
      for (const auto& dj : j.at("detections")) f.detections.push_back(parse_detection(dj, file, line));
    }
    if (!seen_ids.insert(f.frame_id).second)
      fail_at(Errc::integrity, file, line, "duplicate frame_id '" + f.frame_id + "'");
    if (!out.empty() && f.time_s < out.back().time_s)
      fail_at(Errc::integrity, file, line, "time_s decreases at t=" + canon(f.time_s));
    out.push_back(std::move(f));
  }
  if (out.empty()) fail_at(Errc::integrity, file, 1, "frame stream is empty");
  return out;
}

void check_frame_alignment(const Collection& c, const std::string& file) {
  if (c.gps.empty()) return;
  const double lo = c.gps.front().time_s - kFrameGpsSlackS;
  const double hi = c.gps.back().time_s + kFrameGpsSlackS;
  for (std::size_t i = 0; i < c.frames.size(); ++i) {
    const double t = c.frames[i].time_s;
    if (t < lo || t > hi)
      fail_at(Errc::integrity, file, static_cast<int>(i) + 1,
              "frame at t=" + canon(t) + " lies outside the GPS window [" + canon(lo) + ", " +
                  canon(hi) + "]");
  }
}

}  // namespace

const char* to_string(Side s) { return s == Side::left ? "left" : "right"; }

std::optional<Side> side_from_string(std::string_view s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  return std::nullopt;
}

const char* to_string(FixQuality q) {
  switch (q) {
    case FixQuality::rtk: return "rtk";
    case FixQuality::flt: return "float";
    case FixQuality::single: return "single";
  }
  return "single";
}

std::optional<FixQuality> fix_from_string(std::string_view s) {
  if (s == "rtk") return FixQuality::rtk;
  if (s == "float") return FixQuality::flt;
  if (s == "single") return FixQuality::single;
  return std::nullopt;
}

const char* to_string(Direction d) {
  return d == Direction::increasing ? "increasing" : "decreasing";
}

std::optional<Direction> direction_from_string(std::string_view s) {
  if (s == "increasing") return Direction::increasing;
  if (s == "decreasing") return Direction::decreasing;
  return std::nullopt;
}

CollectionManifest read_manifest(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string text = read_file_or_fail(path);
  const json j = parse_json_line(text, file, 1);
  CollectionManifest m;
  m.collection_id = json_string(j, "collection_id", file, 1);
  if (m.collection_id.empty()) fail_at(Errc::parse, file, 1, "collection_id is empty");
  m.pass_index = static_cast<int>(json_number(j, "pass_index", file, 1));
  if (m.pass_index < 0) fail_at(Errc::parse, file, 1, "pass_index must be >= 0");
  const auto dir = direction_from_string(json_string(j, "direction", file, 1));
  if (!dir) fail_at(Errc::parse, file, 1, "direction must be increasing|decreasing");
  m.direction = *dir;
  if (j.contains("layout_ref")) m.layout_ref = json_string(j, "layout_ref", file, 1);

  const auto read_side = [&](const char* col, const char* start, const char* end)
      -> std::optional<SideMeta> {
    const bool any = j.contains(col) || j.contains(start) || j.contains(end);
    if (!any) return std::nullopt;
    SideMeta s;
    s.column_index = static_cast<int>(json_number(j, col, file, 1));
    s.start_plot_id = static_cast<int>(json_number(j, start, file, 1));
    s.end_plot_id = static_cast<int>(json_number(j, end, file, 1));
    if (s.column_index < 0) fail_at(Errc::parse, file, 1, std::string(col) + " must be >= 0");
    return s;
  };
  m.left = read_side("left_column_index", "left_start_plot_id", "left_end_plot_id");
  m.right = read_side("right_column_index", "right_start_plot_id", "right_end_plot_id");
  if (!m.left && !m.right)
    fail_at(Errc::integrity, file, 1, "manifest records no observed side (left or right required)");
  return m;
}

void write_manifest(const CollectionManifest& m, const std::filesystem::path& path) {
  json j{
      {"collection_id", m.collection_id},
      {"pass_index", m.pass_index},
      {"direction", to_string(m.direction)},
  };
  if (!m.layout_ref.empty()) j["layout_ref"] = m.layout_ref;
  if (m.left) {
    j["left_column_index"] = m.left->column_index;
    j["left_start_plot_id"] = m.left->start_plot_id;
    j["left_end_plot_id"] = m.left->end_plot_id;
  }
  if (m.right) {
    j["right_column_index"] = m.right->column_index;
    j["right_start_plot_id"] = m.right->start_plot_id;
    j["right_end_plot_id"] = m.right->end_plot_id;
  }
  write_file(path, j.dump(2) + "\n");
}

Collection read_collection(const std::filesystem::path& dir) {
  Collection c;
  c.manifest = read_manifest(dir / "manifest.json");
  c.gps = read_gps(dir / "gps.csv");
  c.odometry = read_odom(dir / "odom.csv");
  c.lidar = read_lidar(dir / "lidar.csv");
  c.frames = read_frames(dir / "frames.jsonl");
  check_frame_alignment(c, (dir / "frames.jsonl").string());
  return c;
}

void write_collection(const Collection& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_manifest(c.manifest, dir / "manifest.json");

  std::string gps = "time_s,lat_deg,lon_deg,fix\n";
  for (const auto& s : c.gps) {
    gps += canon(s.time_s);
    gps += ',';
    gps += canon(s.position.latitude_deg);
    gps += ',';
    gps += canon(s.position.longitude_deg);
    gps += ',';
    gps += to_string(s.fix);
    gps += '\n';
  }
  write_file(dir / "gps.csv", gps);

  std::string odom = "time_s,odometer_m\n";
  for (const auto& s : c.odometry) {
    odom += canon(s.time_s);
    odom += ',';
    odom += canon(s.odometer_m);
    odom += '\n';
  }
  write_file(dir / "odom.csv", odom);

  std::string lidar = "time_s,left_presence,right_presence\n";
  for (const auto& s : c.lidar) {
    lidar += canon(s.time_s);
    lidar += ',';
    lidar += canon(s.left_presence);
    lidar += ',';
    lidar += canon(s.right_presence);
    lidar += '\n';
  }
  write_file(dir / "lidar.csv", lidar);

  std::string frames;
  for (const auto& f : c.frames) {
    json j{{"frame_id", f.frame_id}, {"time_s", f.time_s}, {"side", to_string(f.side)}};
    if (!f.image_path.empty()) j["image_path"] = f.image_path;
    if (f.has_detections) {
      json arr = json::array();
      for (const auto& d : f.detections) arr.push_back(detection_to_json(d));
      j["detections"] = arr;
    }
    frames += j.dump();
    frames += '\n';
  }
  write_file(dir / "frames.jsonl", frames);
}

std::vector<FrameDetections> read_detections_file(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  std::vector<FrameDetections> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    if (lines[i].empty()) fail_at(Errc::parse, file, line, "blank line");
    const json j = parse_json_line(lines[i], file, line);
    FrameDetections fd;
    fd.frame_id = json_string(j, "frame_id", file, line);
    if (!j.contains("detections") || !j.at("detections").is_array())
      fail_at(Errc::parse, file, line, "missing detections array");
    for (const auto& dj : j.at("detections")) {
      // Raw-frame boxes: bounds are validated but not renormalized here;
      // apply_crop decides what survives.
      Detection d;
      d.x = json_number(dj, "x", file, line);
      d.y = json_number(dj, "y", file, line);
      d.w = json_number(dj, "w", file, line);
      d.h = json_number(dj, "h", file, line);
      d.conf = json_number(dj, "conf", file, line);
      fd.detections.push_back(d);
    }
    out.push_back(std::move(fd));
  }
  return out;
}

void write_detections_file(const std::vector<FrameDetections>& v,
                           const std::filesystem::path& path) {
  std::string text;
  for (const auto& fd : v) {
    json arr = json::array();
    for (const auto& d : fd.detections) arr.push_back(detection_to_json(d));
    json j{{"frame_id", fd.frame_id}, {"detections", arr}};
    text += j.dump();
    text += '\n';
  }
  write_file(path, text);
}

std::vector<std::string> validate_metadata(const Collection& c, const FieldLayout& layout) {
  std::vector<std::string> warnings;
  const CollectionManifest& m = c.manifest;

  // Layout-level checks on the recorded plot-ID spans.
  for (const Side side : {Side::left, Side::right}) {
    const auto& meta = m.side(side);
    if (!meta) continue;
    const char* name = to_string(side);
    if (meta->column_index >= layout.n_columns) {
      warnings.push_back(std::string("plot-id-span: ") + name + " column index " +
                         std::to_string(meta->column_index) + " outside layout");
      continue;
    }
    PlotAddress start_addr;
    PlotAddress end_addr;
    try {
      start_addr = invert_id(layout, meta->start_plot_id);
      end_addr = invert_id(layout, meta->end_plot_id);
    } catch (const Error&) {
      warnings.push_back(std::string("plot-id-span: ") + name + " start/end ids outside layout");
      continue;
    }
    if (start_addr.column_index != meta->column_index ||
        end_addr.column_index != meta->column_index) {
      warnings.push_back(std::string("plot-id-span: ") + name + " ids map to column " +
                         std::to_string(start_addr.column_index) + ", manifest claims " +
                         std::to_string(meta->column_index));
      continue;
    }
    if (std::abs(meta->end_plot_id - meta->start_plot_id) != layout.n_ranges - 1)
      warnings.push_back(std::string("plot-id-span: ") + name + " span |" +
                         std::to_string(meta->end_plot_id) + " - " +
                         std::to_string(meta->start_plot_id) + "| != n_ranges - 1");
    const bool id_increasing = end_addr.range_index > start_addr.range_index;
    if (layout.n_ranges > 1 &&
        id_increasing != (m.direction == Direction::increasing))
      warnings.push_back(std::string("plot-id-span: ") + name +
                         " start/end order contradicts direction " + to_string(m.direction));
  }

  // Trajectory checks need usable GPS.
  std::size_t rtk = 0;
  for (const auto& s : c.gps)
    if (s.fix == FixQuality::rtk) ++rtk;
  if (c.gps.size() < 2 || rtk * 2 < c.gps.size()) {
    warnings.push_back("gps-skipped: GPS verification skipped (stream absent or low quality)");
    return warnings;
  }

  const LocalPoint au = along_unit(layout);
  const LocalPoint cu = cross_unit(layout);
  double along_first = 0.0;
  double along_last = 0.0;
  double cross_sum = 0.0;
  for (std::size_t i = 0; i < c.gps.size(); ++i) {
    const LocalPoint lp = project_to_local(layout.origin, c.gps[i].position);
    const double along = lp.east_m * au.east_m + lp.north_m * au.north_m;
    const double cross = lp.east_m * cu.east_m + lp.north_m * cu.north_m;
    if (i == 0) along_first = along;
    along_last = along;
    cross_sum += cross;
  }
  const double mean_cross = cross_sum / static_cast<double>(c.gps.size());

  const bool traj_increasing = along_last > along_first;
  if (traj_increasing != (m.direction == Direction::increasing))
    warnings.push_back(std::string("direction: manifest says ") + to_string(m.direction) +
                       " but the trajectory moves the other way");

  // Corridor position: the robot drives half a row spacing off the
  // observed column, on the side the camera faces.
  const double half = 0.5 * layout.row_spacing_m;
  const double dir_sign = m.direction == Direction::increasing ? 1.0 : -1.0;
  double expected_sum = 0.0;
  int expected_n = 0;
  if (m.left) {
    expected_sum += column_cross_m(layout, m.left->column_index) + dir_sign * half;
    ++expected_n;
  }
  if (m.right) {
    expected_sum += column_cross_m(layout, m.right->column_index) - dir_sign * half;
    ++expected_n;
  }
  const double expected_cross = expected_sum / expected_n;
  if (std::abs(mean_cross - expected_cross) > half)
    warnings.push_back("lateral-offset: trajectory runs " + canon(mean_cross) +
                       " m cross-row, expected " + canon(expected_cross) +
                       " m for the claimed columns");
  return warnings;
}

}  // namespace podpipe
