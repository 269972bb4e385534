#include "podpipe/frames.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "podpipe/errors.hpp"
#include "podpipe/series.hpp"
#include "podpipe/textio.hpp"

namespace podpipe {

namespace {

using nlohmann::json;

constexpr double kSpacingSlack = 0.95;

}  // namespace

int default_frame_count(double plot_length_m, double footprint_m) {
  if (!(plot_length_m > 0.0) || !(footprint_m > 0.0))
    fail(Errc::validation, "plot length and footprint must be > 0");
  return static_cast<int>(std::ceil(plot_length_m / footprint_m));
}

FrameSelection select_frames(const PlotSlice& slice, const std::vector<FrameRecord>& frames,
                             const std::vector<OdomSample>& odometry, int k,
                             double footprint_m) {
  if (k < 1) fail(Errc::validation, "frame count k must be >= 1");
  if (!(footprint_m > 0.0)) fail(Errc::validation, "footprint_m must be > 0");
  if (odometry.empty()) fail(Errc::validation, "odometry stream is empty");

  std::vector<double> ot, od;
  ot.reserve(odometry.size());
  od.reserve(odometry.size());
  for (const auto& s : odometry) {
    ot.push_back(s.time_s);
    od.push_back(s.odometer_m);
  }

  struct Candidate {
    const FrameRecord* frame;
    double offset_m;
    bool used;
  };
  std::vector<Candidate> candidates;
  for (const auto& f : frames) {
    if (f.side != slice.side) continue;
    if (f.time_s < slice.t_start_s || f.time_s > slice.t_end_s) continue;
    candidates.push_back({&f, linear_interp(ot, od, f.time_s) - slice.d_start_m, false});
  }
  if (candidates.empty())
    fail(Errc::empty_selection, "plot " + std::to_string(slice.plot_id) + " side " +
                                    to_string(slice.side) + ": no frames in slice window");

  FrameSelection sel;
  sel.plot_id = slice.plot_id;
  sel.side = slice.side;
  sel.footprint_m = footprint_m;

  const double length_m = slice.d_end_m - slice.d_start_m;
  const double min_gap = footprint_m * kSpacingSlack;
  for (int i = 0; i < k; ++i) {
    const double target = (i + 0.5) / k * length_m;
    Candidate* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (auto& c : candidates) {
      if (c.used) continue;
      const double dist = std::abs(c.offset_m - target);
      const bool closer =
          dist < best_dist ||
          (dist == best_dist && best &&
           (c.offset_m < best->offset_m ||
            (c.offset_m == best->offset_m && c.frame->frame_id < best->frame->frame_id)));
      if (closer) {
        best = &c;
        best_dist = dist;
      }
    }
    if (!best) break;  // every frame consumed
    bool spaced = true;
    for (const auto& s : sel.selected) {
      if (std::abs(best->offset_m - s.odometer_m) < min_gap) {
        spaced = false;
        break;
      }
    }
    if (!spaced) {
      sel.notes.push_back("spacing-skip: target " + canon(target) + " nearest frame " +
                          best->frame->frame_id + " at offset " + canon(best->offset_m) +
                          " would overlap a selected footprint");
      continue;
    }
    best->used = true;
    sel.selected.push_back({best->frame->frame_id, best->offset_m, target});
  }

  std::sort(sel.selected.begin(), sel.selected.end(),
            [](const SelectedFrame& a, const SelectedFrame& b) {
              if (a.odometer_m != b.odometer_m) return a.odometer_m < b.odometer_m;
              return a.frame_id < b.frame_id;
            });
  return sel;
}

void validate(const CropSpec& spec) {
  const auto check = [](double v, const char* name) {
    if (!(v >= 0.0) || v >= 0.5)
      fail(Errc::validation, std::string(name) + " must lie in [0, 0.5)");
  };
  check(spec.left_frac, "left_frac");
  check(spec.right_frac, "right_frac");
  check(spec.top_frac, "top_frac");
  check(spec.bottom_frac, "bottom_frac");
}

std::optional<Detection> apply_crop(const CropSpec& spec, const Detection& box) {
  validate(spec);
  if (!(box.w > 0.0) || !(box.h > 0.0))
    fail(Errc::validation, "detection box must have positive width and height");
  const double x0 = spec.left_frac;
  const double x1 = 1.0 - spec.right_frac;
  const double y0 = spec.top_frac;
  const double y1 = 1.0 - spec.bottom_frac;
  if (box.x < x0 || box.x + box.w > x1 || box.y < y0 || box.y + box.h > y1)
    return std::nullopt;
  Detection out = box;
  out.x = (box.x - x0) / (x1 - x0);
  out.w = box.w / (x1 - x0);
  out.y = (box.y - y0) / (y1 - y0);
  out.h = box.h / (y1 - y0);
  return out;
}

std::vector<FrameSelection> read_selections(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  std::vector<FrameSelection> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail_at(Errc::parse, file, line, "malformed selection record");
    try {
      FrameSelection s;
      s.plot_id = j.at("plot_id").get<int>();
      const auto side = side_from_string(j.at("side").get<std::string>());
      if (!side) fail_at(Errc::parse, file, line, "bad side");
      s.side = *side;
      s.footprint_m = j.at("footprint_m").get<double>();
      for (const auto& e : j.at("selected")) {
        SelectedFrame f;
        f.frame_id = e.at("frame_id").get<std::string>();
        f.odometer_m = e.at("odometer_m").get<double>();
        f.target_m = e.at("target_m").get<double>();
        s.selected.push_back(std::move(f));
      }
      if (j.contains("notes"))
        for (const auto& e : j.at("notes")) s.notes.push_back(e.get<std::string>());
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      fail_at(Errc::parse, file, line, std::string("selection record: ") + e.what());
    }
  }
  return out;
}

void write_selections(const std::vector<FrameSelection>& selections,
                      const std::filesystem::path& path) {
  std::string text;
  for (const auto& s : selections) {
    json j;
    j["plot_id"] = s.plot_id;
    j["side"] = to_string(s.side);
    j["footprint_m"] = s.footprint_m;
    json arr = json::array();
    for (const auto& f : s.selected) {
      json e;
      e["frame_id"] = f.frame_id;
      e["odometer_m"] = f.odometer_m;
      e["target_m"] = f.target_m;
      arr.push_back(std::move(e));
    }
    j["selected"] = std::move(arr);
    if (!s.notes.empty()) j["notes"] = s.notes;
    text += j.dump();
    text += '\n';
  }
  write_file(path, text);
}

}  // namespace podpipe
