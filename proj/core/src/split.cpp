#include "podpipe/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

#include "podpipe/errors.hpp"
#include "podpipe/series.hpp"
#include "podpipe/textio.hpp"

namespace podpipe {

namespace {

using nlohmann::json;

/// Projected along-column coordinate per GPS sample.
std::vector<double> project_along(const Collection& c, const FieldLayout& layout) {
  const LocalPoint au = along_unit(layout);
  std::vector<double> along;
  along.reserve(c.gps.size());
  for (const auto& s : c.gps) {
    const LocalPoint lp = project_to_local(layout.origin, s.position);
    along.push_back(lp.east_m * au.east_m + lp.north_m * au.north_m);
  }
  return along;
}

std::vector<double> gps_times(const Collection& c) {
  std::vector<double> t;
  t.reserve(c.gps.size());
  for (const auto& s : c.gps) t.push_back(s.time_s);
  return t;
}

std::vector<double> odom_times(const Collection& c) {
  std::vector<double> t;
  t.reserve(c.odometry.size());
  for (const auto& s : c.odometry) t.push_back(s.time_s);
  return t;
}

std::vector<double> odom_values(const Collection& c) {
  std::vector<double> d;
  d.reserve(c.odometry.size());
  for (const auto& s : c.odometry) d.push_back(s.odometer_m);
  return d;
}

/// First time the series v (indexed by t) reaches `target` from below.
/// Assumes v is near-monotone increasing; the cursor only moves forward so
/// repeated calls with ascending targets cost O(n) total.
struct CrossingScan {
  std::span<const double> t;
  std::span<const double> v;
  std::size_t j = 0;

  std::optional<double> first_at(double target) {
    const std::size_t n = v.size();
    if (n == 0) return std::nullopt;
    if (v[0] >= target) return std::nullopt;  // started at or past the target
    while (j + 1 < n && v[j + 1] < target) ++j;
    if (j + 1 >= n) return std::nullopt;  // never reached
    const double dv = v[j + 1] - v[j];
    const double f = dv > 0.0 ? (target - v[j]) / dv : 1.0;
    return t[j] + f * (t[j + 1] - t[j]);
  }
};

struct RangeWindow {
  int range_index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double coverage = 0.0;
};

/// Intersects a near-monotone along-track series with plot boundaries.
/// Iterates ranges in the order the robot meets them and mirrors the
/// coordinate for decreasing passes, so the forward-only crossing scan
/// always sees ascending targets.
std::vector<RangeWindow> windows_in_traversal_order(std::span<const double> t,
                                                    std::span<const double> along,
                                                    const FieldLayout& layout,
                                                    double coverage_threshold) {
  const std::size_t n = along.size();
  std::vector<RangeWindow> out;
  if (n < 2) return out;
  const bool increasing = along[n - 1] >= along[0];

  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = increasing ? along[i] : -along[i];
  const double v_first = v.front();
  const double v_last = v.back();

  CrossingScan scan{t, v, 0};
  for (int k = 0; k < layout.n_ranges; ++k) {
    const int range = increasing ? k : layout.n_ranges - 1 - k;
    const Interval iv = plot_interval(layout, range);
    const double a = increasing ? iv.start_m : -iv.end_m;
    const double b = increasing ? iv.end_m : -iv.start_m;

    const double covered = std::min(b, v_last) - std::max(a, v_first);
    const double coverage = std::clamp(covered / (b - a), 0.0, 1.0);
    if (coverage < coverage_threshold) continue;

    const auto enter = scan.first_at(a);
    const auto exit = scan.first_at(b);
    RangeWindow w;
    w.range_index = range;
    w.t_start = enter ? *enter : t.front();
    w.t_end = exit ? *exit : t.back();
    w.coverage = coverage;
    if (w.t_end > w.t_start) out.push_back(w);
  }
  return out;
}

void sort_slices(std::vector<PlotSlice>& slices) {
  std::sort(slices.begin(), slices.end(), [](const PlotSlice& a, const PlotSlice& b) {
    if (a.side != b.side) return a.side < b.side;
    return a.t_start_s < b.t_start_s;
  });
}

struct Run {
  std::size_t first = 0;  // first on-sample
  std::size_t last = 0;   // last on-sample (inclusive)
};

}  // namespace

const char* to_string(SplitMethod m) {
  return m == SplitMethod::gps ? "gps" : "lidar";
}

std::optional<SplitMethod> split_method_from_string(std::string_view s) {
  if (s == "gps") return SplitMethod::gps;
  if (s == "lidar") return SplitMethod::lidar;
  return std::nullopt;
}

std::vector<PlotSlice> split_by_gps(const Collection& c, const FieldLayout& layout,
                                    const SplitOptions& options) {
  validate(layout);
  if (c.gps.size() < 2)
    fail(Errc::mode_unavailable,
         "gps split needs at least 2 fixes, collection '" + c.manifest.collection_id +
             "' has " + std::to_string(c.gps.size()));
  std::size_t rtk = 0;
  for (const auto& s : c.gps)
    if (s.fix == FixQuality::rtk) ++rtk;
  const double rtk_frac = static_cast<double>(rtk) / static_cast<double>(c.gps.size());
  if (rtk_frac < options.min_rtk_fraction)
    fail(Errc::mode_unavailable,
         "gps split needs >= " + canon(options.min_rtk_fraction) + " rtk fraction, got " +
             canon(rtk_frac));
  if (c.odometry.empty())
    fail(Errc::mode_unavailable, "gps split needs odometry for slice windows");

  const std::vector<double> t = gps_times(c);
  const std::vector<double> along = project_along(c, layout);
  const std::vector<double> smoothed = moving_average(along, options.smoothing_window);

  const std::vector<RangeWindow> windows =
      windows_in_traversal_order(t, smoothed, layout, options.coverage_threshold);

  const std::vector<double> ot = odom_times(c);
  const std::vector<double> od = odom_values(c);

  std::vector<PlotSlice> slices;
  for (const Side side : {Side::left, Side::right}) {
    const auto& meta = c.manifest.side(side);
    if (!meta) continue;
    for (const auto& w : windows) {
      PlotSlice s;
      s.plot_id = serpentine_id(layout, meta->column_index, w.range_index);
      s.side = side;
      s.t_start_s = w.t_start;
      s.t_end_s = w.t_end;
      s.d_start_m = linear_interp(ot, od, w.t_start);
      s.d_end_m = linear_interp(ot, od, w.t_end);
      s.method = SplitMethod::gps;
      std::size_t in_window = 0, in_window_rtk = 0;
      for (const auto& g : c.gps) {
        if (g.time_s < w.t_start || g.time_s > w.t_end) continue;
        ++in_window;
        if (g.fix == FixQuality::rtk) ++in_window_rtk;
      }
      s.confidence = in_window == 0 ? 0.0
                                    : static_cast<double>(in_window_rtk) /
                                          static_cast<double>(in_window);
      if (s.d_end_m > s.d_start_m) slices.push_back(s);
    }
  }
  sort_slices(slices);
  return slices;
}

std::vector<PlotSlice> split_by_lidar(const Collection& c, const FieldLayout& layout,
                                      const SplitOptions& options) {
  validate(layout);
  if (c.lidar.empty())
    fail(Errc::mode_unavailable,
         "lidar split needs a presence stream, collection '" + c.manifest.collection_id +
             "' has none");
  if (c.odometry.empty())
    fail(Errc::mode_unavailable, "lidar split needs odometry to measure gaps");
  if (!(layout.alley_length_m > 0.0))
    fail(Errc::mode_unavailable, "alley length is 0, lidar gaps are undetectable");

  const std::vector<double> ot = odom_times(c);
  const std::vector<double> od = odom_values(c);

  std::vector<double> lt, ld;
  lt.reserve(c.lidar.size());
  ld.reserve(c.lidar.size());
  for (const auto& s : c.lidar) {
    lt.push_back(s.time_s);
    ld.push_back(linear_interp(ot, od, s.time_s));
  }

  const double min_gap_m = 0.5 * layout.alley_length_m;
  const double off_threshold = options.on_threshold - options.hysteresis;

  std::vector<PlotSlice> slices;
  for (const Side side : {Side::left, Side::right}) {
    const auto& meta = c.manifest.side(side);
    if (!meta) continue;

    std::vector<bool> on(c.lidar.size());
    bool state = false;
    for (std::size_t i = 0; i < c.lidar.size(); ++i) {
      const double p = side == Side::left ? c.lidar[i].left_presence : c.lidar[i].right_presence;
      if (p >= options.on_threshold)
        state = true;
      else if (p < off_threshold)
        state = false;
      on[i] = state;
    }

    std::vector<Run> runs;
    for (std::size_t i = 0; i < on.size(); ++i) {
      if (!on[i]) continue;
      if (!runs.empty() && runs.back().last + 1 == i) {
        runs.back().last = i;
      } else if (!runs.empty() && ld[i] - ld[runs.back().last] < min_gap_m) {
        runs.back().last = i;  // bridge a sub-alley dropout
      } else {
        runs.push_back({i, i});
      }
    }

    if (static_cast<int>(runs.size()) != layout.n_ranges)
      fail(Errc::segmentation_mismatch,
           "collection '" + c.manifest.collection_id + "' side " + to_string(side) +
               ": expected " + std::to_string(layout.n_ranges) + " presence runs, found " +
               std::to_string(runs.size()));

    NeumaierSum gap_sum;
    std::size_t gap_n = 0;
    for (std::size_t i = 0; i < on.size(); ++i) {
      if (on[i]) continue;
      gap_sum.add(side == Side::left ? c.lidar[i].left_presence : c.lidar[i].right_presence);
      ++gap_n;
    }
    const double gap_mean = gap_n == 0 ? 0.0 : gap_sum.value() / static_cast<double>(gap_n);

    const bool forward = c.manifest.direction == Direction::increasing;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const Run& run = runs[k];
      const int range = forward ? static_cast<int>(k)
                                : layout.n_ranges - 1 - static_cast<int>(k);
      PlotSlice s;
      s.plot_id = serpentine_id(layout, meta->column_index, range);
      s.side = side;
      s.t_start_s = run.first > 0 ? 0.5 * (lt[run.first - 1] + lt[run.first]) : lt[run.first];
      s.t_end_s = run.last + 1 < lt.size() ? 0.5 * (lt[run.last] + lt[run.last + 1])
                                           : lt[run.last];
      s.d_start_m = run.first > 0 ? 0.5 * (ld[run.first - 1] + ld[run.first]) : ld[run.first];
      s.d_end_m = run.last + 1 < ld.size() ? 0.5 * (ld[run.last] + ld[run.last + 1])
                                           : ld[run.last];
      NeumaierSum run_sum;
      for (std::size_t i = run.first; i <= run.last; ++i)
        run_sum.add(side == Side::left ? c.lidar[i].left_presence : c.lidar[i].right_presence);
      const double run_mean = run_sum.value() / static_cast<double>(run.last - run.first + 1);
      s.confidence = std::clamp(run_mean - gap_mean, 0.0, 1.0);
      s.method = SplitMethod::lidar;
      if (s.t_end_s > s.t_start_s && s.d_end_m > s.d_start_m) slices.push_back(s);
    }
  }
  sort_slices(slices);
  return slices;
}

VerifyReport assign_and_verify(const std::vector<PlotSlice>& slices, const Collection& c,
                               const FieldLayout& layout) {
  VerifyReport report;
  if (slices.empty()) return report;
  validate(layout);

  std::vector<double> t, along;
  if (!c.gps.empty()) {
    t = gps_times(c);
    along = project_along(c, layout);
  }
  const LocalPoint au = along_unit(layout);
  const LocalPoint cu = cross_unit(layout);

  for (const Side side : {Side::left, Side::right}) {
    std::vector<const PlotSlice*> side_slices;
    for (const auto& s : slices)
      if (s.side == side) side_slices.push_back(&s);
    if (side_slices.empty()) continue;
    std::sort(side_slices.begin(), side_slices.end(),
              [](const PlotSlice* a, const PlotSlice* b) { return a->t_start_s < b->t_start_s; });

    const auto& meta = c.manifest.side(side);
    if (!meta) {
      report.flags.push_back(std::string("manifest: side ") + to_string(side) +
                             " has slices but no manifest entry");
      continue;
    }

    std::vector<int> ranges;
    bool ids_ok = true;
    for (const PlotSlice* s : side_slices) {
      PlotAddress addr;
      try {
        addr = invert_id(layout, s->plot_id);
      } catch (const Error&) {
        report.flags.push_back("plot-id: slice plot " + std::to_string(s->plot_id) +
                               " is not a valid id for this layout");
        ids_ok = false;
        continue;
      }
      if (addr.column_index != meta->column_index) {
        report.flags.push_back("plot-id: slice plot " + std::to_string(s->plot_id) +
                               " belongs to column " + std::to_string(addr.column_index) +
                               ", manifest side " + to_string(side) + " claims column " +
                               std::to_string(meta->column_index));
        ids_ok = false;
        continue;
      }
      ranges.push_back(addr.range_index);
    }

    if (ids_ok && ranges.size() >= 2) {
      const bool observed_increasing = ranges.back() > ranges.front();
      bool monotone = true;
      for (std::size_t i = 1; i < ranges.size(); ++i) {
        if (observed_increasing ? ranges[i] <= ranges[i - 1] : ranges[i] >= ranges[i - 1])
          monotone = false;
      }
      if (!monotone) {
        report.flags.push_back(std::string("plot-id-order: side ") + to_string(side) +
                               " slice plot ids are not monotone in time");
      } else {
        const bool declared_increasing = c.manifest.direction == Direction::increasing;
        if (observed_increasing != declared_increasing)
          report.flags.push_back(
              std::string("direction-mismatch: side ") + to_string(side) +
              " slices traverse ranges in " +
              (observed_increasing ? "increasing" : "decreasing") +
              " order but the manifest declares " + to_string(c.manifest.direction));
      }
    }

    const double lo = 0.8 * layout.plot_length_m;
    const double hi = 1.2 * layout.plot_length_m;
    for (const PlotSlice* s : side_slices) {
      const double len = s->d_end_m - s->d_start_m;
      if (len < lo || len > hi)
        report.flags.push_back("odometer-window: plot " + std::to_string(s->plot_id) + " side " +
                               to_string(side) + " length " + canon(len) + " outside [" +
                               canon(lo) + ", " + canon(hi) + "]");
    }

    if (!c.gps.empty()) {
      for (const PlotSlice* s : side_slices) {
        PlotAddress addr;
        try {
          addr = invert_id(layout, s->plot_id);
        } catch (const Error&) {
          continue;
        }
        NeumaierSum sum;
        std::size_t n = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (t[i] < s->t_start_s || t[i] > s->t_end_s) continue;
          sum.add(along[i]);
          ++n;
        }
        if (n == 0) continue;
        const double mean_along = sum.value() / static_cast<double>(n);
        const double cross = column_cross_m(layout, addr.column_index);
        const LocalPoint lp{mean_along * au.east_m + cross * cu.east_m,
                            mean_along * au.north_m + cross * cu.north_m};
        report.centers.push_back({s->plot_id, side, unproject_from_local(layout.origin, lp)});
      }
    }
  }

  std::sort(report.centers.begin(), report.centers.end(),
            [](const PlotCenterEstimate& a, const PlotCenterEstimate& b) {
              if (a.plot_id != b.plot_id) return a.plot_id < b.plot_id;
              return a.side < b.side;
            });
  return report;
}

std::vector<PlotSlice> read_slices(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  std::vector<PlotSlice> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail_at(Errc::parse, file, line, "malformed slice record");
    try {
      PlotSlice s;
      s.plot_id = j.at("plot_id").get<int>();
      const auto side = side_from_string(j.at("side").get<std::string>());
      const auto method = split_method_from_string(j.at("method").get<std::string>());
      if (!side || !method) fail_at(Errc::parse, file, line, "bad side or method");
      s.side = *side;
      s.method = *method;
      s.t_start_s = j.at("t_start_s").get<double>();
      s.t_end_s = j.at("t_end_s").get<double>();
      s.d_start_m = j.at("d_start_m").get<double>();
      s.d_end_m = j.at("d_end_m").get<double>();
      s.confidence = j.at("confidence").get<double>();
      if (!(s.t_start_s < s.t_end_s) || !(s.d_start_m < s.d_end_m))
        fail_at(Errc::integrity, file, line, "slice windows must be nonempty");
      out.push_back(s);
    } catch (const json::exception& e) {
      fail_at(Errc::parse, file, line, std::string("slice record: ") + e.what());
    }
  }
  return out;
}

void write_slices(const std::vector<PlotSlice>& slices, const std::filesystem::path& path) {
  std::string text;
  for (const auto& s : slices) {
    json j;
    j["plot_id"] = s.plot_id;
    j["side"] = to_string(s.side);
    j["method"] = to_string(s.method);
    j["t_start_s"] = s.t_start_s;
    j["t_end_s"] = s.t_end_s;
    j["d_start_m"] = s.d_start_m;
    j["d_end_m"] = s.d_end_m;
    j["confidence"] = s.confidence;
    text += j.dump();
    text += '\n';
  }
  write_file(path, text);
}

void write_plot_centers(const std::vector<PlotCenterEstimate>& centers,
                        const std::filesystem::path& path) {
  std::map<int, std::pair<NeumaierSum, NeumaierSum>> by_plot;
  std::map<int, std::size_t> counts;
  for (const auto& c : centers) {
    by_plot[c.plot_id].first.add(c.position.latitude_deg);
    by_plot[c.plot_id].second.add(c.position.longitude_deg);
    ++counts[c.plot_id];
  }
  std::string text = "plot_id,lat_deg,lon_deg\n";
  for (const auto& [plot_id, sums] : by_plot) {
    const double n = static_cast<double>(counts[plot_id]);
    text += std::to_string(plot_id);
    text += ',';
    text += canon(sums.first.value() / n);
    text += ',';
    text += canon(sums.second.value() / n);
    text += '\n';
  }
  write_file(path, text);
}

}  // namespace podpipe
