#include "podpipe/count.hpp"

#include <algorithm>
#include <cmath>

#include "podpipe/errors.hpp"
#include "podpipe/series.hpp"
#include "podpipe/textio.hpp"

namespace podpipe {

namespace {

constexpr double kLowCoverage = 0.8;
constexpr double kCoverageFloor = 0.5;
// Footprint edges survive file I/O with sub-ulp error; treat near-complete
// unions as complete so integer counts stay integers.
constexpr double kCoverageSnap = 1.0 - 1e-9;

double footprint_coverage(const FrameSelection& sel, double plot_length_m) {
  // selected is sorted by odometer, so the clipped intervals are too.
  double covered = 0.0;
  double cursor = 0.0;
  for (const auto& f : sel.selected) {
    const double lo = std::max(f.odometer_m - 0.5 * sel.footprint_m, cursor);
    const double hi = std::min(f.odometer_m + 0.5 * sel.footprint_m, plot_length_m);
    if (hi > lo) covered += hi - lo;
    cursor = std::max(cursor, hi);
  }
  double frac = covered / plot_length_m;
  if (frac >= kCoverageSnap) frac = 1.0;
  return std::clamp(frac, 0.0, 1.0);
}

}  // namespace

PlotObservation aggregate_plot(const FrameSelection& selection,
                               const std::vector<int>& frame_counts, double calibration_c,
                               double plot_length_m) {
  if (selection.selected.empty())
    fail(Errc::empty_selection, "plot " + std::to_string(selection.plot_id) + " side " +
                                    to_string(selection.side) + ": selection is empty");
  if (frame_counts.size() != selection.selected.size())
    fail(Errc::validation, "frame_counts must align with the selection");
  if (!(calibration_c > 0.0)) fail(Errc::validation, "calibration_c must be > 0");
  if (!(plot_length_m > 0.0)) fail(Errc::validation, "plot_length_m must be > 0");

  PlotObservation obs;
  obs.plot_id = selection.plot_id;
  obs.side = selection.side;
  obs.frame_counts = frame_counts;
  for (int n : frame_counts) {
    if (n < 0) fail(Errc::validation, "frame counts must be >= 0");
    obs.raw_count += n;
  }
  obs.coverage_frac = footprint_coverage(selection, plot_length_m);
  obs.calibrated_count =
      calibration_c * obs.raw_count / std::max(obs.coverage_frac, kCoverageFloor);
  if (obs.coverage_frac < kLowCoverage) obs.quality_flags.push_back("low-coverage");
  if (std::any_of(frame_counts.begin(), frame_counts.end(), [](int n) { return n == 0; }))
    obs.quality_flags.push_back("empty-frames");
  std::sort(obs.quality_flags.begin(), obs.quality_flags.end());
  return obs;
}

PlotResult merge_sides(const std::vector<PlotObservation>& observations) {
  if (observations.empty())
    fail(Errc::validation, "merge_sides needs at least one observation");
  PlotResult r;
  r.plot_id = observations.front().plot_id;
  NeumaierSum sum;
  for (const auto& obs : observations) {
    if (obs.plot_id != r.plot_id)
      fail(Errc::validation, "merge_sides observations must share one plot_id");
    auto& slot = obs.side == Side::left ? r.count_left : r.count_right;
    if (slot)
      fail(Errc::duplicate_side, "plot " + std::to_string(r.plot_id) +
                                     ": two observations on side " + to_string(obs.side));
    slot = obs.calibrated_count;
    sum.add(obs.calibrated_count);
    ++r.n_sides;
    for (const auto& f : obs.quality_flags)
      r.flags.push_back(std::string(to_string(obs.side)) + ":" + f);
  }
  r.combined_count = sum.value() / r.n_sides;
  std::sort(r.flags.begin(), r.flags.end());
  return r;
}

double fit_calibration(const std::vector<std::pair<double, double>>& estimate_reference) {
  if (estimate_reference.empty())
    fail(Errc::insufficient_data, "calibration fit needs at least one pair");
  NeumaierSum xy, xx;
  for (const auto& [x, y] : estimate_reference) {
    xy.add(x * y);
    xx.add(x * x);
  }
  if (xx.value() == 0.0)
    fail(Errc::degenerate_series, "calibration fit: all estimates are zero");
  return xy.value() / xx.value();
}

std::vector<PlotResult> read_counts(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  if (lines.empty()) fail_at(Errc::parse, file, 1, "empty file, expected a header");
  if (lines[0] != "plot_id,count_left,count_right,combined_count,n_sides,flags")
    fail_at(Errc::parse, file, 1, "bad header: '" + std::string(lines[0]) + "'");
  std::vector<PlotResult> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    const auto fields = split_csv(lines[i]);
    if (fields.size() != 6)
      fail_at(Errc::parse, file, line,
              "expected 6 columns, got " + std::to_string(fields.size()));
    PlotResult r;
    const auto id = parse_int(fields[0]);
    const auto combined = parse_double(fields[3]);
    const auto n_sides = parse_int(fields[4]);
    if (!id || !combined || !n_sides) fail_at(Errc::parse, file, line, "malformed counts row");
    r.plot_id = static_cast<int>(*id);
    r.combined_count = *combined;
    r.n_sides = static_cast<int>(*n_sides);
    if (!fields[1].empty()) {
      const auto v = parse_double(fields[1]);
      if (!v) fail_at(Errc::parse, file, line, "malformed count_left");
      r.count_left = *v;
    }
    if (!fields[2].empty()) {
      const auto v = parse_double(fields[2]);
      if (!v) fail_at(Errc::parse, file, line, "malformed count_right");
      r.count_right = *v;
    }
    const int present = (r.count_left ? 1 : 0) + (r.count_right ? 1 : 0);
    if (present != r.n_sides || present == 0)
      fail_at(Errc::integrity, file, line, "n_sides does not match the sides present");
    if (!fields[5].empty()) {
      std::string_view rest = fields[5];
      while (!rest.empty()) {
        const auto pos = rest.find(';');
        r.flags.emplace_back(rest.substr(0, pos));
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
      }
    }
    if (!out.empty() && r.plot_id <= out.back().plot_id)
      fail_at(Errc::integrity, file, line, "plot_id not strictly increasing");
    out.push_back(std::move(r));
  }
  return out;
}

void write_counts(const std::vector<PlotResult>& results, const std::filesystem::path& path) {
  std::vector<const PlotResult*> sorted;
  sorted.reserve(results.size());
  for (const auto& r : results) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const PlotResult* a, const PlotResult* b) { return a->plot_id < b->plot_id; });
  std::string text = "plot_id,count_left,count_right,combined_count,n_sides,flags\n";
  for (const PlotResult* r : sorted) {
    text += std::to_string(r->plot_id);
    text += ',';
    if (r->count_left) text += canon(*r->count_left);
    text += ',';
    if (r->count_right) text += canon(*r->count_right);
    text += ',';
    text += canon(r->combined_count);
    text += ',';
    text += std::to_string(r->n_sides);
    text += ',';
    for (std::size_t i = 0; i < r->flags.size(); ++i) {
      if (i > 0) text += ';';
      text += r->flags[i];
    }
    text += '\n';
  }
  write_file(path, text);
}

}  // namespace podpipe
