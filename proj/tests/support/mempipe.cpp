#include "support/mempipe.hpp"

#include <map>
#include <unordered_map>

#include "podpipe/detect.hpp"
#include "podpipe/frames.hpp"
#include "podpipe/geo.hpp"
#include "podpipe/series.hpp"

namespace podpipe::testing {

MemResult run_mem_pipeline(const Simulation& sim, const FieldLayout& layout,
                           const MemOptions& opt) {
  SynthParams params;
  params.recall = opt.recall;
  params.precision = opt.precision;
  params.footprint_m = opt.footprint_m;
  params.flood_multiplier = opt.flood_multiplier;
  params.seed = opt.seed;
  OracleDetector detector(layout, sim.truth, params);

  const int k = opt.k_frames > 0 ? opt.k_frames
                                 : default_frame_count(layout.plot_length_m, opt.footprint_m);
  const LocalPoint au = along_unit(layout);

  MemResult out;
  std::map<int, std::vector<PlotObservation>> by_plot;
  for (const auto& c : sim.collections) {
    const auto slices = split_by_gps(c, layout, opt.split);

    std::unordered_map<std::string_view, const FrameRecord*> frame_index;
    frame_index.reserve(c.frames.size());
    for (const auto& f : c.frames) frame_index.emplace(f.frame_id, &f);

    std::vector<double> gt, ga;
    gt.reserve(c.gps.size());
    ga.reserve(c.gps.size());
    for (const auto& s : c.gps) {
      const LocalPoint lp = project_to_local(layout.origin, s.position);
      gt.push_back(s.time_s);
      ga.push_back(lp.east_m * au.east_m + lp.north_m * au.north_m);
    }

    for (const auto& slice : slices) {
      const FrameSelection sel = select_frames(slice, c.frames, c.odometry, k, opt.footprint_m);
      const auto& meta = c.manifest.side(sel.side);
      std::vector<int> counts;
      counts.reserve(sel.selected.size());
      for (const auto& chosen : sel.selected) {
        const FrameRecord* frame = frame_index.at(chosen.frame_id);
        FrameContext ctx;
        ctx.frame = frame;
        ctx.has_center = c.gps.size() >= 2;
        ctx.center_s_m = ctx.has_center ? linear_interp(gt, ga, frame->time_s) : 0.0;
        ctx.column_index = meta ? meta->column_index : -1;
        counts.push_back(count_frame(detector.detect(ctx), opt.confidence_threshold));
        out.assignments.push_back({slice.plot_id, ctx.column_index, frame->time_s});
      }
      by_plot[slice.plot_id].push_back(
          aggregate_plot(sel, counts, opt.calibration_c, layout.plot_length_m));
    }
  }

  for (auto& [plot_id, obs] : by_plot) {
    std::sort(obs.begin(), obs.end(),
              [](const PlotObservation& a, const PlotObservation& b) { return a.side < b.side; });
    out.results.push_back(merge_sides(obs));
  }
  for (auto& r : out.results) {
    if (const PlotTruth* t = sim.truth.find(r.plot_id)) {
      r.yield_g = t->yield_g;
      r.manual_count = t->manual_count;
    }
  }
  out.stages = run_stages(out.results);
  return out;
}

}  // namespace podpipe::testing
