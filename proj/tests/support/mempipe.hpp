// In-memory run of the split -> frames -> detect -> count -> analytics
// chain on a simulation, skipping serialization. Used by the statistical
// acceptance criteria, where hundreds of runs must fit a time budget;
// byte-level behavior of the file-backed pipeline is checked separately.
#pragma once

#include <cstdint>
#include <vector>

#include "podpipe/analytics.hpp"
#include "podpipe/collection.hpp"
#include "podpipe/count.hpp"
#include "podpipe/field_layout.hpp"
#include "podpipe/sim.hpp"
#include "podpipe/split.hpp"

namespace podpipe::testing {

struct MemOptions {
  double recall = 1.0;
  double precision = 1.0;
  double footprint_m = 0.5;
  double flood_multiplier = 5.0;
  std::uint64_t seed = 0;
  int k_frames = 0;  // 0 -> default_frame_count for the layout
  double calibration_c = 1.0;
  double confidence_threshold = 0.5;
  SplitOptions split;
};

/// One selected frame and the plot the pipeline credited it to.
struct FrameAssignment {
  int plot_id = 0;
  int column_index = -1;
  double time_s = 0.0;
};

struct MemResult {
  std::vector<PlotResult> results;  // sorted by plot id, yields joined from truth
  StageReports stages;
  std::vector<FrameAssignment> assignments;
};

MemResult run_mem_pipeline(const Simulation& sim, const FieldLayout& layout,
                           const MemOptions& opt);

}  // namespace podpipe::testing
