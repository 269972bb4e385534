#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "podpipe/analytics.hpp"
#include "podpipe/collection.hpp"
#include "podpipe/count.hpp"
#include "podpipe/field_layout.hpp"
#include "podpipe/frames.hpp"
#include "podpipe/sim.hpp"
#include "podpipe/split.hpp"

namespace podpipe {

/// Effective configuration for a run. Loaded from a single JSON document;
/// every field can be overridden with key=value pairs, and the effective
/// values are echoed into report.json for reproducibility.
struct PipelineConfig {
  std::filesystem::path layout_path;
  std::filesystem::path collections_dir;
  std::filesystem::path yields_path;
  std::filesystem::path output_dir;

  std::string detector = "oracle";  // oracle | file
  double detector_recall = 1.0;
  double detector_precision = 1.0;
  double flood_multiplier = 5.0;
  std::uint64_t seed = 0;

  int k_frames = 0;  // 0: tile plot_length with footprints
  double footprint_m = 0.5;
  CropSpec crop;
  double calibration_c = 1.0;
  double confidence_threshold = 0.5;

  std::string split_method = "auto";  // auto | gps | lidar
  SplitOptions split;

  /// 0: PODPIPE_WORKERS env var, else hardware concurrency.
  int workers = 0;
};

PipelineConfig read_pipeline_config(const std::filesystem::path& path);

/// Applies one "key=value" override; unknown keys or unparseable values
/// raise config errors naming the key.
void apply_config_override(PipelineConfig& cfg, std::string_view assignment);

/// The effective configuration as a canonical JSON document.
std::string config_echo_json(const PipelineConfig& cfg);

/// Yield (and optional manual count) reference rows. Accepts either the
/// simulator's truth.csv or a minimal plot_id,yield_g[,manual_count] file.
struct YieldRecord {
  int plot_id = 0;
  double yield_g = 0.0;
  std::optional<int> manual_count;
};

std::vector<YieldRecord> read_yields(const std::filesystem::path& path);

/// Collections plus layout, loaded and validated; order follows the sorted
/// collection directory names so downstream output is deterministic.
struct PipelineInputs {
  FieldLayout layout;
  std::vector<Collection> collections;
  std::vector<std::filesystem::path> collection_dirs;
};

PipelineInputs load_inputs(const PipelineConfig& cfg);

/// Each stage entry point loads what it needs (the previous stage's files
/// for the later stages), computes, writes its outputs under
/// cfg.output_dir, and returns a one-line summary. Running them in order
/// produces byte-identical files to run_pipeline, which simply chains them.
std::string run_stage_split(const PipelineConfig& cfg);
std::string run_stage_frames(const PipelineConfig& cfg);
std::string run_stage_count(const PipelineConfig& cfg);
std::string run_stage_analyze(const PipelineConfig& cfg);

/// Runs split, frames, count, analyze; maintains MANIFEST.json listing the
/// stages completed so partial results are identifiable after a failure.
std::vector<std::string> run_pipeline(const PipelineConfig& cfg);

SimConfig read_sim_config(const std::filesystem::path& path);
void apply_sim_override(SimConfig& cfg, std::string_view assignment);

/// Simulates and writes the field tree; returns a one-line summary.
std::string run_simulate(const SimConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace podpipe
