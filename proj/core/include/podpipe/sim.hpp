#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "podpipe/collection.hpp"
#include "podpipe/field_layout.hpp"

namespace podpipe {

/// Sensor sample rate for GPS, odometry and LiDAR streams.
inline constexpr double kSensorRateHz = 20.0;

/// Straight lead-in/out driven before the first and after the last plot,
/// so boundary interpolation has samples on both sides of every plot.
inline constexpr double kLeadMarginM = 1.0;

struct SimConfig {
  FieldLayout layout;
  std::uint64_t seed = 0;
  double pods_mean = 40.0;
  double pods_sd = 15.0;
  double grams_per_pod = 5.0;
  double yield_noise_sd = 75.0;  // grams
  double gps_noise_sd_m = 0.02;
  double odom_drift_frac = 0.01;
  double frame_rate_hz = 10.0;
  double robot_speed_mps = 0.5;
  double camera_footprint_m = 0.5;
  double detector_recall = 0.9;
  double detector_precision = 0.9;
  double bad_plot_fraction = 0.0;
  /// Corrupted "flood" plots emit this multiple of the in-footprint pod
  /// count as garbage boxes per frame.
  double flood_multiplier = 5.0;
  /// Number of plots that receive a manual reference count.
  int manual_count_plots = 16;
  /// Manual counts deviate from true_pods by a uniform integer in
  /// [-noise, +noise]; 0 means exact.
  int manual_count_noise = 0;
};

enum class CorruptionMode { none, dropout, flood };
const char* to_string(CorruptionMode m);

struct PlotTruth {
  int plot_id = 0;
  int true_pods = 0;
  double yield_g = 0.0;
  std::optional<int> manual_count;
  bool is_corrupted = false;
};

struct GroundTruth {
  std::vector<PlotTruth> plots;  // sorted by plot_id
  const PlotTruth* find(int plot_id) const;
};

/// Per-plot truth: pod counts from a clipped rounded normal, yield linear
/// in pods plus Gaussian noise, corruption flags, manual counts on a
/// deterministic plot subset. Every plot draws from its own seed-derived
/// stream, so results do not depend on evaluation order.
GroundTruth generate_ground_truth(const SimConfig& cfg);

/// Fixed along-row pod coordinates for one plot, sorted, in [0, plot
/// length). Deterministic in (seed, plot_id); the simulator and the
/// oracle detector share this.
std::vector<double> pod_positions(std::uint64_t seed, int plot_id, int count, double plot_length_m);

/// Which corruption mode a corrupted plot uses. Deterministic in
/// (seed, plot_id), roughly half dropout, half flood.
CorruptionMode corruption_mode_for(std::uint64_t seed, int plot_id);

/// All pods of one physical column in absolute along-column coordinates.
struct PodColumn {
  int column_index = 0;
  std::vector<double> s_m;      // ascending
  std::vector<int> plot_id;     // parallel to s_m
};

/// Ground-truth world view used by the synthetic detection law.
struct PodWorld {
  std::map<int, PodColumn> columns;                     // by column index
  std::unordered_map<int, CorruptionMode> corruption;   // corrupted plots only
};

PodWorld build_pod_world(const FieldLayout& layout, const GroundTruth& truth, std::uint64_t seed);

struct SynthParams {
  double recall = 0.9;
  double precision = 0.9;
  double footprint_m = 0.5;
  double flood_multiplier = 5.0;
  std::uint64_t seed = 0;
};

/// Synthetic detections for one frame: every pod inside the footprint is
/// detected with probability `recall`, false positives arrive at a
/// Poisson rate tuned so expected precision matches `precision`, and
/// corrupted plots emit dropout/flood output instead. Deterministic per
/// (frame_id, seed) and independent of call order.
std::vector<Detection> synth_frame_detections(std::string_view frame_id, double center_s,
                                              const PodColumn& column, const PodWorld& world,
                                              const FieldLayout& layout, const SynthParams& p);

struct Simulation {
  GroundTruth truth;
  std::vector<Collection> collections;
};

/// Generates one collection per inter-row pass (n_columns + 1 of them,
/// covering every column from both sides) with GPS, odometry, LiDAR and
/// frame streams, embedded detections included. Byte-identical for
/// identical configs.
Simulation simulate(const SimConfig& cfg);

GroundTruth read_truth(const std::filesystem::path& path);
void write_truth(const GroundTruth& truth, const std::filesystem::path& path);

/// Writes layout.json, truth.csv and collections/<id>/ under out_dir.
void write_simulation(const SimConfig& cfg, const Simulation& sim,
                      const std::filesystem::path& out_dir);

}  // namespace podpipe
