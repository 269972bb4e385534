#include "podpipe/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "podpipe/errors.hpp"
#include "podpipe/rng.hpp"
#include "podpipe/series.hpp"
#include "podpipe/textio.hpp"

namespace podpipe {

namespace {

// Substream tags; combined with the run seed so every entity owns an
// independent, order-insensitive stream.
constexpr std::uint64_t kTagPlot = 0x706c6f74;    // "plot"
constexpr std::uint64_t kTagPods = 0x706f6473;    // "pods"
constexpr std::uint64_t kTagMode = 0x6d6f6465;    // "mode"
constexpr std::uint64_t kTagManual = 0x6d616e75;  // "manu"
constexpr std::uint64_t kTagGps = 0x677073;       // "gps"

std::uint64_t plot_stream(std::uint64_t seed, std::uint64_t tag, int plot_id) {
  return mix_seed(mix_seed(seed, tag), static_cast<std::uint64_t>(plot_id));
}

void validate(const SimConfig& cfg) {
  validate(cfg.layout);
  if (!(cfg.pods_mean >= 0.0)) fail(Errc::validation, "pods_mean must be >= 0");
  if (!(cfg.pods_sd >= 0.0)) fail(Errc::validation, "pods_sd must be >= 0");
  if (!(cfg.grams_per_pod > 0.0)) fail(Errc::validation, "grams_per_pod must be > 0");
  if (!(cfg.yield_noise_sd >= 0.0)) fail(Errc::validation, "yield_noise_sd must be >= 0");
  if (!(cfg.gps_noise_sd_m >= 0.0)) fail(Errc::validation, "gps_noise_sd_m must be >= 0");
  if (!(cfg.odom_drift_frac > -1.0)) fail(Errc::validation, "odom_drift_frac must be > -1");
  if (!(cfg.frame_rate_hz > 0.0)) fail(Errc::validation, "frame_rate_hz must be > 0");
  if (!(cfg.robot_speed_mps > 0.0)) fail(Errc::validation, "robot_speed_mps must be > 0");
  if (!(cfg.camera_footprint_m > 0.0)) fail(Errc::validation, "camera_footprint_m must be > 0");
  if (cfg.detector_recall < 0.0 || cfg.detector_recall > 1.0)
    fail(Errc::validation, "detector_recall must lie in [0, 1]");
  if (cfg.detector_precision <= 0.0 || cfg.detector_precision > 1.0)
    fail(Errc::validation, "detector_precision must lie in (0, 1]");
  if (cfg.bad_plot_fraction < 0.0 || cfg.bad_plot_fraction > 1.0)
    fail(Errc::validation, "bad_plot_fraction must lie in [0, 1]");
  if (!(cfg.flood_multiplier >= 0.0)) fail(Errc::validation, "flood_multiplier must be >= 0");
  if (cfg.manual_count_plots < 0) fail(Errc::validation, "manual_count_plots must be >= 0");
  if (cfg.manual_count_noise < 0) fail(Errc::validation, "manual_count_noise must be >= 0");
}

std::string pass_id(int pass_index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "pass_%03d", pass_index);
  return buf;
}

std::string frame_id_for(const std::string& collection_id, int tick, Side side) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "_%06d_%c", tick, side == Side::left ? 'L' : 'R');
  return collection_id + buf;
}

/// Along-column coordinate of each GPS sample, interpolated at arbitrary
/// times. Uses the same projection the pipeline applies, so simulator
/// and pipeline agree on frame geometry.
struct Track {
  std::vector<double> time_s;
  std::vector<double> along_m;

  double at(double t) const { return linear_interp(time_s, along_m, t); }
};

Track project_gps(const std::vector<GpsSample>& gps, const FieldLayout& layout) {
  Track tr;
  const LocalPoint au = along_unit(layout);
  tr.time_s.reserve(gps.size());
  tr.along_m.reserve(gps.size());
  for (const auto& s : gps) {
    const LocalPoint lp = project_to_local(layout.origin, s.position);
    tr.time_s.push_back(s.time_s);
    tr.along_m.push_back(lp.east_m * au.east_m + lp.north_m * au.north_m);
  }
  return tr;
}

bool in_plot(const FieldLayout& layout, double s) {
  const double pitch = plot_pitch_m(layout);
  if (s < 0.0 || s >= along_extent_m(layout)) return false;
  const int idx = static_cast<int>(std::floor(s / pitch));
  if (idx < 0 || idx >= layout.n_ranges) return false;
  return s - idx * pitch < layout.plot_length_m;
}

}  // namespace

const char* to_string(CorruptionMode m) {
  switch (m) {
    case CorruptionMode::none: return "none";
    case CorruptionMode::dropout: return "dropout";
    case CorruptionMode::flood: return "flood";
  }
  return "none";
}

const PlotTruth* GroundTruth::find(int plot_id) const {
  const auto it = std::lower_bound(
      plots.begin(), plots.end(), plot_id,
      [](const PlotTruth& p, int id) { return p.plot_id < id; });
  if (it == plots.end() || it->plot_id != plot_id) return nullptr;
  return &*it;
}

GroundTruth generate_ground_truth(const SimConfig& cfg) {
  validate(cfg);
  GroundTruth truth;
  const int count = cfg.layout.n_ranges * cfg.layout.n_columns;
  truth.plots.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int plot_id = cfg.layout.base_plot_id + i;
    DetRng rng(plot_stream(cfg.seed, kTagPlot, plot_id));
    PlotTruth p;
    p.plot_id = plot_id;
    const double pods = std::llround(rng.normal(cfg.pods_mean, cfg.pods_sd));
    p.true_pods = pods < 0.0 ? 0 : static_cast<int>(pods);
    const double y = cfg.grams_per_pod * p.true_pods + rng.normal(0.0, cfg.yield_noise_sd);
    p.yield_g = y < 0.0 ? 0.0 : y;
    p.is_corrupted = rng.uniform() < cfg.bad_plot_fraction;
    truth.plots.push_back(p);
  }

  if (cfg.manual_count_plots > 0) {
    DetRng rng(mix_seed(cfg.seed, kTagManual));
    std::vector<int> order(count);
    for (int i = 0; i < count; ++i) order[i] = i;
    for (int i = count - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(0, i)]);
    const int n = std::min(cfg.manual_count_plots, count);
    for (int i = 0; i < n; ++i) {
      PlotTruth& p = truth.plots[order[i]];
      int manual = p.true_pods;
      if (cfg.manual_count_noise > 0)
        manual += rng.uniform_int(-cfg.manual_count_noise, cfg.manual_count_noise);
      p.manual_count = manual < 0 ? 0 : manual;
    }
  }
  return truth;
}

std::vector<double> pod_positions(std::uint64_t seed, int plot_id, int count,
                                  double plot_length_m) {
  DetRng rng(plot_stream(seed, kTagPods, plot_id));
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
  for (auto& v : out) v = rng.uniform() * plot_length_m;
  std::sort(out.begin(), out.end());
  return out;
}

CorruptionMode corruption_mode_for(std::uint64_t seed, int plot_id) {
  return plot_stream(seed, kTagMode, plot_id) % 2 == 0 ? CorruptionMode::dropout
                                                       : CorruptionMode::flood;
}

PodWorld build_pod_world(const FieldLayout& layout, const GroundTruth& truth,
                         std::uint64_t seed) {
  PodWorld world;
  for (const auto& p : truth.plots) {
    const PlotAddress addr = invert_id(layout, p.plot_id);
    PodColumn& col = world.columns[addr.column_index];
    col.column_index = addr.column_index;
    const Interval iv = plot_interval(layout, addr.range_index);
    for (double u : pod_positions(seed, p.plot_id, p.true_pods, layout.plot_length_m)) {
      col.s_m.push_back(iv.start_m + u);
      col.plot_id.push_back(p.plot_id);
    }
    if (p.is_corrupted) world.corruption[p.plot_id] = corruption_mode_for(seed, p.plot_id);
  }
  for (auto& [idx, col] : world.columns) {
    // Plots are appended in id order, not range order; sort by position.
    std::vector<std::size_t> perm(col.s_m.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return col.s_m[a] < col.s_m[b]; });
    PodColumn sorted;
    sorted.column_index = col.column_index;
    sorted.s_m.reserve(perm.size());
    sorted.plot_id.reserve(perm.size());
    for (std::size_t i : perm) {
      sorted.s_m.push_back(col.s_m[i]);
      sorted.plot_id.push_back(col.plot_id[i]);
    }
    col = std::move(sorted);
  }
  return world;
}

std::vector<Detection> synth_frame_detections(std::string_view frame_id, double center_s,
                                              const PodColumn& column, const PodWorld& world,
                                              const FieldLayout& layout, const SynthParams& p) {
  DetRng rng(mix_seed(p.seed, fnv1a64(frame_id)));
  const double lo = center_s - 0.5 * p.footprint_m;
  const double hi = center_s + 0.5 * p.footprint_m;
  const auto first = std::lower_bound(column.s_m.begin(), column.s_m.end(), lo);
  const auto last = std::lower_bound(column.s_m.begin(), column.s_m.end(), hi);
  const std::size_t i0 = static_cast<std::size_t>(first - column.s_m.begin());
  const std::size_t n_in = static_cast<std::size_t>(last - first);

  CorruptionMode mode = CorruptionMode::none;
  const double pitch = plot_pitch_m(layout);
  const int range = static_cast<int>(std::floor(center_s / pitch));
  if (range >= 0 && range < layout.n_ranges && center_s - range * pitch < layout.plot_length_m) {
    const int plot = serpentine_id(layout, column.column_index, range);
    const auto it = world.corruption.find(plot);
    if (it != world.corruption.end()) mode = it->second;
  }

  std::vector<Detection> out;
  const auto garbage_box = [&]() {
    Detection d;
    d.w = 0.02 + 0.03 * rng.uniform();
    d.h = 0.02 + 0.03 * rng.uniform();
    d.x = rng.uniform() * (1.0 - d.w);
    d.y = rng.uniform() * (1.0 - d.h);
    d.conf = 0.5 + 0.5 * rng.uniform();
    return d;
  };

  if (mode == CorruptionMode::dropout) return out;
  if (mode == CorruptionMode::flood) {
    const long long m = std::llround(p.flood_multiplier * static_cast<double>(n_in));
    out.reserve(static_cast<std::size_t>(m));
    for (long long j = 0; j < m; ++j) out.push_back(garbage_box());
    return out;
  }

  for (std::size_t i = i0; i < i0 + n_in; ++i) {
    if (rng.uniform() >= p.recall) continue;
    Detection d;
    d.w = 0.02 + 0.03 * rng.uniform();
    d.h = 0.02 + 0.03 * rng.uniform();
    const double cx = (column.s_m[i] - lo) / p.footprint_m;
    d.x = std::clamp(cx - 0.5 * d.w, 0.0, 1.0 - d.w);
    d.y = rng.uniform() * (1.0 - d.h);
    d.conf = 0.5 + 0.5 * rng.uniform();
    out.push_back(d);
  }
  if (p.precision < 1.0 && p.recall > 0.0) {
    const double rate =
        static_cast<double>(n_in) * p.recall * (1.0 - p.precision) / p.precision;
    const int extra = rng.poisson(rate);
    for (int j = 0; j < extra; ++j) out.push_back(garbage_box());
  }
  return out;
}

Simulation simulate(const SimConfig& cfg) {
  validate(cfg);
  Simulation sim;
  sim.truth = generate_ground_truth(cfg);
  const PodWorld world = build_pod_world(cfg.layout, sim.truth, cfg.seed);
  const FieldLayout& layout = cfg.layout;

  const double extent = along_extent_m(layout);
  const double total = extent + 2.0 * kLeadMarginM;
  const double duration = total / cfg.robot_speed_mps;
  const LocalPoint au = along_unit(layout);
  const LocalPoint cu = cross_unit(layout);

  SynthParams synth;
  synth.recall = cfg.detector_recall;
  synth.precision = cfg.detector_precision;
  synth.footprint_m = cfg.camera_footprint_m;
  synth.flood_multiplier = cfg.flood_multiplier;
  synth.seed = cfg.seed;

  // Every pass is driven in the increasing-range direction. A given column
  // is then viewed from the corridor west of it on one pass and east of it
  // on the next, so it lands on the robot's right in one collection and on
  // its left in the other; the two merge as the plot's two sides.
  for (int pass = 0; pass <= layout.n_columns; ++pass) {
    Collection c;
    CollectionManifest& m = c.manifest;
    m.collection_id = pass_id(pass);
    m.pass_index = pass;
    m.direction = Direction::increasing;
    m.layout_ref = "../../layout.json";

    const int left_col = pass - 1;  // lower-cross side of the corridor
    const int right_col = pass;     // higher-cross side
    const auto make_meta = [&](int col) -> std::optional<SideMeta> {
      if (col < 0 || col >= layout.n_columns) return std::nullopt;
      return SideMeta{col, serpentine_id(layout, col, 0),
                      serpentine_id(layout, col, layout.n_ranges - 1)};
    };
    m.left = make_meta(left_col);
    m.right = make_meta(right_col);

    const double cross = (pass - 0.5) * layout.row_spacing_m;
    const auto s_true = [&](double t) { return -kLeadMarginM + cfg.robot_speed_mps * t; };

    DetRng gps_rng(mix_seed(mix_seed(cfg.seed, kTagGps), static_cast<std::uint64_t>(pass)));
    const int n_ticks = static_cast<int>(std::floor(duration * kSensorRateHz)) + 1;
    c.gps.reserve(n_ticks);
    c.odometry.reserve(n_ticks);
    c.lidar.reserve(n_ticks);
    for (int k = 0; k < n_ticks; ++k) {
      const double t = k / kSensorRateHz;
      const double s = s_true(t);
      const double e_noise = cfg.gps_noise_sd_m > 0.0 ? gps_rng.normal(0.0, cfg.gps_noise_sd_m) : 0.0;
      const double n_noise = cfg.gps_noise_sd_m > 0.0 ? gps_rng.normal(0.0, cfg.gps_noise_sd_m) : 0.0;
      const LocalPoint lp{s * au.east_m + cross * cu.east_m + e_noise,
                          s * au.north_m + cross * cu.north_m + n_noise};
      GpsSample g;
      g.time_s = t;
      // Round-trip through the canonical text form so in-memory values
      // equal what a reader sees after serialization.
      const GeoPoint raw = unproject_from_local(layout.origin, lp);
      g.position.latitude_deg = *parse_double(canon(raw.latitude_deg));
      g.position.longitude_deg = *parse_double(canon(raw.longitude_deg));
      g.fix = FixQuality::rtk;
      c.gps.push_back(g);

      c.odometry.push_back({t, cfg.robot_speed_mps * t * (1.0 + cfg.odom_drift_frac)});

      LidarSample ls;
      ls.time_s = t;
      const bool present = in_plot(layout, s);
      ls.left_presence = (m.left && present) ? 1.0 : 0.0;
      ls.right_presence = (m.right && present) ? 1.0 : 0.0;
      c.lidar.push_back(ls);
    }

    const Track track = project_gps(c.gps, layout);
    const int n_frames = static_cast<int>(std::floor(duration * cfg.frame_rate_hz)) + 1;
    for (int j = 0; j < n_frames; ++j) {
      const double t = j / cfg.frame_rate_hz;
      const double center = track.at(t);
      for (const Side side : {Side::left, Side::right}) {
        const auto& meta = m.side(side);
        if (!meta) continue;
        FrameRecord f;
        f.frame_id = frame_id_for(m.collection_id, j, side);
        f.time_s = t;
        f.side = side;
        f.has_detections = true;
        f.detections = synth_frame_detections(f.frame_id, center,
                                              world.columns.at(meta->column_index), world,
                                              layout, synth);
        c.frames.push_back(std::move(f));
      }
    }
    sim.collections.push_back(std::move(c));
  }
  return sim;
}

GroundTruth read_truth(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  if (lines.empty()) fail_at(Errc::parse, file, 1, "empty file, expected a header");
  if (lines[0] != "plot_id,true_pods,yield_g,manual_count,is_corrupted")
    fail_at(Errc::parse, file, 1, "bad header: '" + std::string(lines[0]) + "'");
  GroundTruth truth;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    const auto fields = split_csv(lines[i]);
    if (fields.size() != 5)
      fail_at(Errc::parse, file, line, "expected 5 columns, got " + std::to_string(fields.size()));
    PlotTruth p;
    const auto id = parse_int(fields[0]);
    const auto pods = parse_int(fields[1]);
    const auto yield = parse_double(fields[2]);
    const auto corrupted = parse_int(fields[4]);
    if (!id || !pods || !yield || !corrupted || (*corrupted != 0 && *corrupted != 1))
      fail_at(Errc::parse, file, line, "malformed truth row");
    p.plot_id = static_cast<int>(*id);
    p.true_pods = static_cast<int>(*pods);
    p.yield_g = *yield;
    p.is_corrupted = *corrupted == 1;
    if (!fields[3].empty()) {
      const auto manual = parse_int(fields[3]);
      if (!manual) fail_at(Errc::parse, file, line, "malformed manual_count");
      p.manual_count = static_cast<int>(*manual);
    }
    if (!truth.plots.empty() && p.plot_id <= truth.plots.back().plot_id)
      fail_at(Errc::integrity, file, line, "plot_id not strictly increasing");
    truth.plots.push_back(p);
  }
  return truth;
}

void write_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  std::string text = "plot_id,true_pods,yield_g,manual_count,is_corrupted\n";
  for (const auto& p : truth.plots) {
    text += std::to_string(p.plot_id);
    text += ',';
    text += std::to_string(p.true_pods);
    text += ',';
    text += canon(p.yield_g);
    text += ',';
    if (p.manual_count) text += std::to_string(*p.manual_count);
    text += ',';
    text += p.is_corrupted ? '1' : '0';
    text += '\n';
  }
  write_file(path, text);
}

void write_simulation(const SimConfig& cfg, const Simulation& sim,
                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_layout(cfg.layout, out_dir / "layout.json");
  write_truth(sim.truth, out_dir / "truth.csv");
  for (const auto& c : sim.collections)
    write_collection(c, out_dir / "collections" / c.manifest.collection_id);
}

}  // namespace podpipe
