#include "podpipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <memory>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "podpipe/detect.hpp"
#include "podpipe/errors.hpp"
#include "podpipe/series.hpp"
#include "podpipe/svg_plot.hpp"
#include "podpipe/textio.hpp"

namespace podpipe {

namespace {

using nlohmann::json;

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("PODPIPE_WORKERS")) {
    const auto v = parse_int(env);
    if (!v || *v < 1 || *v > 1024)
      fail(Errc::config, "PODPIPE_WORKERS must be an integer in [1, 1024], got '" +
                             std::string(env) + "'");
    return static_cast<int>(*v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(0..n-1) on a small pool. Exceptions are captured per index and
/// the lowest-index one is rethrown, so failures are schedule-independent.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  const int pool_size = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n));
  if (pool_size <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(pool_size);
  for (int w = 0; w < pool_size; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file_or_fail(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    fail_at(Errc::parse, path.string(), 1, "invalid JSON");
  return j;
}

double num_or(const json& j, const char* key, double fallback, const std::string& file) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    fail_at(Errc::config, file, 1, std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

long long int_or(const json& j, const char* key, long long fallback, const std::string& file) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    fail_at(Errc::config, file, 1, std::string("'") + key + "' must be an integer");
  return j.at(key).get<long long>();
}

std::string str_or(const json& j, const char* key, std::string fallback,
                   const std::string& file) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string())
    fail_at(Errc::config, file, 1, std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& file, const std::string& scope) {
  for (const auto& item : j.items()) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return item.key() == k; });
    if (!ok)
      fail_at(Errc::config, file, 1, "unknown " + scope + " key '" + item.key() + "'");
  }
}

double parse_double_or_fail(std::string_view key, std::string_view value) {
  const auto v = parse_double(value);
  if (!v)
    fail(Errc::config,
         "override '" + std::string(key) + "' needs a numeric value, got '" +
             std::string(value) + "'");
  return *v;
}

long long parse_int_or_fail(std::string_view key, std::string_view value) {
  const auto v = parse_int(value);
  if (!v)
    fail(Errc::config, "override '" + std::string(key) + "' needs an integer value, got '" +
                           std::string(value) + "'");
  return *v;
}

void require_exists(const std::filesystem::path& p, const char* what) {
  if (p.empty())
    fail(Errc::config, std::string(what) + " path is not configured");
  if (!std::filesystem::exists(p))
    fail(Errc::config, std::string(what) + " path '" + p.string() + "' does not exist");
}

std::filesystem::path slices_path(const PipelineConfig& cfg, const std::string& collection_id) {
  return cfg.output_dir / "collections" / collection_id / "slices.jsonl";
}

std::filesystem::path selections_path(const PipelineConfig& cfg,
                                      const std::string& collection_id) {
  return cfg.output_dir / "collections" / collection_id / "selections.jsonl";
}

json report_to_json(const CorrelationReport& rep) {
  json j;
  j["stage"] = rep.stage;
  j["n"] = rep.n;
  j["r"] = rep.r;
  j["slope"] = rep.slope;
  j["intercept"] = rep.intercept;
  json removed = json::array();
  for (const auto& o : rep.removed) {
    json e;
    e["plot_id"] = o.plot_id;
    if (o.side) e["side"] = to_string(*o.side);
    e["standardized_residual"] = o.standardized_residual;
    removed.push_back(std::move(e));
  }
  j["removed"] = std::move(removed);
  return j;
}

std::string report_csv_row(const CorrelationReport& rep) {
  return rep.stage + "," + std::to_string(rep.n) + "," + canon(rep.r) + "," + canon(rep.slope) +
         "," + canon(rep.intercept) + "," + std::to_string(rep.removed.size()) + "\n";
}

std::vector<std::pair<double, double>> series_points(const PairedSeries& s) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(s.records.size());
  for (const auto& r : s.records) pts.emplace_back(r.x, r.y);
  return pts;
}

std::unique_ptr<Detector> make_detector(const PipelineConfig& cfg, const PipelineInputs& in) {
  if (cfg.detector == "oracle") {
    require_exists(cfg.yields_path, "yields");
    const std::string file_text = read_file_or_fail(cfg.yields_path);
  const auto lines = split_lines(file_text);
    if (lines.empty() || lines[0] != "plot_id,true_pods,yield_g,manual_count,is_corrupted")
      fail(Errc::config, "the oracle detector needs a truth-format yields file "
                         "(with true_pods), '" +
                             cfg.yields_path.string() + "' is not one");
    SynthParams params;
    params.recall = cfg.detector_recall;
    params.precision = cfg.detector_precision;
    params.footprint_m = cfg.footprint_m;
    params.flood_multiplier = cfg.flood_multiplier;
    params.seed = cfg.seed;
    return std::make_unique<OracleDetector>(in.layout, read_truth(cfg.yields_path), params);
  }
  if (cfg.detector == "file") {
    auto det = std::make_unique<FileDetector>(cfg.crop);
    for (const auto& dir : in.collection_dirs) {
      const auto sibling = dir / "detections.jsonl";
      if (std::filesystem::exists(sibling)) det->add_store(read_detections_file(sibling));
    }
    return det;
  }
  fail(Errc::config, "detector must be 'oracle' or 'file', got '" + cfg.detector + "'");
}

/// Along-track coordinate interpolator built from a collection's GPS.
struct GpsTrack {
  std::vector<double> t;
  std::vector<double> along;
  bool usable = false;

  GpsTrack(const Collection& c, const FieldLayout& layout) {
    if (c.gps.size() < 2) return;
    const LocalPoint au = along_unit(layout);
    t.reserve(c.gps.size());
    along.reserve(c.gps.size());
    for (const auto& s : c.gps) {
      const LocalPoint lp = project_to_local(layout.origin, s.position);
      t.push_back(s.time_s);
      along.push_back(lp.east_m * au.east_m + lp.north_m * au.north_m);
    }
    usable = true;
  }

  double at(double time_s) const { return linear_interp(t, along, time_s); }
};

void join_yields(std::vector<PlotResult>& results, const std::vector<YieldRecord>& yields) {
  std::unordered_map<int, const YieldRecord*> by_plot;
  for (const auto& y : yields) by_plot[y.plot_id] = &y;
  for (auto& r : results) {
    const auto it = by_plot.find(r.plot_id);
    if (it == by_plot.end()) continue;
    r.yield_g = it->second->yield_g;
    r.manual_count = it->second->manual_count;
  }
}

void write_manifest_file(const PipelineConfig& cfg, const std::vector<std::string>& completed,
                         const std::string& failed_stage, const std::string& error) {
  json j;
  j["completed"] = completed;
  if (!failed_stage.empty()) {
    j["failed_stage"] = failed_stage;
    j["error"] = error;
  }
  write_file(cfg.output_dir / "MANIFEST.json", j.dump(2) + "\n");
}

}  // namespace

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  const std::string file = path.string();
  if (!j.is_object()) fail_at(Errc::config, file, 1, "config root must be an object");
  reject_unknown_keys(j,
                      {"layout", "collections", "yields", "out", "detector", "detector_recall",
                       "detector_precision", "flood_multiplier", "seed", "k_frames",
                       "footprint_m", "crop", "calibration_c", "confidence_threshold", "split",
                       "workers"},
                      file, "config");
  PipelineConfig cfg;
  cfg.layout_path = str_or(j, "layout", "", file);
  cfg.collections_dir = str_or(j, "collections", "", file);
  cfg.yields_path = str_or(j, "yields", "", file);
  cfg.output_dir = str_or(j, "out", "", file);
  cfg.detector = str_or(j, "detector", cfg.detector, file);
  cfg.detector_recall = num_or(j, "detector_recall", cfg.detector_recall, file);
  cfg.detector_precision = num_or(j, "detector_precision", cfg.detector_precision, file);
  cfg.flood_multiplier = num_or(j, "flood_multiplier", cfg.flood_multiplier, file);
  const long long seed = int_or(j, "seed", 0, file);
  if (seed < 0) fail_at(Errc::config, file, 1, "'seed' must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.k_frames = static_cast<int>(int_or(j, "k_frames", cfg.k_frames, file));
  cfg.footprint_m = num_or(j, "footprint_m", cfg.footprint_m, file);
  if (j.contains("crop")) {
    const json& c = j.at("crop");
    if (!c.is_object()) fail_at(Errc::config, file, 1, "'crop' must be an object");
    reject_unknown_keys(c, {"left", "right", "top", "bottom"}, file, "crop");
    cfg.crop.left_frac = num_or(c, "left", cfg.crop.left_frac, file);
    cfg.crop.right_frac = num_or(c, "right", cfg.crop.right_frac, file);
    cfg.crop.top_frac = num_or(c, "top", cfg.crop.top_frac, file);
    cfg.crop.bottom_frac = num_or(c, "bottom", cfg.crop.bottom_frac, file);
  }
  cfg.calibration_c = num_or(j, "calibration_c", cfg.calibration_c, file);
  cfg.confidence_threshold = num_or(j, "confidence_threshold", cfg.confidence_threshold, file);
  if (j.contains("split")) {
    const json& s = j.at("split");
    if (!s.is_object()) fail_at(Errc::config, file, 1, "'split' must be an object");
    reject_unknown_keys(s,
                        {"method", "coverage_threshold", "smoothing_window", "min_rtk_fraction",
                         "on_threshold", "hysteresis"},
                        file, "split");
    cfg.split_method = str_or(s, "method", cfg.split_method, file);
    cfg.split.coverage_threshold =
        num_or(s, "coverage_threshold", cfg.split.coverage_threshold, file);
    cfg.split.smoothing_window =
        static_cast<int>(int_or(s, "smoothing_window", cfg.split.smoothing_window, file));
    cfg.split.min_rtk_fraction = num_or(s, "min_rtk_fraction", cfg.split.min_rtk_fraction, file);
    cfg.split.on_threshold = num_or(s, "on_threshold", cfg.split.on_threshold, file);
    cfg.split.hysteresis = num_or(s, "hysteresis", cfg.split.hysteresis, file);
  }
  cfg.workers = static_cast<int>(int_or(j, "workers", cfg.workers, file));
  return cfg;
}

void apply_config_override(PipelineConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    fail(Errc::config, "override must look like key=value, got '" + std::string(assignment) + "'");
  const std::string_view key = assignment.substr(0, eq);
  const std::string_view value = assignment.substr(eq + 1);

  if (key == "layout") cfg.layout_path = std::string(value);
  else if (key == "collections") cfg.collections_dir = std::string(value);
  else if (key == "yields") cfg.yields_path = std::string(value);
  else if (key == "out") cfg.output_dir = std::string(value);
  else if (key == "detector") cfg.detector = std::string(value);
  else if (key == "detector_recall") cfg.detector_recall = parse_double_or_fail(key, value);
  else if (key == "detector_precision") cfg.detector_precision = parse_double_or_fail(key, value);
  else if (key == "flood_multiplier") cfg.flood_multiplier = parse_double_or_fail(key, value);
  else if (key == "seed") {
    const long long v = parse_int_or_fail(key, value);
    if (v < 0) fail(Errc::config, "override 'seed' must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (key == "k_frames") cfg.k_frames = static_cast<int>(parse_int_or_fail(key, value));
  else if (key == "footprint_m") cfg.footprint_m = parse_double_or_fail(key, value);
  else if (key == "crop_left") cfg.crop.left_frac = parse_double_or_fail(key, value);
  else if (key == "crop_right") cfg.crop.right_frac = parse_double_or_fail(key, value);
  else if (key == "crop_top") cfg.crop.top_frac = parse_double_or_fail(key, value);
  else if (key == "crop_bottom") cfg.crop.bottom_frac = parse_double_or_fail(key, value);
  else if (key == "calibration_c") cfg.calibration_c = parse_double_or_fail(key, value);
  else if (key == "confidence_threshold")
    cfg.confidence_threshold = parse_double_or_fail(key, value);
  else if (key == "split_method") cfg.split_method = std::string(value);
  else if (key == "coverage_threshold")
    cfg.split.coverage_threshold = parse_double_or_fail(key, value);
  else if (key == "smoothing_window")
    cfg.split.smoothing_window = static_cast<int>(parse_int_or_fail(key, value));
  else if (key == "min_rtk_fraction")
    cfg.split.min_rtk_fraction = parse_double_or_fail(key, value);
  else if (key == "on_threshold") cfg.split.on_threshold = parse_double_or_fail(key, value);
  else if (key == "hysteresis") cfg.split.hysteresis = parse_double_or_fail(key, value);
  else if (key == "workers") cfg.workers = static_cast<int>(parse_int_or_fail(key, value));
  else fail(Errc::config, "unknown override key '" + std::string(key) + "'");
}

std::string config_echo_json(const PipelineConfig& cfg) {
  json j;
  j["layout"] = cfg.layout_path.string();
  j["collections"] = cfg.collections_dir.string();
  j["yields"] = cfg.yields_path.string();
  j["out"] = cfg.output_dir.string();
  j["detector"] = cfg.detector;
  j["detector_recall"] = cfg.detector_recall;
  j["detector_precision"] = cfg.detector_precision;
  j["flood_multiplier"] = cfg.flood_multiplier;
  j["seed"] = cfg.seed;
  j["k_frames"] = cfg.k_frames;
  j["footprint_m"] = cfg.footprint_m;
  j["crop"] = {{"left", cfg.crop.left_frac},
               {"right", cfg.crop.right_frac},
               {"top", cfg.crop.top_frac},
               {"bottom", cfg.crop.bottom_frac}};
  j["calibration_c"] = cfg.calibration_c;
  j["confidence_threshold"] = cfg.confidence_threshold;
  j["split"] = {{"method", cfg.split_method},
                {"coverage_threshold", cfg.split.coverage_threshold},
                {"smoothing_window", cfg.split.smoothing_window},
                {"min_rtk_fraction", cfg.split.min_rtk_fraction},
                {"on_threshold", cfg.split.on_threshold},
                {"hysteresis", cfg.split.hysteresis}};
  j["workers"] = cfg.workers;
  return j.dump(2) + "\n";
}

std::vector<YieldRecord> read_yields(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string file_text = read_file_or_fail(path);
  const auto lines = split_lines(file_text);
  if (lines.empty()) fail_at(Errc::parse, file, 1, "empty file, expected a header");

  if (lines[0] == "plot_id,true_pods,yield_g,manual_count,is_corrupted") {
    std::vector<YieldRecord> out;
    for (const auto& p : read_truth(path).plots)
      out.push_back({p.plot_id, p.yield_g, p.manual_count});
    return out;
  }
  const bool with_manual = lines[0] == "plot_id,yield_g,manual_count";
  if (!with_manual && lines[0] != "plot_id,yield_g")
    fail_at(Errc::parse, file, 1, "bad header: '" + std::string(lines[0]) + "'");

  std::vector<YieldRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    const auto fields = split_csv(lines[i]);
    if (fields.size() != (with_manual ? 3u : 2u))
      fail_at(Errc::parse, file, line, "wrong column count");
    YieldRecord y;
    const auto id = parse_int(fields[0]);
    const auto grams = parse_double(fields[1]);
    if (!id || !grams) fail_at(Errc::parse, file, line, "malformed yields row");
    y.plot_id = static_cast<int>(*id);
    y.yield_g = *grams;
    if (with_manual && !fields[2].empty()) {
      const auto manual = parse_int(fields[2]);
      if (!manual) fail_at(Errc::parse, file, line, "malformed manual_count");
      y.manual_count = static_cast<int>(*manual);
    }
    if (!out.empty() && y.plot_id <= out.back().plot_id)
      fail_at(Errc::integrity, file, line, "plot_id not strictly increasing");
    out.push_back(y);
  }
  return out;
}

PipelineInputs load_inputs(const PipelineConfig& cfg) {
  require_exists(cfg.layout_path, "layout");
  require_exists(cfg.collections_dir, "collections");
  PipelineInputs in;
  in.layout = read_layout(cfg.layout_path);

  for (const auto& entry : std::filesystem::directory_iterator(cfg.collections_dir)) {
    if (!entry.is_directory()) continue;
    if (!std::filesystem::exists(entry.path() / "manifest.json")) continue;
    in.collection_dirs.push_back(entry.path());
  }
  std::sort(in.collection_dirs.begin(), in.collection_dirs.end());
  if (in.collection_dirs.empty())
    fail(Errc::config,
         "no collection directories under '" + cfg.collections_dir.string() + "'");

  in.collections.resize(in.collection_dirs.size());
  parallel_for(in.collection_dirs.size(), resolve_workers(cfg.workers),
               [&](std::size_t i) { in.collections[i] = read_collection(in.collection_dirs[i]); });
  return in;
}

std::string run_stage_split(const PipelineConfig& cfg) {
  if (cfg.split_method != "auto" && cfg.split_method != "gps" && cfg.split_method != "lidar")
    fail(Errc::config, "split method must be auto, gps, or lidar, got '" + cfg.split_method + "'");
  const PipelineInputs in = load_inputs(cfg);
  const std::size_t n = in.collections.size();

  std::vector<std::vector<PlotSlice>> slices(n);
  std::vector<VerifyReport> verify(n);
  std::vector<std::vector<std::string>> metadata(n);
  std::vector<SplitMethod> used(n, SplitMethod::gps);

  parallel_for(n, resolve_workers(cfg.workers), [&](std::size_t i) {
    const Collection& c = in.collections[i];
    if (cfg.split_method == "gps") {
      slices[i] = split_by_gps(c, in.layout, cfg.split);
      used[i] = SplitMethod::gps;
    } else if (cfg.split_method == "lidar") {
      slices[i] = split_by_lidar(c, in.layout, cfg.split);
      used[i] = SplitMethod::lidar;
    } else {
      try {
        slices[i] = split_by_gps(c, in.layout, cfg.split);
        used[i] = SplitMethod::gps;
      } catch (const Error& e) {
        if (e.code() != Errc::mode_unavailable) throw;
        slices[i] = split_by_lidar(c, in.layout, cfg.split);
        used[i] = SplitMethod::lidar;
      }
    }
    verify[i] = assign_and_verify(slices[i], c, in.layout);
    metadata[i] = validate_metadata(c, in.layout);
  });

  std::size_t total_slices = 0, gps_count = 0, flag_count = 0;
  std::string verification;
  std::vector<PlotCenterEstimate> centers;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& id = in.collections[i].manifest.collection_id;
    write_slices(slices[i], slices_path(cfg, id));
    total_slices += slices[i].size();
    if (used[i] == SplitMethod::gps) ++gps_count;
    for (const auto& w : metadata[i]) verification += id + " " + w + "\n";
    for (const auto& f : verify[i].flags) verification += id + " " + f + "\n";
    flag_count += verify[i].flags.size() + metadata[i].size();
    centers.insert(centers.end(), verify[i].centers.begin(), verify[i].centers.end());
  }
  write_file(cfg.output_dir / "verification.txt", verification);
  std::sort(centers.begin(), centers.end(),
            [](const PlotCenterEstimate& a, const PlotCenterEstimate& b) {
              if (a.plot_id != b.plot_id) return a.plot_id < b.plot_id;
              return a.side < b.side;
            });
  write_plot_centers(centers, cfg.output_dir / "plot_centers.csv");

  return "split: " + std::to_string(total_slices) + " slices from " + std::to_string(n) +
         " collections (" + std::to_string(gps_count) + " gps, " +
         std::to_string(n - gps_count) + " lidar), " + std::to_string(flag_count) +
         " verification flags";
}

std::string run_stage_frames(const PipelineConfig& cfg) {
  const PipelineInputs in = load_inputs(cfg);
  const int k = cfg.k_frames > 0
                    ? cfg.k_frames
                    : default_frame_count(in.layout.plot_length_m, cfg.footprint_m);
  const std::size_t n = in.collections.size();

  std::vector<std::vector<FrameSelection>> selections(n);
  parallel_for(n, resolve_workers(cfg.workers), [&](std::size_t i) {
    const Collection& c = in.collections[i];
    const auto slices = read_slices(slices_path(cfg, c.manifest.collection_id));
    selections[i].reserve(slices.size());
    for (const auto& s : slices)
      selections[i].push_back(select_frames(s, c.frames, c.odometry, k, cfg.footprint_m));
  });

  std::size_t n_slices = 0, n_frames = 0;
  for (std::size_t i = 0; i < n; ++i) {
    write_selections(selections[i],
                     selections_path(cfg, in.collections[i].manifest.collection_id));
    n_slices += selections[i].size();
    for (const auto& s : selections[i]) n_frames += s.selected.size();
  }
  return "frames: " + std::to_string(n_frames) + " frames selected for " +
         std::to_string(n_slices) + " slices (k=" + std::to_string(k) + ")";
}

std::string run_stage_count(const PipelineConfig& cfg) {
  const PipelineInputs in = load_inputs(cfg);
  const std::unique_ptr<Detector> detector = make_detector(cfg, in);
  const std::size_t n = in.collections.size();
  const int workers = detector->concurrent_safe() ? resolve_workers(cfg.workers) : 1;

  std::vector<std::vector<PlotObservation>> observations(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const Collection& c = in.collections[i];
    const auto selections = read_selections(selections_path(cfg, c.manifest.collection_id));
    if (selections.empty()) return;

    std::unordered_map<std::string_view, const FrameRecord*> frame_index;
    frame_index.reserve(c.frames.size());
    for (const auto& f : c.frames) frame_index.emplace(f.frame_id, &f);
    const GpsTrack track(c, in.layout);

    for (const auto& sel : selections) {
      const auto& meta = c.manifest.side(sel.side);
      std::vector<int> counts;
      counts.reserve(sel.selected.size());
      for (const auto& chosen : sel.selected) {
        const auto it = frame_index.find(chosen.frame_id);
        if (it == frame_index.end())
          fail(Errc::integrity, "collection '" + c.manifest.collection_id +
                                    "': selection references unknown frame '" +
                                    chosen.frame_id + "'");
        FrameContext ctx;
        ctx.frame = it->second;
        ctx.has_center = track.usable;
        ctx.center_s_m = track.usable ? track.at(it->second->time_s) : 0.0;
        ctx.column_index = meta ? meta->column_index : -1;
        counts.push_back(count_frame(detector->detect(ctx), cfg.confidence_threshold));
      }
      observations[i].push_back(
          aggregate_plot(sel, counts, cfg.calibration_c, in.layout.plot_length_m));
    }
  });

  std::map<int, std::vector<PlotObservation>> by_plot;
  for (const auto& per_collection : observations)
    for (const auto& obs : per_collection) by_plot[obs.plot_id].push_back(obs);

  std::vector<PlotResult> results;
  results.reserve(by_plot.size());
  std::size_t dual = 0;
  for (auto& [plot_id, obs] : by_plot) {
    std::sort(obs.begin(), obs.end(), [](const PlotObservation& a, const PlotObservation& b) {
      return a.side < b.side;
    });
    results.push_back(merge_sides(obs));
    if (results.back().n_sides == 2) ++dual;
  }
  write_counts(results, cfg.output_dir / "counts.csv");

  if (auto* fd = dynamic_cast<FileDetector*>(detector.get())) {
    const auto notices = fd->notices();
    if (!notices.empty()) {
      std::string text;
      for (const auto& id : notices) text += "no-detections: frame " + id + "\n";
      write_file(cfg.output_dir / "detector_notices.txt", text);
    }
  }

  return "count: " + std::to_string(results.size()) + " plots (" + std::to_string(dual) +
         " dual-side)";
}

std::string run_stage_analyze(const PipelineConfig& cfg) {
  require_exists(cfg.yields_path, "yields");
  std::vector<PlotResult> results = read_counts(cfg.output_dir / "counts.csv");
  join_yields(results, read_yields(cfg.yields_path));

  const StageReports stages = run_stages(results);

  std::size_t manual_rows = 0;
  for (const auto& r : results)
    if (r.manual_count) ++manual_rows;
  std::optional<ManualComparison> manual;
  if (manual_rows >= 3) manual = manual_count_comparison(results);

  json j;
  j["config"] = json::parse(config_echo_json(cfg));
  j["stages"] = {{"all", report_to_json(stages.all)},
                 {"filtered", report_to_json(stages.filtered)},
                 {"averaged", report_to_json(stages.averaged)}};
  if (manual) {
    j["manual"] = {{"before", report_to_json(manual->before)},
                   {"after", report_to_json(manual->after)}};
  } else {
    j["manual"] = nullptr;
    j["manual_skipped"] = "only " + std::to_string(manual_rows) +
                          " plots have manual counts, need >= 3";
  }
  write_file(cfg.output_dir / "report.json", j.dump(2) + "\n");

  std::string csv = "stage,n,r,slope,intercept,n_removed\n";
  csv += report_csv_row(stages.all);
  csv += report_csv_row(stages.filtered);
  csv += report_csv_row(stages.averaged);
  if (manual) {
    csv += report_csv_row(manual->before);
    csv += report_csv_row(manual->after);
  }
  write_file(cfg.output_dir / "report.csv", csv);

  std::map<std::pair<int, int>, std::pair<double, double>> all_points;
  for (const auto& rec : stages.series_all.records)
    all_points[{rec.plot_id, rec.side ? static_cast<int>(*rec.side) : -1}] = {rec.x, rec.y};
  std::vector<std::pair<double, double>> removed_points;
  for (const auto& o : stages.filtered.removed) {
    const auto it = all_points.find({o.plot_id, o.side ? static_cast<int>(*o.side) : -1});
    if (it != all_points.end()) removed_points.push_back(it->second);
  }

  const auto scatter = [&](const CorrelationReport& rep, const PairedSeries& series,
                           const std::string& title,
                           std::vector<std::pair<double, double>> removed,
                           const std::filesystem::path& path) {
    ScatterSpec spec;
    spec.title = title;
    spec.label_x = series.label_x;
    spec.label_y = series.label_y;
    spec.points = series_points(series);
    spec.removed = std::move(removed);
    spec.slope = rep.slope;
    spec.intercept = rep.intercept;
    spec.r = rep.r;
    spec.n = rep.n;
    write_scatter(spec, path);
  };
  scatter(stages.all, stages.series_all, "Pod count vs yield: all plot sides", {},
          cfg.output_dir / "scatter_all.svg");
  scatter(stages.filtered, stages.series_filtered, "Pod count vs yield: 2-sigma filtered",
          removed_points, cfg.output_dir / "scatter_filtered.svg");
  scatter(stages.averaged, stages.series_averaged, "Pod count vs yield: side-averaged", {},
          cfg.output_dir / "scatter_averaged.svg");

  std::string summary = "analyze: r all=" + canon(stages.all.r) +
                        " filtered=" + canon(stages.filtered.r) +
                        " averaged=" + canon(stages.averaged.r) + " (n " +
                        std::to_string(stages.all.n) + " -> " +
                        std::to_string(stages.filtered.n) + " -> " +
                        std::to_string(stages.averaged.n) + ")";
  if (manual)
    summary += ", manual r " + canon(manual->before.r) + " -> " + canon(manual->after.r);
  return summary;
}

std::vector<std::string> run_pipeline(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  std::vector<std::string> summaries;
  std::vector<std::string> completed;
  write_manifest_file(cfg, completed, "", "");

  const std::pair<const char*, std::string (*)(const PipelineConfig&)> stages[] = {
      {"split", run_stage_split},
      {"frames", run_stage_frames},
      {"count", run_stage_count},
      {"analyze", run_stage_analyze},
  };
  for (const auto& [name, fn] : stages) {
    try {
      summaries.push_back(fn(cfg));
    } catch (const std::exception& e) {
      write_manifest_file(cfg, completed, name, e.what());
      throw;
    }
    completed.push_back(name);
    write_manifest_file(cfg, completed, "", "");
  }
  return summaries;
}

SimConfig read_sim_config(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  const std::string file = path.string();
  if (!j.is_object()) fail_at(Errc::config, file, 1, "config root must be an object");
  reject_unknown_keys(j,
                      {"layout", "layout_path", "seed", "pods_mean", "pods_sd", "grams_per_pod",
                       "yield_noise_sd", "gps_noise_sd_m", "odom_drift_frac", "frame_rate_hz",
                       "robot_speed_mps", "camera_footprint_m", "detector_recall",
                       "detector_precision", "bad_plot_fraction", "flood_multiplier",
                       "manual_count_plots", "manual_count_noise"},
                      file, "sim config");
  SimConfig cfg;
  if (j.contains("layout") && j.contains("layout_path"))
    fail_at(Errc::config, file, 1, "give 'layout' inline or 'layout_path', not both");
  if (j.contains("layout")) {
    if (!j.at("layout").is_object()) fail_at(Errc::config, file, 1, "'layout' must be an object");
    cfg.layout = parse_layout_text(j.at("layout").dump(), file + "#layout");
  } else if (j.contains("layout_path")) {
    cfg.layout = read_layout(str_or(j, "layout_path", "", file));
  } else {
    fail_at(Errc::config, file, 1, "sim config needs 'layout' (inline) or 'layout_path'");
  }
  const long long seed = int_or(j, "seed", 0, file);
  if (seed < 0) fail_at(Errc::config, file, 1, "'seed' must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.pods_mean = num_or(j, "pods_mean", cfg.pods_mean, file);
  cfg.pods_sd = num_or(j, "pods_sd", cfg.pods_sd, file);
  cfg.grams_per_pod = num_or(j, "grams_per_pod", cfg.grams_per_pod, file);
  cfg.yield_noise_sd = num_or(j, "yield_noise_sd", cfg.yield_noise_sd, file);
  cfg.gps_noise_sd_m = num_or(j, "gps_noise_sd_m", cfg.gps_noise_sd_m, file);
  cfg.odom_drift_frac = num_or(j, "odom_drift_frac", cfg.odom_drift_frac, file);
  cfg.frame_rate_hz = num_or(j, "frame_rate_hz", cfg.frame_rate_hz, file);
  cfg.robot_speed_mps = num_or(j, "robot_speed_mps", cfg.robot_speed_mps, file);
  cfg.camera_footprint_m = num_or(j, "camera_footprint_m", cfg.camera_footprint_m, file);
  cfg.detector_recall = num_or(j, "detector_recall", cfg.detector_recall, file);
  cfg.detector_precision = num_or(j, "detector_precision", cfg.detector_precision, file);
  cfg.bad_plot_fraction = num_or(j, "bad_plot_fraction", cfg.bad_plot_fraction, file);
  cfg.flood_multiplier = num_or(j, "flood_multiplier", cfg.flood_multiplier, file);
  cfg.manual_count_plots =
      static_cast<int>(int_or(j, "manual_count_plots", cfg.manual_count_plots, file));
  cfg.manual_count_noise =
      static_cast<int>(int_or(j, "manual_count_noise", cfg.manual_count_noise, file));
  return cfg;
}

void apply_sim_override(SimConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    fail(Errc::config, "override must look like key=value, got '" + std::string(assignment) + "'");
  const std::string_view key = assignment.substr(0, eq);
  const std::string_view value = assignment.substr(eq + 1);

  if (key == "seed") {
    const long long v = parse_int_or_fail(key, value);
    if (v < 0) fail(Errc::config, "override 'seed' must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (key == "pods_mean") cfg.pods_mean = parse_double_or_fail(key, value);
  else if (key == "pods_sd") cfg.pods_sd = parse_double_or_fail(key, value);
  else if (key == "grams_per_pod") cfg.grams_per_pod = parse_double_or_fail(key, value);
  else if (key == "yield_noise_sd") cfg.yield_noise_sd = parse_double_or_fail(key, value);
  else if (key == "gps_noise_sd_m") cfg.gps_noise_sd_m = parse_double_or_fail(key, value);
  else if (key == "odom_drift_frac") cfg.odom_drift_frac = parse_double_or_fail(key, value);
  else if (key == "frame_rate_hz") cfg.frame_rate_hz = parse_double_or_fail(key, value);
  else if (key == "robot_speed_mps") cfg.robot_speed_mps = parse_double_or_fail(key, value);
  else if (key == "camera_footprint_m")
    cfg.camera_footprint_m = parse_double_or_fail(key, value);
  else if (key == "detector_recall") cfg.detector_recall = parse_double_or_fail(key, value);
  else if (key == "detector_precision")
    cfg.detector_precision = parse_double_or_fail(key, value);
  else if (key == "bad_plot_fraction") cfg.bad_plot_fraction = parse_double_or_fail(key, value);
  else if (key == "flood_multiplier") cfg.flood_multiplier = parse_double_or_fail(key, value);
  else if (key == "manual_count_plots")
    cfg.manual_count_plots = static_cast<int>(parse_int_or_fail(key, value));
  else if (key == "manual_count_noise")
    cfg.manual_count_noise = static_cast<int>(parse_int_or_fail(key, value));
  else fail(Errc::config, "unknown override key '" + std::string(key) + "'");
}

std::string run_simulate(const SimConfig& cfg, const std::filesystem::path& out_dir) {
  const Simulation sim = simulate(cfg);
  write_simulation(cfg, sim, out_dir);
  std::size_t corrupted = 0, manual = 0;
  for (const auto& p : sim.truth.plots) {
    if (p.is_corrupted) ++corrupted;
    if (p.manual_count) ++manual;
  }
  return "simulate: " + std::to_string(sim.truth.plots.size()) + " plots, " +
         std::to_string(sim.collections.size()) + " passes, " + std::to_string(corrupted) +
         " corrupted, " + std::to_string(manual) + " manual counts, seed " +
         std::to_string(cfg.seed);
}

}  // namespace podpipe
