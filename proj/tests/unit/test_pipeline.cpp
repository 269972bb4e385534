#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "podpipe/errors.hpp"
#include "podpipe/pipeline.hpp"
#include "podpipe/textio.hpp"
#include "support/fixtures.hpp"

using namespace podpipe;
using namespace podpipe::testing;
using nlohmann::json;

TEST_CASE("pipeline configs parse with defaults and reject unknown keys") {
  TempDir tmp;
  const auto p = tmp.path() / "cfg.json";
  write_file(p, R"({
  "layout": "field/layout.json",
  "collections": "field/collections",
  "yields": "field/truth.csv",
  "out": "out",
  "seed": 12,
  "crop": {"left": 0.1, "right": 0.2},
  "split": {"method": "lidar", "coverage_threshold": 0.6}
})");
  const PipelineConfig cfg = read_pipeline_config(p);
  CHECK(cfg.layout_path == "field/layout.json");
  CHECK(cfg.seed == 12);
  CHECK(cfg.detector == "oracle");
  CHECK(cfg.crop.left_frac == 0.1);
  CHECK(cfg.crop.right_frac == 0.2);
  CHECK(cfg.crop.top_frac == 0.0);
  CHECK(cfg.split_method == "lidar");
  CHECK(cfg.split.coverage_threshold == 0.6);
  CHECK(cfg.split.smoothing_window == 15);  // untouched default
  CHECK(cfg.workers == 0);

  write_file(p, R"({"layout": "x", "surprising_key": 1})");
  try {
    (void)read_pipeline_config(p);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
    CHECK(std::string(e.what()).find("surprising_key") != std::string::npos);
  }
  write_file(p, R"({"crop": {"left": 0.1, "diag": 0.1}})");
  CHECK_THROWS_AS((void)read_pipeline_config(p), Error);
  write_file(p, R"({"seed": -4})");
  CHECK_THROWS_AS((void)read_pipeline_config(p), Error);
  write_file(p, "{nope");
  CHECK_THROWS_AS((void)read_pipeline_config(p), Error);
}

TEST_CASE("overrides rewrite any config field from key=value text") {
  PipelineConfig cfg;
  apply_config_override(cfg, "layout=a/b.json");
  apply_config_override(cfg, "detector_recall=0.75");
  apply_config_override(cfg, "seed=99");
  apply_config_override(cfg, "crop_left=0.15");
  apply_config_override(cfg, "split_method=gps");
  apply_config_override(cfg, "coverage_threshold=0.55");
  apply_config_override(cfg, "smoothing_window=9");
  apply_config_override(cfg, "workers=4");
  CHECK(cfg.layout_path == "a/b.json");
  CHECK(cfg.detector_recall == 0.75);
  CHECK(cfg.seed == 99);
  CHECK(cfg.crop.left_frac == 0.15);
  CHECK(cfg.split_method == "gps");
  CHECK(cfg.split.coverage_threshold == 0.55);
  CHECK(cfg.split.smoothing_window == 9);
  CHECK(cfg.workers == 4);

  const auto expect_config_error = [&](const char* assignment) {
    try {
      apply_config_override(cfg, assignment);
      FAIL("expected a config error for ", assignment);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config);
    }
  };
  expect_config_error("unknown_key=1");
  expect_config_error("detector_recall=soon");
  expect_config_error("seed=-1");
  expect_config_error("no_equals_sign");
  expect_config_error("=5");
}

TEST_CASE("the effective config echo is canonical and override-aware") {
  PipelineConfig cfg;
  cfg.layout_path = "l.json";
  const std::string before = config_echo_json(cfg);
  CHECK(before == config_echo_json(cfg));  // stable
  apply_config_override(cfg, "detector_recall=0.5");
  const std::string after = config_echo_json(cfg);
  CHECK(before != after);
  const json j = json::parse(after);
  CHECK(j.at("detector_recall").get<double>() == 0.5);
  CHECK(j.at("layout").get<std::string>() == "l.json");
  CHECK(j.contains("split"));
  CHECK(j.at("split").at("method").get<std::string>() == "auto");
}

TEST_CASE("yield tables accept both the minimal and the reference format") {
  TempDir tmp;
  const auto p = tmp.path() / "y.csv";
  write_file(p, "plot_id,yield_g\n100,51.5\n101,60\n");
  auto rows = read_yields(p);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].plot_id == 100);
  CHECK(rows[0].yield_g == 51.5);
  CHECK_FALSE(rows[0].manual_count.has_value());

  write_file(p, "plot_id,yield_g,manual_count\n100,51.5,40\n101,60,\n");
  rows = read_yields(p);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].manual_count == 40);
  CHECK_FALSE(rows[1].manual_count.has_value());

  write_file(p,
             "plot_id,true_pods,yield_g,manual_count,is_corrupted\n"
             "100,40,200.5,41,0\n"
             "101,50,250,,1\n");
  rows = read_yields(p);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].yield_g == 200.5);
  CHECK(rows[0].manual_count == 41);
  CHECK(rows[1].yield_g == 250.0);

  // Ids must be strictly increasing in every format.
  write_file(p, "plot_id,yield_g\n101,60\n100,51.5\n");
  CHECK_THROWS_AS((void)read_yields(p), Error);
  write_file(p, "some,other,header\n1,2,3\n");
  CHECK_THROWS_AS((void)read_yields(p), Error);
  write_file(p, "plot_id,yield_g\n100,fifty\n");
  try {
    (void)read_yields(p);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse);
    CHECK(e.line() == 2);
  }
}

TEST_CASE("simulator configs parse inline or referenced layouts, not both") {
  TempDir tmp;
  const auto p = tmp.path() / "sim.json";
  write_file(p, R"({
  "seed": 7,
  "layout": {"n_ranges": 3, "n_columns": 2, "base_plot_id": 100,
             "row_spacing_m": 0.76, "plot_length_m": 1.0, "alley_length_m": 0.9,
             "origin": {"latitude_deg": 40.1, "longitude_deg": -88.2},
             "column_axis_bearing_deg": 0.0, "serpentine_even_ascending": true},
  "gps_noise_sd_m": 0.0
})");
  const SimConfig cfg = read_sim_config(p);
  CHECK(cfg.seed == 7);
  CHECK(cfg.layout.n_ranges == 3);
  CHECK(cfg.layout.base_plot_id == 100);
  CHECK(cfg.gps_noise_sd_m == 0.0);
  CHECK(cfg.flood_multiplier == 5.0);  // default

  // A layout file reference works too.
  write_layout(cfg.layout, tmp.path() / "layout.json");
  write_file(p, std::string(R"({"seed": 7, "layout_path": ")") +
                    (tmp.path() / "layout.json").string() + "\"}");
  CHECK(read_sim_config(p).layout.n_ranges == 3);

  // Neither or both layout sources is a config error.
  write_file(p, R"({"seed": 7})");
  try {
    (void)read_sim_config(p);
    FAIL("expected a config error when no layout source is given");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
    CHECK(std::string(e.what()).find("layout") != std::string::npos);
  }
  write_file(p, std::string(R"({"seed": 7,
  "layout": {"n_ranges": 3, "n_columns": 2, "base_plot_id": 100,
             "row_spacing_m": 0.76, "plot_length_m": 1.0, "alley_length_m": 0.9,
             "origin": {"latitude_deg": 40.1, "longitude_deg": -88.2},
             "column_axis_bearing_deg": 0.0, "serpentine_even_ascending": true},
  "layout_path": ")") +
                    (tmp.path() / "layout.json").string() + "\"}");
  try {
    (void)read_sim_config(p);
    FAIL("expected a config error when both layout sources are given");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
    CHECK(std::string(e.what()).find("not both") != std::string::npos);
  }

  SimConfig base = cfg;
  apply_sim_override(base, "bad_plot_fraction=0.25");
  CHECK(base.bad_plot_fraction == 0.25);
  apply_sim_override(base, "manual_count_plots=9");
  CHECK(base.manual_count_plots == 9);
  CHECK_THROWS_AS(apply_sim_override(base, "mystery=1"), Error);
}

TEST_CASE("input loading requires manifest-bearing collection directories") {
  TempDir tmp;
  SimConfig sim;
  sim.layout = tiny_layout();
  sim.seed = 2;
  const auto field = tmp.path() / "field";
  run_simulate(sim, field);

  PipelineConfig cfg;
  cfg.layout_path = field / "layout.json";
  cfg.collections_dir = field / "collections";
  cfg.yields_path = field / "truth.csv";
  cfg.output_dir = tmp.path() / "out";
  const PipelineInputs inputs = load_inputs(cfg);
  CHECK(inputs.collections.size() == 3);  // n_columns + 1 passes
  CHECK(inputs.layout.base_plot_id == 100);
  // Sorted directory order, which is also pass order here.
  for (std::size_t i = 0; i + 1 < inputs.collection_dirs.size(); ++i)
    CHECK(inputs.collection_dirs[i].filename().string() <
          inputs.collection_dirs[i + 1].filename().string());

  PipelineConfig empty = cfg;
  empty.collections_dir = tmp.path() / "nothing_here";
  CHECK_THROWS_AS((void)load_inputs(empty), Error);
}

TEST_CASE("a full run writes every product and an honest manifest") {
  TempDir tmp;
  SimConfig sim;
  sim.layout = tiny_layout();
  sim.seed = 21;
  sim.manual_count_plots = 4;
  const auto field = tmp.path() / "field";
  run_simulate(sim, field);

  PipelineConfig cfg;
  cfg.layout_path = field / "layout.json";
  cfg.collections_dir = field / "collections";
  cfg.yields_path = field / "truth.csv";
  cfg.output_dir = tmp.path() / "out";
  cfg.seed = sim.seed;
  const auto summaries = run_pipeline(cfg);
  REQUIRE(summaries.size() == 4);
  CHECK(summaries[0].find("split:") == 0);
  CHECK(summaries[3].find("analyze:") == 0);

  for (const char* f : {"MANIFEST.json", "counts.csv", "report.json", "report.csv",
                        "verification.txt", "plot_centers.csv", "scatter_all.svg",
                        "scatter_filtered.svg", "scatter_averaged.svg"}) {
    CAPTURE(f);
    CHECK(std::filesystem::exists(cfg.output_dir / f));
  }
  const json manifest = json::parse(read_file_or_fail(cfg.output_dir / "MANIFEST.json"));
  const std::vector<std::string> completed = manifest.at("completed");
  CHECK(completed == std::vector<std::string>{"split", "frames", "count", "analyze"});
  CHECK_FALSE(manifest.contains("failed_stage"));

  const json report = json::parse(read_file_or_fail(cfg.output_dir / "report.json"));
  CHECK(report.at("stages").at("all").at("n").get<int>() > 0);
  CHECK(report.at("config").at("seed").get<int>() == 21);
  CHECK(report.contains("manual"));

  // A failing stage leaves the manifest naming the failure.
  PipelineConfig broken = cfg;
  broken.output_dir = tmp.path() / "out2";
  broken.yields_path = tmp.path() / "missing.csv";
  CHECK_THROWS_AS((void)run_pipeline(broken), Error);
  const json failed = json::parse(read_file_or_fail(broken.output_dir / "MANIFEST.json"));
  // The reference detector loads the yield table while counting, so a missing
  // yields file surfaces during the count stage rather than at analyze.
  CHECK(failed.at("failed_stage").get<std::string>() == "count");
  const std::vector<std::string> partial = failed.at("completed");
  CHECK(partial == std::vector<std::string>{"split", "frames"});
  CHECK_FALSE(failed.at("error").get<std::string>().empty());
}

TEST_CASE("the file detector path consumes sidecar stores end to end") {
  TempDir tmp;
  SimConfig sim;
  sim.layout = tiny_layout();
  sim.seed = 33;
  const auto field = tmp.path() / "field";
  run_simulate(sim, field);

  // Move every embedded detection into sidecar stores, as an external
  // model would deliver them. Frames keep has_detections=false.
  for (const auto& entry :
       std::filesystem::directory_iterator(field / "collections")) {
    const Collection c = read_collection(entry.path());
    std::vector<FrameDetections> store;
    Collection stripped = c;
    for (auto& f : stripped.frames) {
      store.push_back({f.frame_id, f.detections});
      f.detections.clear();
      f.has_detections = false;
    }
    write_collection(stripped, entry.path());
    write_detections_file(store, entry.path() / "detections.jsonl");
  }

  PipelineConfig cfg;
  cfg.layout_path = field / "layout.json";
  cfg.collections_dir = field / "collections";
  cfg.yields_path = field / "truth.csv";
  cfg.output_dir = tmp.path() / "out";
  cfg.detector = "file";
  cfg.crop = CropSpec{0.0, 0.0, 0.0, 0.0};  // stores hold raw-frame boxes
  (void)run_pipeline(cfg);
  const auto counts = read_counts(cfg.output_dir / "counts.csv");
  CHECK(counts.size() == 6);
  bool any_nonzero = false;
  for (const auto& r : counts) any_nonzero |= r.combined_count > 0.0;
  CHECK(any_nonzero);
}

TEST_CASE("the oracle detector demands reference-format yields") {
  TempDir tmp;
  SimConfig sim;
  sim.layout = tiny_layout();
  sim.seed = 2;
  const auto field = tmp.path() / "field";
  run_simulate(sim, field);

  PipelineConfig cfg;
  cfg.layout_path = field / "layout.json";
  cfg.collections_dir = field / "collections";
  cfg.yields_path = tmp.path() / "minimal.csv";
  cfg.output_dir = tmp.path() / "out";
  write_file(cfg.yields_path, "plot_id,yield_g\n100,50\n101,60\n");
  try {
    (void)run_pipeline(cfg);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
  }
}
