// Process-level tests of the podpipe command-line tool. The binary path
// arrives in the PODPIPE_BIN environment variable.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "podpipe/collection.hpp"
#include "podpipe/field_layout.hpp"
#include "podpipe/sim.hpp"
#include "podpipe/textio.hpp"
#include "support/fixtures.hpp"

using namespace podpipe;
using namespace podpipe::testing;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const char* bin() {
  const char* b = std::getenv("PODPIPE_BIN");
  REQUIRE_MESSAGE(b != nullptr, "PODPIPE_BIN must point at the podpipe binary");
  return b;
}

RunResult run_cli(const TempDir& tmp, const std::string& args) {
  const auto out_path = tmp.path() / "stdout.txt";
  const auto err_path = tmp.path() / "stderr.txt";
  const std::string cmd = std::string(bin()) + " " + args + " > " + out_path.string() +
                          " 2> " + err_path.string();
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = (rc >= 0 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
  r.out = std::filesystem::exists(out_path) ? read_file(out_path) : "";
  r.err = std::filesystem::exists(err_path) ? read_file(err_path) : "";
  return r;
}

std::filesystem::path write_sim_config(const TempDir& tmp, int n_columns = 2,
                                       int n_ranges = 3) {
  const auto p = tmp.path() / "sim.json";
  write_file(p, "{\n"
                "  \"seed\": 5,\n"
                "  \"layout\": {\"n_ranges\": " +
                    std::to_string(n_ranges) + ", \"n_columns\": " +
                    std::to_string(n_columns) +
                    ", \"base_plot_id\": 100,\n"
                    "             \"row_spacing_m\": 0.76, \"plot_length_m\": 1.0, "
                    "\"alley_length_m\": 0.9,\n"
                    "             \"origin\": {\"latitude_deg\": 40.1, \"longitude_deg\": "
                    "-88.2},\n"
                    "             \"column_axis_bearing_deg\": 0.0, "
                    "\"serpentine_even_ascending\": true}\n"
                    "}\n");
  return p;
}

std::filesystem::path write_pipe_config(const TempDir& tmp,
                                        const std::filesystem::path& field,
                                        const std::filesystem::path& out) {
  const auto p = tmp.path() / "pipe.json";
  write_file(p, std::string("{\n") + "  \"layout\": \"" + (field / "layout.json").string() +
                    "\",\n  \"collections\": \"" + (field / "collections").string() +
                    "\",\n  \"yields\": \"" + (field / "truth.csv").string() +
                    "\",\n  \"out\": \"" + out.string() + "\",\n  \"seed\": 5\n}\n");
  return p;
}

}  // namespace

TEST_CASE("simulate and pipeline succeed end to end with summaries") {
  TempDir tmp;
  const auto sim_cfg = write_sim_config(tmp);
  const auto field = tmp.path() / "field";
  const RunResult sim = run_cli(tmp, "simulate --config " + sim_cfg.string() + " --out " +
                                         field.string());
  CHECK(sim.exit_code == 0);
  CHECK(sim.out.find("simulate:") != std::string::npos);
  CHECK(std::filesystem::exists(field / "layout.json"));
  CHECK(std::filesystem::exists(field / "truth.csv"));

  const auto out = tmp.path() / "out";
  const auto pipe_cfg = write_pipe_config(tmp, field, out);
  const RunResult pipe = run_cli(tmp, "pipeline --config " + pipe_cfg.string());
  CHECK(pipe.exit_code == 0);
  for (const char* stage : {"split:", "frames:", "count:", "analyze:"})
    CHECK(pipe.out.find(stage) != std::string::npos);
  CHECK(std::filesystem::exists(out / "report.json"));
  CHECK(pipe.err.empty());
}

TEST_CASE("usage problems exit 2 with an ERROR cli line") {
  TempDir tmp;
  const RunResult missing = run_cli(tmp, "pipeline");
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("ERROR cli usage:") != std::string::npos);

  const RunResult unknown = run_cli(tmp, "conquer --config x.json");
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.err.find("ERROR cli usage:") != std::string::npos);

  const RunResult no_sub = run_cli(tmp, "");
  CHECK(no_sub.exit_code == 2);

  const RunResult help = run_cli(tmp, "--help");
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("simulate") != std::string::npos);
  CHECK(help.out.find("pipeline") != std::string::npos);
}

TEST_CASE("a missing yields file exits 2 and names the path") {
  TempDir tmp;
  const auto sim_cfg = write_sim_config(tmp);
  const auto field = tmp.path() / "field";
  REQUIRE(run_cli(tmp, "simulate --config " + sim_cfg.string() + " --out " + field.string())
              .exit_code == 0);
  std::filesystem::remove(field / "truth.csv");
  const auto pipe_cfg = write_pipe_config(tmp, field, tmp.path() / "out");
  const RunResult r = run_cli(tmp, "pipeline --config " + pipe_cfg.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("ERROR") != std::string::npos);
  CHECK(r.err.find("truth.csv") != std::string::npos);
}

TEST_CASE("split honors --method and reports unavailable modes") {
  TempDir tmp;
  const auto sim_cfg = write_sim_config(tmp);
  const auto field = tmp.path() / "field";
  REQUIRE(run_cli(tmp, "simulate --config " + sim_cfg.string() + " --out " + field.string())
              .exit_code == 0);
  // Strip GPS from every collection: auto must fall back to lidar, gps must
  // refuse with exit 3.
  for (const auto& entry : std::filesystem::directory_iterator(field / "collections")) {
    Collection c = read_collection(entry.path());
    c.gps.clear();
    write_collection(c, entry.path());
  }
  const auto out = tmp.path() / "out";
  const auto pipe_cfg = write_pipe_config(tmp, field, out);

  const RunResult lidar =
      run_cli(tmp, "split --config " + pipe_cfg.string() + " --method lidar");
  CHECK(lidar.exit_code == 0);
  CHECK(std::filesystem::exists(out / "verification.txt"));

  const RunResult gps = run_cli(tmp, "split --config " + pipe_cfg.string() + " --method gps");
  CHECK(gps.exit_code == 3);
  CHECK(gps.err.find("ERROR split mode-unavailable:") != std::string::npos);

  const RunResult fallback = run_cli(tmp, "split --config " + pipe_cfg.string());
  CHECK(fallback.exit_code == 0);
  CHECK(fallback.out.find("lidar)") != std::string::npos);
}

TEST_CASE("analyze computes the documented statistics on a hand-built table") {
  TempDir tmp;
  const auto out = tmp.path() / "out";
  std::filesystem::create_directories(out);
  write_file(out / "counts.csv",
             "plot_id,count_left,count_right,combined_count,n_sides,flags\n"
             "100,1,,1,1,\n"
             "101,2,,2,1,\n"
             "102,3,,3,1,\n"
             "103,4,,4,1,\n");
  write_file(tmp.path() / "yields.csv",
             "plot_id,yield_g\n100,1\n101,3\n102,2\n103,4\n");
  // The analyze stage needs no layout or collections.
  const auto cfg = tmp.path() / "cfg.json";
  write_file(cfg, std::string("{\"yields\": \"") + (tmp.path() / "yields.csv").string() +
                      "\", \"out\": \"" + out.string() + "\"}");
  const RunResult r = run_cli(tmp, "analyze --config " + cfg.string());
  CHECK(r.exit_code == 0);
  const json report = json::parse(read_file_or_fail(out / "report.json"));
  CHECK(report.at("stages").at("all").at("r").get<double>() == doctest::Approx(0.8));
  CHECK(report.at("stages").at("all").at("slope").get<double>() == doctest::Approx(0.8));
  CHECK(report.at("stages").at("all").at("intercept").get<double>() ==
        doctest::Approx(0.5));
  CHECK(report.at("stages").at("filtered").at("n").get<int>() == 4);
  CHECK(report.at("manual").is_null());
  // report.csv mirrors the three stages.
  const std::string csv = read_file_or_fail(out / "report.csv");
  CHECK(csv.find("all,") != std::string::npos);
  CHECK(csv.find("filtered,") != std::string::npos);
  CHECK(csv.find("averaged,") != std::string::npos);
}

TEST_CASE("simulate is deterministic across processes") {
  TempDir tmp;
  const auto sim_cfg = write_sim_config(tmp);
  const auto a = tmp.path() / "a";
  const auto b = tmp.path() / "b";
  REQUIRE(run_cli(tmp, "simulate --config " + sim_cfg.string() + " --out " + a.string())
              .exit_code == 0);
  REQUIRE(run_cli(tmp, "simulate --config " + sim_cfg.string() + " --out " + b.string())
              .exit_code == 0);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = std::filesystem::relative(e.path(), a);
    CAPTURE(rel.string());
    CHECK(read_file_or_fail(e.path()) == read_file_or_fail(b / rel));
  }
  CHECK(files >= 16);  // 3 passes x 5 files + layout + truth
}

TEST_CASE("a single-column field still gets a pass on each side") {
  TempDir tmp;
  // Four ranges: the yield regression needs at least three joined plots.
  const auto sim_cfg = write_sim_config(tmp, 1, 4);
  const auto field = tmp.path() / "field";
  REQUIRE(run_cli(tmp, "simulate --config " + sim_cfg.string() + " --out " + field.string())
              .exit_code == 0);
  std::size_t passes = 0;
  for (const auto& e : std::filesystem::directory_iterator(field / "collections"))
    passes += e.is_directory() ? 1 : 0;
  CHECK(passes == 2);

  const auto out = tmp.path() / "out";
  const auto pipe_cfg = write_pipe_config(tmp, field, out);
  const RunResult pipe = run_cli(tmp, "pipeline --config " + pipe_cfg.string());
  CHECK(pipe.exit_code == 0);
  const std::string counts = read_file_or_fail(out / "counts.csv");
  // Both plots appear with both sides observed.
  CHECK(counts.find("\n100,") != std::string::npos);
  CHECK(counts.find("\n101,") != std::string::npos);
}

TEST_CASE("overrides flow through --set") {
  TempDir tmp;
  const auto sim_cfg = write_sim_config(tmp);
  const auto field = tmp.path() / "field";
  REQUIRE(run_cli(tmp, "simulate --config " + sim_cfg.string() + " --out " + field.string())
              .exit_code == 0);
  const auto out = tmp.path() / "out";
  const auto pipe_cfg = write_pipe_config(tmp, field, out);
  const RunResult r = run_cli(tmp, "pipeline --config " + pipe_cfg.string() +
                                       " --set k_frames=3 --set confidence_threshold=0.25");
  CHECK(r.exit_code == 0);
  const json report = json::parse(read_file_or_fail(out / "report.json"));
  CHECK(report.at("config").at("k_frames").get<int>() == 3);
  CHECK(report.at("config").at("confidence_threshold").get<double>() == 0.25);

  const RunResult bad = run_cli(tmp, "pipeline --config " + pipe_cfg.string() +
                                         " --set nonsense=1");
  CHECK(bad.exit_code == 2);
  CHECK(bad.err.find("nonsense") != std::string::npos);
}
