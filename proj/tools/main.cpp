// podpipe: batch pipeline turning robot sensor logs into per-plot pod
// counts and yield-correlation reports, plus a synthetic-field simulator.
//
// Exit codes: 0 success, 2 usage/config, 3 split mode unavailable,
// 4 data problem. Every failure prints one line to stderr shaped
// "ERROR <stage> <code>: <message>".
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "podpipe/errors.hpp"
#include "podpipe/pipeline.hpp"

namespace {

struct StageArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

podpipe::PipelineConfig load_stage_config(const StageArgs& args) {
  podpipe::PipelineConfig cfg = podpipe::read_pipeline_config(args.config_path);
  for (const auto& o : args.overrides) podpipe::apply_config_override(cfg, o);
  return cfg;
}

void add_stage_options(CLI::App* cmd, StageArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config JSON")->required();
  cmd->add_option("--set", args.overrides, "override a config value, key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"field-plot pod counting pipeline"};
  app.require_subcommand(1);

  StageArgs sim_args;
  std::string sim_out;
  CLI::App* cmd_simulate =
      app.add_subcommand("simulate", "generate a synthetic field: sensor logs + truth.csv");
  cmd_simulate->add_option("--config", sim_args.config_path, "simulation config JSON")
      ->required();
  cmd_simulate->add_option("--set", sim_args.overrides,
                           "override a config value, key=value (repeatable)");
  cmd_simulate->add_option("--out", sim_out, "output directory")->required();

  StageArgs split_args;
  std::string split_method;
  CLI::App* cmd_split =
      app.add_subcommand("split", "segment each pass into per-plot slices");
  add_stage_options(cmd_split, split_args);
  cmd_split->add_option("--method", split_method, "splitter: auto, gps, or lidar");

  StageArgs frames_args;
  CLI::App* cmd_frames =
      app.add_subcommand("frames", "select equidistant frames within each slice");
  add_stage_options(cmd_frames, frames_args);

  StageArgs count_args;
  CLI::App* cmd_count =
      app.add_subcommand("count", "run the detector and aggregate per-plot counts");
  add_stage_options(cmd_count, count_args);

  StageArgs analyze_args;
  CLI::App* cmd_analyze =
      app.add_subcommand("analyze", "correlate counts against yields, write reports");
  add_stage_options(cmd_analyze, analyze_args);

  StageArgs pipeline_args;
  CLI::App* cmd_pipeline =
      app.add_subcommand("pipeline", "run split, frames, count, and analyze in order");
  add_stage_options(cmd_pipeline, pipeline_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERROR cli usage: " << e.what() << "\n";
    return 2;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (cmd_simulate->parsed()) {
      podpipe::SimConfig cfg = podpipe::read_sim_config(sim_args.config_path);
      for (const auto& o : sim_args.overrides) podpipe::apply_sim_override(cfg, o);
      std::cout << podpipe::run_simulate(cfg, sim_out) << "\n";
    } else if (cmd_split->parsed()) {
      podpipe::PipelineConfig cfg = load_stage_config(split_args);
      if (!split_method.empty()) podpipe::apply_config_override(cfg, "split_method=" + split_method);
      std::cout << podpipe::run_stage_split(cfg) << "\n";
    } else if (cmd_frames->parsed()) {
      std::cout << podpipe::run_stage_frames(load_stage_config(frames_args)) << "\n";
    } else if (cmd_count->parsed()) {
      std::cout << podpipe::run_stage_count(load_stage_config(count_args)) << "\n";
    } else if (cmd_analyze->parsed()) {
      std::cout << podpipe::run_stage_analyze(load_stage_config(analyze_args)) << "\n";
    } else if (cmd_pipeline->parsed()) {
      for (const auto& line : podpipe::run_pipeline(load_stage_config(pipeline_args)))
        std::cout << line << "\n";
    }
  } catch (const podpipe::Error& e) {
    std::cerr << "ERROR " << stage << " " << podpipe::to_string(e.code()) << ": " << e.what()
              << "\n";
    return podpipe::exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "ERROR " << stage << " config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ERROR " << stage << " internal: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
