// omnicount: unwarp omni frames, generate low-resolution annotations, evaluate
// detections and profile detector cost across input resolutions.

#include "omnicount/config.hpp"
#include "omnicount/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <cstdio>

namespace fs = std::filesystem;
using namespace omnicount;

namespace {

void log_error(std::string_view event, std::string_view msg) {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  fmt::print(stderr, "ts={:%Y-%m-%dT%H:%M:%SZ} level=error event={} msg=\"{}\"\n", now, event, msg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving people counting toolkit for ceiling omni-directional cameras"};
  app.require_subcommand(1);

  std::string config_path;
  int jobs = 0;
  std::string output;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Pipeline config file (INI)")->required();
    sub->add_option("--output", output, "Output directory (overrides paths.output / paths.panos)");
    sub->add_option("--jobs", jobs, "Worker threads (default: number of processors)")->check(CLI::NonNegativeNumber);
  };

  auto* unwarp = app.add_subcommand("unwarp", "Unwarp omni frames into rectified panoramas");
  add_common(unwarp);
  std::string frames_dir;
  unwarp->add_option("--input", frames_dir, "Omni frames directory (overrides paths.frames)");

  auto* annotate = app.add_subcommand("annotate", "Fuse detections and write low-resolution annotations");
  add_common(annotate);
  std::string resolutions;
  annotate->add_option("--resolutions", resolutions, "Target resolutions, e.g. 96x96,160x160");

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against reference annotations");
  add_common(evaluate);
  std::string predictions, references, iou;
  evaluate->add_option("--predictions", predictions, "Predictions directory (.det or .txt)")->required();
  evaluate->add_option("--references", references, "Reference annotations directory (.txt)")->required();
  evaluate->add_option("--iou", iou, "IoU thresholds, e.g. 0.4,0.5");

  auto* analyze = app.add_subcommand("analyze", "FLOPs and blur-kernel sweep over input resolutions");
  add_common(analyze);
  std::string netspec, sweep;
  analyze->add_option("--netspec", netspec, "Architecture file (overrides analysis.netspec)");
  analyze->add_option("--resolutions", sweep, "Input resolutions, e.g. 448,160,96");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitClean : kExitUsage;
  }

  RunOptions opts;
  opts.jobs = jobs;
  try {
    PipelineConfig cfg = load_config(config_path);
    if (*unwarp) {
      const fs::path in = frames_dir.empty() ? cfg.resolve(cfg.paths.frames) : fs::path(frames_dir);
      const fs::path out = output.empty() ? cfg.resolve(cfg.paths.panos) : fs::path(output);
      return cmd_unwarp(cfg, in, out, opts);
    }
    if (*annotate) {
      if (!resolutions.empty()) {
        cfg.fusion.target_resolutions = parse_resolution_list(resolutions);
        cfg.validate();
      }
      const fs::path out = output.empty() ? cfg.resolve(cfg.paths.output) : fs::path(output);
      return cmd_annotate(cfg, out, opts);
    }
    if (*evaluate) {
      if (!iou.empty()) {
        cfg.eval.iou_thresholds = parse_double_list(iou);
        cfg.validate();
      }
      const fs::path out = output.empty() ? cfg.resolve(cfg.paths.output) : fs::path(output);
      return cmd_evaluate(cfg, predictions, references, out, opts);
    }
    if (*analyze) {
      const fs::path net = netspec.empty() ? cfg.resolve(cfg.analysis.netspec) : fs::path(netspec);
      const std::vector<int> res = sweep.empty() ? cfg.analysis.resolutions : parse_int_list(sweep);
      std::optional<fs::path> out;
      if (!output.empty()) out = output;
      return cmd_analyze(cfg, net, res, out, opts);
    }
  } catch (const ConfigError& e) {
    log_error("usage", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    log_error("fatal", e.what());
    return kExitFileErrors;
  }
  return kExitClean;
}
