#pragma once

#include "omnicount/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace omnicount {

enum ExitCode : int { kExitClean = 0, kExitFileErrors = 1, kExitUsage = 2 };

struct RunOptions {
  int jobs = 0;  // 0 = hardware concurrency
  std::ostream* out = nullptr;  // summaries; nullptr = std::cout
  std::ostream* log = nullptr;  // one-line events; nullptr = std::cerr
};

/// Unwarps every omni frame in input_dir into a pano PNG in output_dir. The
/// pixel map is cached in the sidecar named by paths.pixel_map (default
/// <output_dir>/unwarp.map).
ExitCode cmd_unwarp(const PipelineConfig& cfg, const std::filesystem::path& input_dir,
                    const std::filesystem::path& output_dir, const RunOptions& opts = {});

/// Teacher pipeline over paths.frames + paths.detections, written to output_dir:
///   res_<W>x<H>/<frame_id>.png, res_<W>x<H>/<frame_id>.txt, res_<W>x<H>/manifest.jsonl,
///   dropped.txt (`<frame_id> <reason>`).
/// Frames are gated in ascending frame-id order.
ExitCode cmd_annotate(const PipelineConfig& cfg, const std::filesystem::path& output_dir,
                      const RunOptions& opts = {});

/// Scores predictions (`.det` wire documents or Darknet `.txt`) against Darknet
/// reference annotations. Writes counts.csv, occupancy.csv, occupancy_minutes.csv
/// and, when predictions carry confidences, pr_curve.csv + ap.txt.
ExitCode cmd_evaluate(const PipelineConfig& cfg, const std::filesystem::path& predictions_dir,
                      const std::filesystem::path& references_dir,
                      const std::filesystem::path& output_dir, const RunOptions& opts = {});

/// FLOP / blur-kernel sweep. Writes analysis.csv into output_dir when given
/// and prints the table.
ExitCode cmd_analyze(const PipelineConfig& cfg, const std::filesystem::path& netspec,
                     const std::vector<int>& resolutions,
                     const std::optional<std::filesystem::path>& output_dir,
                     const RunOptions& opts = {});

}  // namespace omnicount
