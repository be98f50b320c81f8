#pragma once

#include "omnicount/fusion.hpp"
#include "omnicount/geometry.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace omnicount {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GateConfig {
  int window = 15;
  int drop_margin = 1;
  bool operator==(const GateConfig&) const = default;
};

struct EvalConfig {
  std::vector<double> iou_thresholds{0.4, 0.5};
  double pr_iou = 0.4;
  double fps = 15.0;  // minute buckets hold 60 * fps frames
  bool operator==(const EvalConfig&) const = default;
};

struct AnalysisConfig {
  int sensor_resolution = 876;
  std::vector<int> resolutions{448, 160, 96};
  std::string netspec;  // empty: caller must supply --netspec
  bool operator==(const AnalysisConfig&) const = default;
};

struct PathsConfig {
  std::string frames;       // omni frames (png/jpg)
  std::string panos;        // unwarp output
  std::string detections;   // <frame_id>.det wire documents
  std::string output;       // annotate / evaluate / analyze output root
  std::string pixel_map;    // sidecar; empty = <panos>/unwarp.map
  bool operator==(const PathsConfig&) const = default;
};

/// Everything a pipeline run needs. INI text with one section per group; see
/// data/example.ini for every key and its default.
struct PipelineConfig {
  OmniGeometry geometry;
  RectifyPoly rectify;
  FusionConfig fusion;
  GateConfig gate;
  Interpolation interpolation = Interpolation::bilinear;
  float fill_value = 0.0f;
  EvalConfig eval;
  AnalysisConfig analysis;
  PathsConfig paths;

  /// Relative paths in the file resolve against this directory.
  std::filesystem::path base_dir;

  void validate() const;
  std::filesystem::path resolve(const std::string& p) const;

  bool operator==(const PipelineConfig& o) const {
    return geometry == o.geometry && rectify == o.rectify && fusion == o.fusion && gate == o.gate &&
           interpolation == o.interpolation && fill_value == o.fill_value && eval == o.eval &&
           analysis == o.analysis && paths == o.paths;
  }
};

/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical INI: fixed section/key order, every key written.
std::string serialize_config(const PipelineConfig& cfg);

std::vector<double> parse_double_list(std::string_view text);
std::vector<int> parse_int_list(std::string_view text);
std::vector<Resolution> parse_resolution_list(std::string_view text);

}  // namespace omnicount
