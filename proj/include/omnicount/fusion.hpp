#pragma once

#include "omnicount/detection.hpp"
#include "omnicount/geometry.hpp"
#include "omnicount/image.hpp"

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

namespace omnicount {

struct Resolution {
  int width = 0;
  int height = 0;

  std::string label() const;  // "96x96"
  static Resolution parse(std::string_view text);
  bool operator==(const Resolution&) const = default;
};

struct FusionConfig {
  double confidence_threshold = 0.25;
  double nms_iou_threshold = 0.45;
  PoseBoxOptions pose;
  std::vector<Resolution> target_resolutions{{96, 96}};

  void validate() const;
  bool operator==(const FusionConfig&) const = default;
};

/// Greedy non-maximum suppression. Output is sorted by confidence descending;
/// equal confidences go larger area first, then input order.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold);

/// Pose conversion, confidence filtering and NMS over both detector streams.
/// Survivors are tagged DetectionSource::fused.
std::vector<Detection> fuse_frame(const FrameDetections& frame, const FusionConfig& cfg);

enum class GateDecision { accept, drop };

/// Rejects frames whose detection count falls below the recent median.
/// Stateful and order-sensitive: feed frames in temporal order.
class TemporalGate {
 public:
  explicit TemporalGate(std::size_t window = 15, int drop_margin = 1);

  /// Drop iff the window is full and count < median(window) - drop_margin.
  /// Accepted counts enter the window; drops leave it untouched.
  GateDecision gate(int count);

  double median() const;
  bool full() const { return counts_.size() >= capacity_; }
  std::size_t capacity() const { return capacity_; }
  int drop_margin() const { return drop_margin_; }
  const std::deque<int>& window() const { return counts_; }

 private:
  std::size_t capacity_;
  int drop_margin_;
  std::deque<int> counts_;
};

/// One low-resolution training sample.
struct ResolutionOutput {
  Resolution resolution;
  Image<float> image;
  FrameAnnotation annotation;
};

struct AnnotatedFrame {
  std::string frame_id;
  bool dropped = false;
  std::vector<Detection> fused;       // pano space
  std::vector<Detection> omni_boxes;  // back-projected hulls
  std::vector<ResolutionOutput> outputs;
};

/// Back-projects fused pano detections to omni hulls, downscales the omni
/// frame to every target resolution and rescales the boxes.
std::vector<Detection> project_to_omni(std::span<const Detection> fused, const OmniGeometry& geom,
                                       const RectifyPoly& poly);
std::vector<ResolutionOutput> render_resolutions(const Image<float>& omni,
                                                 std::span<const Detection> omni_boxes,
                                                 const std::string& frame_id,
                                                 std::span<const Resolution> targets);

/// Full teacher pipeline for one frame: fuse, gate, project, downscale.
AnnotatedFrame annotate_frame(const Image<float>& omni, const FrameDetections& frame,
                              const OmniGeometry& geom, const RectifyPoly& poly,
                              const FusionConfig& cfg, TemporalGate& gate);

}  // namespace omnicount
