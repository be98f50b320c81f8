#pragma once

#include "omnicount/box.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace omnicount {

constexpr int kPersonClass = 0;

enum class DetectionSource { box_detector, pose_derived, fused };

std::string_view to_string(DetectionSource source);

struct Detection {
  BoundingBox box;
  double confidence = 1.0;
  int class_id = kPersonClass;
  DetectionSource source = DetectionSource::box_detector;

  bool operator==(const Detection&) const = default;
};

struct Keypoint {
  int part_id = 0;
  double x = 0;
  double y = 0;
  double confidence = 0;

  bool operator==(const Keypoint&) const = default;
};

/// Detected body parts of one person. Part ids are opaque.
struct Pose {
  std::vector<Keypoint> keypoints;
  std::optional<double> person_score;

  bool operator==(const Pose&) const = default;
};

/// Everything the external detectors reported for one frame.
struct FrameDetections {
  std::string frame_id;
  int width = 0;
  int height = 0;
  Space space = Space::pano;
  std::vector<Detection> boxes;
  std::vector<Pose> poses;

  bool operator==(const FrameDetections&) const = default;
};

/// One normalised, centre-based object in Darknet layout.
struct AnnotationObject {
  int class_id = kPersonClass;
  double cx = 0;
  double cy = 0;
  double w = 0;
  double h = 0;

  bool operator==(const AnnotationObject&) const = default;
};

struct FrameAnnotation {
  std::string frame_id;
  int width = 0;
  int height = 0;
  std::vector<AnnotationObject> objects;
};

/// How the pose box margin is distributed.
///   total:    each dimension grows by margin * extent (half per side)
///   per_side: each side moves out by margin * extent
enum class MarginMode { total, per_side };

MarginMode margin_mode_from_string(std::string_view name);
std::string_view to_string(MarginMode mode);

struct PoseBoxOptions {
  double margin_fraction = 0.25;
  MarginMode margin_mode = MarginMode::total;
  int min_keypoints = 5;     // strictly more keypoints than this are required
  double min_box_size = 2.0;

  bool operator==(const PoseBoxOptions&) const = default;
};

/// Box around a pose's keypoints, grown by the margin. Poses with too few
/// keypoints yield nothing.
std::optional<Detection> pose_to_detection(const Pose& pose, const PoseBoxOptions& options = {},
                                           Space space = Space::pano);

/// Normalised centre-form annotation for boxes on a width x height frame.
FrameAnnotation annotation_from_detections(std::string frame_id, std::span<const Detection> dets,
                                           int width, int height);

/// Inverse of the normalisation: pixel box for one annotation object.
BoundingBox annotation_to_box(const AnnotationObject& object, int width, int height,
                              Space space = Space::downscaled);

}  // namespace omnicount
