#include "omnicount/detection.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace omnicount {

std::string_view to_string(Space space) {
  switch (space) {
    case Space::omni: return "omni";
    case Space::pano: return "pano";
    case Space::downscaled: return "downscaled";
  }
  return "pano";
}

Space space_from_string(std::string_view name) {
  if (name == "omni") return Space::omni;
  if (name == "pano") return Space::pano;
  if (name == "downscaled") return Space::downscaled;
  throw std::invalid_argument("unknown coordinate space '" + std::string(name) + "'");
}

std::string_view to_string(DetectionSource source) {
  switch (source) {
    case DetectionSource::box_detector: return "box_detector";
    case DetectionSource::pose_derived: return "pose_derived";
    case DetectionSource::fused: return "fused";
  }
  return "box_detector";
}

MarginMode margin_mode_from_string(std::string_view name) {
  if (name == "total") return MarginMode::total;
  if (name == "per_side") return MarginMode::per_side;
  throw std::invalid_argument("unknown margin mode '" + std::string(name) + "'");
}

std::string_view to_string(MarginMode mode) {
  return mode == MarginMode::total ? "total" : "per_side";
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BoundingBox clip_box(const BoundingBox& box, double width, double height) {
  // Axes already inside the frame are returned bit-for-bit.
  BoundingBox out = box;
  if (box.x < 0 || box.right() > width) {
    const double x0 = std::clamp(box.x, 0.0, width);
    out.x = x0;
    out.w = std::clamp(box.right(), 0.0, width) - x0;
  }
  if (box.y < 0 || box.bottom() > height) {
    const double y0 = std::clamp(box.y, 0.0, height);
    out.y = y0;
    out.h = std::clamp(box.bottom(), 0.0, height) - y0;
  }
  return out;
}

BoundingBox scale_box(const BoundingBox& box, double from_width, double from_height,
                      double to_width, double to_height) {
  if (!(from_width > 0 && from_height > 0 && to_width > 0 && to_height > 0)) {
    throw std::invalid_argument("scale_box needs positive dimensions");
  }
  const double sx = to_width / from_width;
  const double sy = to_height / from_height;
  return {box.x * sx, box.y * sy, box.w * sx, box.h * sy, box.space};
}

std::optional<Detection> pose_to_detection(const Pose& pose, const PoseBoxOptions& options,
                                           Space space) {
  if (static_cast<int>(pose.keypoints.size()) <= options.min_keypoints || pose.keypoints.empty()) {
    return std::nullopt;
  }
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  double conf_sum = 0;
  for (const auto& kp : pose.keypoints) {
    x0 = std::min(x0, kp.x);
    y0 = std::min(y0, kp.y);
    x1 = std::max(x1, kp.x);
    y1 = std::max(y1, kp.y);
    conf_sum += kp.confidence;
  }
  const double w = x1 - x0;
  const double h = y1 - y0;
  const double per_side = options.margin_mode == MarginMode::total ? 0.5 * options.margin_fraction
                                                                   : options.margin_fraction;
  x0 -= per_side * w;
  x1 += per_side * w;
  y0 -= per_side * h;
  y1 += per_side * h;

  auto inflate = [&](double& lo, double& hi) {
    if (hi - lo < options.min_box_size) {
      const double mid = 0.5 * (lo + hi);
      lo = mid - 0.5 * options.min_box_size;
      hi = mid + 0.5 * options.min_box_size;
    }
  };
  inflate(x0, x1);
  inflate(y0, y1);

  Detection det;
  det.box = BoundingBox::from_corners(x0, y0, x1, y1, space);
  det.confidence = pose.person_score.value_or(conf_sum / pose.keypoints.size());
  det.class_id = kPersonClass;
  det.source = DetectionSource::pose_derived;
  return det;
}

FrameAnnotation annotation_from_detections(std::string frame_id, std::span<const Detection> dets,
                                           int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("annotation dims must be positive");
  FrameAnnotation ann{std::move(frame_id), width, height, {}};
  ann.objects.reserve(dets.size());
  for (const auto& det : dets) {
    const BoundingBox clipped = clip_box(det.box, width, height);
    if (clipped.w <= 0 || clipped.h <= 0) continue;
    AnnotationObject obj;
    obj.class_id = det.class_id;
    obj.cx = std::clamp(clipped.center_x() / width, 0.0, 1.0);
    obj.cy = std::clamp(clipped.center_y() / height, 0.0, 1.0);
    obj.w = std::clamp(clipped.w / width, 0.0, 1.0);
    obj.h = std::clamp(clipped.h / height, 0.0, 1.0);
    ann.objects.push_back(obj);
  }
  return ann;
}

BoundingBox annotation_to_box(const AnnotationObject& object, int width, int height, Space space) {
  const double w = object.w * width;
  const double h = object.h * height;
  return {object.cx * width - 0.5 * w, object.cy * height - 0.5 * h, w, h, space};
}

}  // namespace omnicount
