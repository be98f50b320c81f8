#include "omnicount/fusion.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace omnicount {

std::string Resolution::label() const { return fmt::format("{}x{}", width, height); }

Resolution Resolution::parse(std::string_view text) {
  const auto x = text.find_first_of("xX");
  Resolution r;
  auto parse_int = [&](std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  bool ok;
  if (x == std::string_view::npos) {
    ok = parse_int(text, r.width);
    r.height = r.width;
  } else {
    ok = parse_int(text.substr(0, x), r.width) && parse_int(text.substr(x + 1), r.height);
  }
  if (!ok || r.width <= 0 || r.height <= 0) {
    throw std::invalid_argument("bad resolution '" + std::string(text) + "' (expected WxH)");
  }
  return r;
}

void FusionConfig::validate() const {
  if (confidence_threshold < 0 || confidence_threshold > 1) {
    throw std::invalid_argument("confidence_threshold must lie in [0,1]");
  }
  if (!(nms_iou_threshold > 0 && nms_iou_threshold < 1)) {
    throw std::invalid_argument("nms_iou_threshold must lie in (0,1)");
  }
  if (pose.margin_fraction < 0) throw std::invalid_argument("pose_box_margin must be >= 0");
  if (pose.min_keypoints < 0) throw std::invalid_argument("pose_min_keypoints must be >= 0");
  for (const auto& r : target_resolutions) {
    if (r.width <= 0 || r.height <= 0) throw std::invalid_argument("target resolutions must be positive");
  }
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].confidence != dets[b].confidence) return dets[a].confidence > dets[b].confidence;
    return dets[a].box.area() > dets[b].box.area();
  });

  std::vector<Detection> kept;
  std::vector<bool> suppressed(order.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (suppressed[i]) continue;
    const Detection& keep = dets[order[i]];
    kept.push_back(keep);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (!suppressed[j] && iou(keep.box, dets[order[j]].box) > iou_threshold) suppressed[j] = true;
    }
  }
  return kept;
}

std::vector<Detection> fuse_frame(const FrameDetections& frame, const FusionConfig& cfg) {
  if (frame.space != Space::pano) throw std::invalid_argument("fuse_frame expects pano-space detections");
  std::vector<Detection> candidates;
  candidates.reserve(frame.boxes.size() + frame.poses.size());
  for (const auto& d : frame.boxes) {
    if (d.confidence >= cfg.confidence_threshold) candidates.push_back(d);
  }
  for (const auto& pose : frame.poses) {
    auto det = pose_to_detection(pose, cfg.pose, frame.space);
    if (!det) continue;
    det->box = clip_box(det->box, frame.width, frame.height);
    if (det->box.w <= 0 || det->box.h <= 0) continue;
    if (det->confidence >= cfg.confidence_threshold) candidates.push_back(*det);
  }
  auto fused = nms(candidates, cfg.nms_iou_threshold);
  for (auto& d : fused) d.source = DetectionSource::fused;
  return fused;
}

TemporalGate::TemporalGate(std::size_t window, int drop_margin)
    : capacity_(window), drop_margin_(drop_margin) {
  if (window == 0) throw std::invalid_argument("gate window must be positive");
  if (drop_margin < 0) throw std::invalid_argument("drop_margin must be >= 0");
}

double TemporalGate::median() const {
  if (counts_.empty()) return 0.0;
  std::vector<int> sorted(counts_.begin(), counts_.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

GateDecision TemporalGate::gate(int count) {
  if (full() && count < median() - drop_margin_) return GateDecision::drop;
  counts_.push_back(count);
  while (counts_.size() > capacity_) counts_.pop_front();
  return GateDecision::accept;
}

std::vector<Detection> project_to_omni(std::span<const Detection> fused, const OmniGeometry& geom,
                                       const RectifyPoly& poly) {
  std::vector<Detection> out;
  out.reserve(fused.size());
  for (const auto& d : fused) {
    Detection o = d;
    o.box = pano_to_omni_box(geom, poly, d.box);
    out.push_back(o);
  }
  return out;
}

std::vector<ResolutionOutput> render_resolutions(const Image<float>& omni,
                                                 std::span<const Detection> omni_boxes,
                                                 const std::string& frame_id,
                                                 std::span<const Resolution> targets) {
  std::vector<ResolutionOutput> outputs;
  outputs.reserve(targets.size());
  for (const auto& res : targets) {
    std::vector<Detection> scaled(omni_boxes.begin(), omni_boxes.end());
    for (auto& d : scaled) {
      d.box = scale_box(d.box, omni.width(), omni.height(), res.width, res.height);
      d.box.space = Space::downscaled;
    }
    outputs.push_back({res, downscale_area(omni, res.width, res.height),
                       annotation_from_detections(frame_id, scaled, res.width, res.height)});
  }
  return outputs;
}

AnnotatedFrame annotate_frame(const Image<float>& omni, const FrameDetections& frame,
                              const OmniGeometry& geom, const RectifyPoly& poly,
                              const FusionConfig& cfg, TemporalGate& gate) {
  if (omni.width() != geom.image_width || omni.height() != geom.image_height) {
    throw std::invalid_argument("omni image does not match the configured geometry");
  }
  if (frame.width != geom.pano_width() || frame.height != pano_height(poly)) {
    throw std::invalid_argument(
        fmt::format("{}: detections are for a {}x{} frame, pano is {}x{}", frame.frame_id,
                    frame.width, frame.height, geom.pano_width(), pano_height(poly)));
  }
  AnnotatedFrame result;
  result.frame_id = frame.frame_id;
  result.fused = fuse_frame(frame, cfg);
  if (gate.gate(static_cast<int>(result.fused.size())) == GateDecision::drop) {
    result.dropped = true;
    return result;
  }
  result.omni_boxes = project_to_omni(result.fused, geom, poly);
  result.outputs = render_resolutions(omni, result.omni_boxes, frame.frame_id, cfg.target_resolutions);
  return result;
}

}  // namespace omnicount
