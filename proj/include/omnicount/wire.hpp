#pragma once

#include "omnicount/detection.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace omnicount {

/// Malformed wire or annotation document. The message names the offending record.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses one per-frame detection document (JSON):
///
///   {"frame_id": "000123", "width": 720, "height": 278, "space": "pano",
///    "boxes": [{"x":..,"y":..,"w":..,"h":..,"confidence":..,"class_id":0}],
///    "poses": [{"person_score": 0.8,
///               "keypoints": [{"part_id":0,"x":..,"y":..,"confidence":..}]}]}
///
/// Boxes and keypoints are clipped to the frame. person_score is optional.
FrameDetections parse_frame_detections(std::string_view document);
std::string serialize_frame_detections(const FrameDetections& frame);

FrameDetections read_detection_file(const std::filesystem::path& path);
void write_detection_file(const std::filesystem::path& path, const FrameDetections& frame);

/// Darknet text layout: `class_id cx cy w h` with six decimals, one object per line.
std::string format_annotation(const FrameAnnotation& annotation);

/// Parses Darknet text. A sixth column, when present, is returned as confidence.
struct AnnotationLine {
  AnnotationObject object;
  std::optional<double> confidence;
};
std::vector<AnnotationLine> parse_annotation_text(std::string_view text, std::string_view source = "");

/// One JSON-lines manifest record.
std::string manifest_line(std::string_view frame_id, std::string_view image_path, int width,
                          int height);

}  // namespace omnicount
