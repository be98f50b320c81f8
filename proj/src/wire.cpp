#include "omnicount/wire.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace omnicount {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError(where.empty() ? what : where + ": " + what);
}

double number_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, fmt::format("missing field '{}'", key));
  if (!it->is_number()) fail(where, fmt::format("field '{}' must be a number", key));
  const double v = it->get<double>();
  if (!std::isfinite(v)) fail(where, fmt::format("field '{}' is not finite", key));
  return v;
}

int int_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, fmt::format("missing field '{}'", key));
  if (!it->is_number_integer()) fail(where, fmt::format("field '{}' must be an integer", key));
  return it->get<int>();
}

double confidence_field(const json& obj, const char* key, const std::string& where) {
  const double c = number_field(obj, key, where);
  if (c < 0.0 || c > 1.0) fail(where, "confidence out of range");
  return c;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

FrameDetections parse_frame_detections(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("", "document must be an object");

  FrameDetections frame;
  auto id = doc.find("frame_id");
  if (id == doc.end() || !id->is_string()) fail("", "missing string field 'frame_id'");
  frame.frame_id = id->get<std::string>();
  frame.width = int_field(doc, "width", "");
  frame.height = int_field(doc, "height", "");
  if (frame.width <= 0 || frame.height <= 0) fail("", "width and height must be positive");
  auto space = doc.find("space");
  if (space == doc.end() || !space->is_string()) fail("", "missing string field 'space'");
  const std::string space_name = space->get<std::string>();
  if (space_name != "omni" && space_name != "pano") fail("", "space must be 'omni' or 'pano'");
  frame.space = space_from_string(space_name);

  auto list = [&](const char* key) -> const json* {
    auto it = doc.find(key);
    if (it == doc.end()) return nullptr;
    if (!it->is_array()) fail("", fmt::format("'{}' must be a list", key));
    return &*it;
  };

  if (const json* boxes = list("boxes")) {
    for (std::size_t i = 0; i < boxes->size(); ++i) {
      const json& b = (*boxes)[i];
      const std::string where = fmt::format("boxes[{}]", i);
      if (!b.is_object()) fail(where, "must be an object");
      Detection det;
      det.box = {number_field(b, "x", where), number_field(b, "y", where), number_field(b, "w", where),
                 number_field(b, "h", where), frame.space};
      if (det.box.w <= 0 || det.box.h <= 0) fail(where, "nonpositive box");
      det.confidence = confidence_field(b, "confidence", where);
      det.class_id = b.contains("class_id") ? int_field(b, "class_id", where) : kPersonClass;
      det.source = DetectionSource::box_detector;
      if (frame.space == Space::pano) {
        // Pano columns are periodic: a box may run past the seam, so x is
        // wrapped and only the rows are clipped.
        const double W = frame.width;
        if (det.box.x < 0 || det.box.x >= W) det.box.x -= std::floor(det.box.x / W) * W;
        det.box.w = std::min(det.box.w, W);
        det.box = clip_box(det.box, 2 * W, frame.height);
      } else {
        det.box = clip_box(det.box, frame.width, frame.height);
      }
      if (det.box.w <= 0 || det.box.h <= 0) fail(where, "box lies outside the image");
      frame.boxes.push_back(det);
    }
  }

  if (const json* poses = list("poses")) {
    for (std::size_t i = 0; i < poses->size(); ++i) {
      const json& p = (*poses)[i];
      const std::string where = fmt::format("poses[{}]", i);
      if (!p.is_object()) fail(where, "must be an object");
      Pose pose;
      if (p.contains("person_score") && !p["person_score"].is_null()) {
        pose.person_score = confidence_field(p, "person_score", where);
      }
      auto kps = p.find("keypoints");
      if (kps == p.end() || !kps->is_array()) fail(where, "missing list 'keypoints'");
      std::set<int> seen;
      for (std::size_t k = 0; k < kps->size(); ++k) {
        const json& kp = (*kps)[k];
        const std::string kwhere = fmt::format("{}.keypoints[{}]", where, k);
        if (!kp.is_object()) fail(kwhere, "must be an object");
        Keypoint out;
        out.part_id = int_field(kp, "part_id", kwhere);
        if (!seen.insert(out.part_id).second) fail(kwhere, "duplicate part_id");
        out.x = std::clamp(number_field(kp, "x", kwhere), 0.0, static_cast<double>(frame.width));
        out.y = std::clamp(number_field(kp, "y", kwhere), 0.0, static_cast<double>(frame.height));
        out.confidence = confidence_field(kp, "confidence", kwhere);
        pose.keypoints.push_back(out);
      }
      frame.poses.push_back(std::move(pose));
    }
  }
  return frame;
}

std::string serialize_frame_detections(const FrameDetections& frame) {
  json doc;
  doc["frame_id"] = frame.frame_id;
  doc["width"] = frame.width;
  doc["height"] = frame.height;
  doc["space"] = std::string(to_string(frame.space));
  doc["boxes"] = json::array();
  for (const auto& d : frame.boxes) {
    doc["boxes"].push_back({{"x", d.box.x},
                            {"y", d.box.y},
                            {"w", d.box.w},
                            {"h", d.box.h},
                            {"confidence", d.confidence},
                            {"class_id", d.class_id}});
  }
  doc["poses"] = json::array();
  for (const auto& p : frame.poses) {
    json pj;
    if (p.person_score) pj["person_score"] = *p.person_score;
    pj["keypoints"] = json::array();
    for (const auto& kp : p.keypoints) {
      pj["keypoints"].push_back(
          {{"part_id", kp.part_id}, {"x", kp.x}, {"y", kp.y}, {"confidence", kp.confidence}});
    }
    doc["poses"].push_back(std::move(pj));
  }
  return doc.dump(2) + "\n";
}

FrameDetections read_detection_file(const std::filesystem::path& path) {
  try {
    return parse_frame_detections(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(path.filename().string() + ": " + e.what());
  }
}

void write_detection_file(const std::filesystem::path& path, const FrameDetections& frame) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << serialize_frame_detections(frame);
}

std::string format_annotation(const FrameAnnotation& annotation) {
  std::string out;
  for (const auto& o : annotation.objects) {
    out += fmt::format("{} {:.6f} {:.6f} {:.6f} {:.6f}\n", o.class_id, o.cx, o.cy, o.w, o.h);
  }
  return out;
}

std::vector<AnnotationLine> parse_annotation_text(std::string_view text, std::string_view source) {
  std::vector<AnnotationLine> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = fmt::format("{}line {}", source.empty() ? "" : std::string(source) + ":", lineno);
    std::istringstream fields(line);
    AnnotationLine out;
    if (!(fields >> out.object.class_id >> out.object.cx >> out.object.cy >> out.object.w >> out.object.h)) {
      fail(where, "expected 'class_id cx cy w h'");
    }
    double conf;
    if (fields >> conf) {
      if (conf < 0 || conf > 1) fail(where, "confidence out of range");
      out.confidence = conf;
    }
    const auto& o = out.object;
    for (double v : {o.cx, o.cy, o.w, o.h}) {
      if (!(v >= 0 && v <= 1)) fail(where, "normalised value outside [0,1]");
    }
    if (o.w <= 0 || o.h <= 0) fail(where, "nonpositive box");
    lines.push_back(out);
  }
  return lines;
}

std::string manifest_line(std::string_view frame_id, std::string_view image_path, int width,
                          int height) {
  json rec;
  rec["frame_id"] = frame_id;
  rec["image"] = image_path;
  rec["width"] = width;
  rec["height"] = height;
  return rec.dump() + "\n";
}

}  // namespace omnicount
