#include "omnicount/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <fstream>
#include <set>
#include <sstream>

namespace omnicount {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Shortest text that reads back to the same double.
std::string num(double v) { return fmt::format("{}", v); }

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "geometry.width", "geometry.height", "geometry.center_x", "geometry.center_y",
      "geometry.radius", "geometry.angular_step", "geometry.interpolation", "geometry.fill_value",
      "rectify.a", "rectify.b", "rectify.c", "rectify.y_min", "rectify.y_max",
      "fusion.confidence_threshold", "fusion.nms_iou_threshold", "fusion.pose_box_margin",
      "fusion.pose_margin_mode", "fusion.pose_min_keypoints", "fusion.min_box_size",
      "fusion.target_resolutions", "gate.window", "gate.drop_margin", "evaluate.iou_thresholds",
      "evaluate.pr_iou", "evaluate.fps", "analysis.sensor_resolution", "analysis.resolutions",
      "analysis.netspec", "paths.frames", "paths.panos", "paths.detections", "paths.output",
      "paths.pixel_map"};
  return keys;
}

}  // namespace

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "'");
    }
  }
  return out;
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad integer '" + item + "'");
    }
  }
  return out;
}

std::vector<Resolution> parse_resolution_list(std::string_view text) {
  std::vector<Resolution> out;
  for (const auto& item : split_list(text)) {
    try {
      out.push_back(Resolution::parse(item));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

void PipelineConfig::validate() const {
  try {
    geometry.validate();
    rectify.validate();
    fusion.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (gate.window <= 0) throw ConfigError("gate.window must be positive");
  if (gate.drop_margin < 0) throw ConfigError("gate.drop_margin must be >= 0");
  for (double t : eval.iou_thresholds) {
    if (!(t > 0 && t <= 1)) throw ConfigError("evaluate.iou_thresholds must lie in (0,1]");
  }
  if (!(eval.pr_iou > 0 && eval.pr_iou <= 1)) throw ConfigError("evaluate.pr_iou must lie in (0,1]");
  if (!(eval.fps > 0)) throw ConfigError("evaluate.fps must be positive");
  if (analysis.sensor_resolution <= 0) throw ConfigError("analysis.sensor_resolution must be positive");
}

std::filesystem::path PipelineConfig::resolve(const std::string& p) const {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

PipelineConfig parse_config(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' outside any section");
    }
    for (const auto& [key, _] : body) {
      if (!known_keys().count(section + "." + key)) {
        throw ConfigError("unknown config key '" + section + "." + key + "'");
      }
    }
  }

  PipelineConfig cfg;
  auto get = [&]<typename T>(const char* key, T& field) {
    auto v = tree.get_optional<std::string>(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        field = *v;
      } else {
        field = tree.get<T>(key);
      }
    } catch (const pt::ptree_error&) {
      throw ConfigError(fmt::format("bad value '{}' for {}", *v, key));
    }
  };

  get("geometry.width", cfg.geometry.image_width);
  get("geometry.height", cfg.geometry.image_height);
  get("geometry.center_x", cfg.geometry.center_x);
  get("geometry.center_y", cfg.geometry.center_y);
  get("geometry.radius", cfg.geometry.radius);
  get("geometry.angular_step", cfg.geometry.angular_step);
  if (auto v = tree.get_optional<std::string>("geometry.interpolation")) {
    if (*v == "nearest") cfg.interpolation = Interpolation::nearest;
    else if (*v == "bilinear") cfg.interpolation = Interpolation::bilinear;
    else throw ConfigError("geometry.interpolation must be 'nearest' or 'bilinear'");
  }
  get("geometry.fill_value", cfg.fill_value);

  get("rectify.a", cfg.rectify.a);
  get("rectify.b", cfg.rectify.b);
  get("rectify.c", cfg.rectify.c);
  get("rectify.y_min", cfg.rectify.y_min);
  get("rectify.y_max", cfg.rectify.y_max);

  get("fusion.confidence_threshold", cfg.fusion.confidence_threshold);
  get("fusion.nms_iou_threshold", cfg.fusion.nms_iou_threshold);
  get("fusion.pose_box_margin", cfg.fusion.pose.margin_fraction);
  if (auto v = tree.get_optional<std::string>("fusion.pose_margin_mode")) {
    try {
      cfg.fusion.pose.margin_mode = margin_mode_from_string(*v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  get("fusion.pose_min_keypoints", cfg.fusion.pose.min_keypoints);
  get("fusion.min_box_size", cfg.fusion.pose.min_box_size);
  if (auto v = tree.get_optional<std::string>("fusion.target_resolutions")) {
    cfg.fusion.target_resolutions = parse_resolution_list(*v);
  }

  get("gate.window", cfg.gate.window);
  get("gate.drop_margin", cfg.gate.drop_margin);

  if (auto v = tree.get_optional<std::string>("evaluate.iou_thresholds")) {
    cfg.eval.iou_thresholds = parse_double_list(*v);
  }
  get("evaluate.pr_iou", cfg.eval.pr_iou);
  get("evaluate.fps", cfg.eval.fps);

  get("analysis.sensor_resolution", cfg.analysis.sensor_resolution);
  if (auto v = tree.get_optional<std::string>("analysis.resolutions")) {
    cfg.analysis.resolutions = parse_int_list(*v);
  }
  get("analysis.netspec", cfg.analysis.netspec);

  get("paths.frames", cfg.paths.frames);
  get("paths.panos", cfg.paths.panos);
  get("paths.detections", cfg.paths.detections);
  get("paths.output", cfg.paths.output);
  get("paths.pixel_map", cfg.paths.pixel_map);

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  PipelineConfig cfg = parse_config(ss.str());
  cfg.base_dir = path.parent_path();
  return cfg;
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::vector<std::string> res;
  for (const auto& r : cfg.fusion.target_resolutions) res.push_back(r.label());
  std::vector<std::string> ious;
  for (double t : cfg.eval.iou_thresholds) ious.push_back(num(t));

  std::string out;
  out += "[geometry]\n";
  out += fmt::format("width = {}\n", cfg.geometry.image_width);
  out += fmt::format("height = {}\n", cfg.geometry.image_height);
  out += fmt::format("center_x = {}\n", num(cfg.geometry.center_x));
  out += fmt::format("center_y = {}\n", num(cfg.geometry.center_y));
  out += fmt::format("radius = {}\n", num(cfg.geometry.radius));
  out += fmt::format("angular_step = {}\n", num(cfg.geometry.angular_step));
  out += fmt::format("interpolation = {}\n",
                     cfg.interpolation == Interpolation::nearest ? "nearest" : "bilinear");
  out += fmt::format("fill_value = {}\n", num(cfg.fill_value));
  out += "\n[rectify]\n";
  out += fmt::format("a = {}\n", num(cfg.rectify.a));
  out += fmt::format("b = {}\n", num(cfg.rectify.b));
  out += fmt::format("c = {}\n", num(cfg.rectify.c));
  out += fmt::format("y_min = {}\n", num(cfg.rectify.y_min));
  out += fmt::format("y_max = {}\n", num(cfg.rectify.y_max));
  out += "\n[fusion]\n";
  out += fmt::format("confidence_threshold = {}\n", num(cfg.fusion.confidence_threshold));
  out += fmt::format("nms_iou_threshold = {}\n", num(cfg.fusion.nms_iou_threshold));
  out += fmt::format("pose_box_margin = {}\n", num(cfg.fusion.pose.margin_fraction));
  out += fmt::format("pose_margin_mode = {}\n", to_string(cfg.fusion.pose.margin_mode));
  out += fmt::format("pose_min_keypoints = {}\n", cfg.fusion.pose.min_keypoints);
  out += fmt::format("min_box_size = {}\n", num(cfg.fusion.pose.min_box_size));
  out += fmt::format("target_resolutions = {}\n", fmt::join(res, ","));
  out += "\n[gate]\n";
  out += fmt::format("window = {}\n", cfg.gate.window);
  out += fmt::format("drop_margin = {}\n", cfg.gate.drop_margin);
  out += "\n[evaluate]\n";
  out += fmt::format("iou_thresholds = {}\n", fmt::join(ious, ","));
  out += fmt::format("pr_iou = {}\n", num(cfg.eval.pr_iou));
  out += fmt::format("fps = {}\n", num(cfg.eval.fps));
  out += "\n[analysis]\n";
  out += fmt::format("sensor_resolution = {}\n", cfg.analysis.sensor_resolution);
  out += fmt::format("resolutions = {}\n", fmt::join(cfg.analysis.resolutions, ","));
  out += fmt::format("netspec = {}\n", cfg.analysis.netspec);
  out += "\n[paths]\n";
  out += fmt::format("frames = {}\n", cfg.paths.frames);
  out += fmt::format("panos = {}\n", cfg.paths.panos);
  out += fmt::format("detections = {}\n", cfg.paths.detections);
  out += fmt::format("output = {}\n", cfg.paths.output);
  out += fmt::format("pixel_map = {}\n", cfg.paths.pixel_map);
  return out;
}

}  // namespace omnicount
