#include "omnicount/pipeline.hpp"

#include "omnicount/eval.hpp"
#include "omnicount/fusion.hpp"
#include "omnicount/image_io.hpp"
#include "omnicount/resolution.hpp"
#include "omnicount/wire.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace omnicount {

namespace fs = std::filesystem;

namespace {

std::ostream& out_stream(const RunOptions& o) { return o.out ? *o.out : std::cout; }
std::ostream& log_stream(const RunOptions& o) { return o.log ? *o.log : std::cerr; }

void log_event(const RunOptions& o, std::string_view level, std::string_view event,
               std::string_view detail) {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  fmt::print(log_stream(o), "ts={:%Y-%m-%dT%H:%M:%SZ} level={} event={} {}\n", now, level, event, detail);
}

int job_count(const RunOptions& o) {
  if (o.jobs > 0) return o.jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must only touch slot i.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

void require_dir(const fs::path& dir, std::string_view what) {
  if (dir.empty()) throw ConfigError(fmt::format("no {} directory configured", what));
  if (!fs::is_directory(dir)) throw ConfigError(fmt::format("{} directory '{}' does not exist", what, dir.string()));
}

std::vector<fs::path> list_files(const fs::path& dir, auto&& keep) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && keep(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Numeric frame ids must be zero-padded so lexicographic order is temporal.
void check_frame_order(const std::vector<std::string>& ids) {
  std::size_t len = 0;
  bool all_numeric = !ids.empty();
  for (const auto& id : ids) {
    if (id.empty() || !std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isdigit(c); })) {
      all_numeric = false;
      break;
    }
  }
  if (!all_numeric) return;
  for (const auto& id : ids) {
    if (len == 0) len = id.size();
    if (id.size() != len) {
      throw ConfigError("numeric frame ids are not zero-padded (e.g. '" + id +
                        "'); lexicographic order would not be temporal order");
    }
  }
}

}  // namespace

ExitCode cmd_unwarp(const PipelineConfig& cfg, const fs::path& input_dir, const fs::path& output_dir,
                    const RunOptions& opts) {
  require_dir(input_dir, "frames");
  if (output_dir.empty()) throw ConfigError("no output directory for unwarp");
  fs::create_directories(output_dir);

  const auto frames = list_files(input_dir, is_image_file);
  if (frames.empty()) {
    log_event(opts, "warn", "no_frames", "dir=" + input_dir.string());
    fmt::print(out_stream(opts), "unwarp: no frames in {}\n", input_dir.string());
    return kExitClean;
  }

  const fs::path sidecar = cfg.paths.pixel_map.empty() ? output_dir / "unwarp.map" : cfg.resolve(cfg.paths.pixel_map);
  const PixelMap<float> map = cached_unwarp_map(sidecar, cfg.geometry, cfg.rectify);

  std::vector<std::string> errors(frames.size());
  parallel_for(frames.size(), job_count(opts), [&](std::size_t i) {
    try {
      const Image<float> omni = load_image(frames[i]);
      if (omni.width() != omni.height()) {
        throw std::runtime_error(fmt::format("non-square frame {}x{}", omni.width(), omni.height()));
      }
      const Image<float> pano = apply_map(omni, map, cfg.interpolation, cfg.fill_value);
      save_png(output_dir / (frames[i].stem().string() + ".png"), pano);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::size_t failed = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (errors[i].empty()) continue;
    ++failed;
    log_event(opts, "error", "unwarp_failed",
              fmt::format("file={} msg=\"{}\"", frames[i].filename().string(), errors[i]));
  }
  fmt::print(out_stream(opts), "unwarp: {} frames in, {} written, {} errors ({}x{} pano)\n",
             frames.size(), frames.size() - failed, failed, map.width(), map.height());
  return failed ? kExitFileErrors : kExitClean;
}

ExitCode cmd_annotate(const PipelineConfig& cfg, const fs::path& output_dir, const RunOptions& opts) {
  const fs::path frames_dir = cfg.resolve(cfg.paths.frames);
  const fs::path dets_dir = cfg.resolve(cfg.paths.detections);
  require_dir(frames_dir, "frames");
  require_dir(dets_dir, "detections");
  if (output_dir.empty()) throw ConfigError("no output directory for annotate");

  const auto frame_files = list_files(frames_dir, is_image_file);
  std::vector<std::string> ids;
  for (const auto& f : frame_files) ids.push_back(f.stem().string());
  check_frame_order(ids);
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigError("duplicate frame ids in " + frames_dir.string());
  }

  fs::create_directories(output_dir);
  std::vector<fs::path> res_dirs;
  std::vector<std::ofstream> manifests;
  for (const auto& r : cfg.fusion.target_resolutions) {
    res_dirs.push_back(output_dir / ("res_" + r.label()));
    fs::create_directories(res_dirs.back());
    manifests.emplace_back(res_dirs.back() / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  }
  std::ofstream dropped_log(output_dir / "dropped.txt", std::ios::binary | std::ios::trunc);

  const int pano_w = cfg.geometry.pano_width();
  const int pano_h = pano_height(cfg.rectify);
  TemporalGate gate(static_cast<std::size_t>(cfg.gate.window), cfg.gate.drop_margin);
  const int jobs = job_count(opts);
  const std::size_t chunk = static_cast<std::size_t>(jobs) * 4;

  struct Slot {
    Image<float> omni;
    std::vector<Detection> fused;
    std::vector<ResolutionOutput> outputs;
    bool missing_detections = false;
    bool dropped = false;
    std::string error;
  };

  std::size_t accepted = 0, dropped = 0, errored = 0, fused_total = 0;
  for (std::size_t start = 0; start < frame_files.size(); start += chunk) {
    const std::size_t n = std::min(chunk, frame_files.size() - start);
    std::vector<Slot> slots(n);

    // Fusion fans out; the gate below runs strictly in frame order.
    parallel_for(n, jobs, [&](std::size_t k) {
      Slot& s = slots[k];
      const std::string& id = ids[start + k];
      try {
        s.omni = load_image(frame_files[start + k]);
        if (s.omni.width() != cfg.geometry.image_width || s.omni.height() != cfg.geometry.image_height) {
          throw std::runtime_error(fmt::format("frame is {}x{}, geometry expects {}x{}", s.omni.width(),
                                               s.omni.height(), cfg.geometry.image_width,
                                               cfg.geometry.image_height));
        }
        FrameDetections dets;
        const fs::path det_path = dets_dir / (id + ".det");
        if (fs::exists(det_path)) {
          dets = read_detection_file(det_path);
          if (dets.frame_id != id) {
            throw std::runtime_error(fmt::format("document frame_id '{}' does not match file name", dets.frame_id));
          }
          if (dets.space != Space::pano || dets.width != pano_w || dets.height != pano_h) {
            throw std::runtime_error(fmt::format("detections must be pano space {}x{}", pano_w, pano_h));
          }
        } else {
          dets = {id, pano_w, pano_h, Space::pano, {}, {}};
          s.missing_detections = true;
        }
        s.fused = fuse_frame(dets, cfg.fusion);
      } catch (const std::exception& e) {
        s.error = e.what();
        s.omni = {};
      }
    });

    for (std::size_t k = 0; k < n; ++k) {
      Slot& s = slots[k];
      const std::string& id = ids[start + k];
      if (!s.error.empty()) continue;
      if (s.missing_detections) log_event(opts, "info", "no_detections", "frame=" + id);
      const double median = gate.median();
      const bool full = gate.full();
      if (gate.gate(static_cast<int>(s.fused.size())) == GateDecision::drop) {
        s.dropped = true;
        s.omni = {};
        dropped_log << fmt::format("{} sudden_drop count={} window_median={}{}\n", id, s.fused.size(),
                                   median, full ? "" : " (cold)");
        log_event(opts, "info", "frame_dropped", fmt::format("frame={} count={}", id, s.fused.size()));
      }
    }

    parallel_for(n, jobs, [&](std::size_t k) {
      Slot& s = slots[k];
      if (!s.error.empty() || s.dropped) return;
      const std::string& id = ids[start + k];
      try {
        const auto omni_boxes = project_to_omni(s.fused, cfg.geometry, cfg.rectify);
        s.outputs = render_resolutions(s.omni, omni_boxes, id, cfg.fusion.target_resolutions);
        for (std::size_t r = 0; r < s.outputs.size(); ++r) {
          save_png(res_dirs[r] / (id + ".png"), s.outputs[r].image);
          write_text(res_dirs[r] / (id + ".txt"), format_annotation(s.outputs[r].annotation));
        }
      } catch (const std::exception& e) {
        s.error = e.what();
      }
      s.omni = {};
    });

    for (std::size_t k = 0; k < n; ++k) {
      const Slot& s = slots[k];
      const std::string& id = ids[start + k];
      if (!s.error.empty()) {
        ++errored;
        log_event(opts, "error", "annotate_failed", fmt::format("frame={} msg=\"{}\"", id, s.error));
      } else if (s.dropped) {
        ++dropped;
      } else {
        ++accepted;
        fused_total += s.fused.size();
        for (std::size_t r = 0; r < s.outputs.size(); ++r) {
          const auto& res = s.outputs[r].resolution;
          manifests[r] << manifest_line(id, "res_" + res.label() + "/" + id + ".png", res.width, res.height);
        }
      }
    }
  }

  fmt::print(out_stream(opts),
             "annotate: frames in {}, accepted {}, dropped {}, errors {}, detections fused {}\n",
             frame_files.size(), accepted, dropped, errored, fused_total);
  return errored ? kExitFileErrors : kExitClean;
}

ExitCode cmd_evaluate(const PipelineConfig& cfg, const fs::path& predictions_dir,
                      const fs::path& references_dir, const fs::path& output_dir,
                      const RunOptions& opts) {
  require_dir(predictions_dir, "predictions");
  require_dir(references_dir, "references");
  if (output_dir.empty()) throw ConfigError("no output directory for evaluate");
  fs::create_directories(output_dir);

  const auto is_pred = [](const fs::path& p) { return p.extension() == ".det" || p.extension() == ".txt"; };
  const auto is_ref = [](const fs::path& p) { return p.extension() == ".txt"; };
  std::map<std::string, fs::path> preds, refs;
  for (const auto& p : list_files(predictions_dir, is_pred)) {
    // .det wins when both exist for one frame.
    auto [it, inserted] = preds.emplace(p.stem().string(), p);
    if (!inserted && p.extension() == ".det") it->second = p;
  }
  for (const auto& p : list_files(references_dir, is_ref)) refs.emplace(p.stem().string(), p);

  bool had_errors = false;
  std::vector<std::string> missing;
  for (const auto& [id, _] : preds) {
    if (!refs.count(id)) missing.push_back(id);
  }
  for (const auto& [id, _] : refs) {
    if (!preds.count(id)) missing.push_back(id);
  }
  for (const auto& [id, _] : preds) {
    if (!refs.count(id)) log_event(opts, "error", "missing_reference", "frame=" + id);
  }
  for (const auto& [id, _] : refs) {
    if (!preds.count(id)) log_event(opts, "error", "missing_prediction", "frame=" + id);
  }
  had_errors = !missing.empty();

  // Everything is compared in normalised [0,1] frame coordinates.
  std::vector<EvalFrame> frames;
  bool any_confidence = false;
  for (const auto& [id, ref_path] : refs) {
    auto pit = preds.find(id);
    if (pit == preds.end()) continue;
    EvalFrame f;
    f.frame_id = id;
    try {
      for (const auto& line : parse_annotation_text(read_text(ref_path), ref_path.filename().string())) {
        f.references.push_back(annotation_to_box(line.object, 1, 1));
      }
      if (pit->second.extension() == ".det") {
        const FrameDetections d = read_detection_file(pit->second);
        any_confidence = true;
        for (auto det : d.boxes) {
          det.box = scale_box(det.box, d.width, d.height, 1.0, 1.0);
          det.box.space = Space::downscaled;
          f.predictions.push_back(det);
        }
      } else {
        for (const auto& line : parse_annotation_text(read_text(pit->second), pit->second.filename().string())) {
          Detection det;
          det.box = annotation_to_box(line.object, 1, 1);
          det.class_id = line.object.class_id;
          det.confidence = line.confidence.value_or(1.0);
          any_confidence = any_confidence || line.confidence.has_value();
          f.predictions.push_back(det);
        }
      }
    } catch (const std::exception& e) {
      had_errors = true;
      log_event(opts, "error", "evaluate_failed", fmt::format("frame={} msg=\"{}\"", id, e.what()));
      continue;
    }
    frames.push_back(std::move(f));
  }

  // Counts and occupancy use the operating point; the PR sweep uses everything.
  std::vector<EvalFrame> thresholded = frames;
  for (auto& f : thresholded) {
    std::erase_if(f.predictions, [&](const Detection& d) { return d.confidence < cfg.fusion.confidence_threshold; });
  }

  const auto sweep = iou_sweep(thresholded, cfg.eval.iou_thresholds);
  write_text(output_dir / "counts.csv", counts_csv(sweep));

  std::vector<OccupancyRow> occ_rows;
  for (const auto& f : thresholded) {
    occ_rows.push_back({f.frame_id, static_cast<int>(f.predictions.size()), static_cast<int>(f.references.size())});
  }
  const auto bucket = static_cast<std::size_t>(std::lround(60.0 * cfg.eval.fps));
  const OccupancyReport occ = occupancy_report(occ_rows, bucket);
  write_text(output_dir / "occupancy.csv", occupancy_csv(occ));
  std::string minutes = "minute,pred_median,ref_median\n";
  for (std::size_t m = 0; m < occ.per_minute_predicted.size(); ++m) {
    minutes += fmt::format("{},{:.1f},{:.1f}\n", m, occ.per_minute_predicted[m], occ.per_minute_reference[m]);
  }
  write_text(output_dir / "occupancy_minutes.csv", minutes);

  auto& out = out_stream(opts);
  fmt::print(out, "evaluate: {} frames\n{}", frames.size(), table_block(sweep));
  fmt::print(out, "occupancy: MAE {:.4f}, exact-match {:.4f}\n", occ.mae, occ.exact_match_rate);

  if (any_confidence) {
    const PRCurve curve = pr_curve(frames, cfg.eval.pr_iou);
    write_text(output_dir / "pr_curve.csv", pr_curve_csv(curve));
    write_text(output_dir / "ap.txt", curve.ap ? fmt::format("{:.6f}\n", *curve.ap) : std::string("undefined\n"));
    if (curve.ap) fmt::print(out, "AP@{:.2f}: {:.4f}\n", cfg.eval.pr_iou, *curve.ap);
  }
  if (!missing.empty()) {
    fmt::print(out, "missing counterparts: {}\n", fmt::join(missing, " "));
  }
  return had_errors ? kExitFileErrors : kExitClean;
}

ExitCode cmd_analyze(const PipelineConfig& cfg, const fs::path& netspec,
                     const std::vector<int>& resolutions, const std::optional<fs::path>& output_dir,
                     const RunOptions& opts) {
  if (netspec.empty()) throw ConfigError("no architecture file given (analysis.netspec or --netspec)");
  if (!fs::exists(netspec)) throw ConfigError("architecture file '" + netspec.string() + "' does not exist");
  NetSpec net;
  try {
    net = load_netspec(netspec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto profiles = profile_sweep(net, cfg.analysis.sensor_resolution, resolutions);
  const std::string csv = sweep_csv(profiles);
  if (output_dir) {
    fs::create_directories(*output_dir);
    write_text(*output_dir / "analysis.csv", csv);
  }
  auto& out = out_stream(opts);
  fmt::print(out, "{}", csv);
  fmt::print(out, "# min input resolution {} (3 x {})\n", min_input_resolution(net), net.downsample_factor());
  for (const auto& p : profiles) {
    if (!p.legal) {
      log_event(opts, "warn", "illegal_resolution", fmt::format("resolution={} min={}", p.input_resolution,
                                                                 min_input_resolution(net)));
    }
  }
  return kExitClean;
}

}  // namespace omnicount
