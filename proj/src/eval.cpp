#include "omnicount/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace omnicount {

FrameMatch match_frame(std::span<const Detection> predictions,
                       std::span<const BoundingBox> references, double iou_threshold) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].confidence > predictions[b].confidence;
  });

  FrameMatch out;
  out.prediction_is_tp.assign(predictions.size(), false);
  std::vector<bool> taken(references.size(), false);
  for (std::size_t p : order) {
    double best = -1.0;
    std::size_t best_ref = references.size();
    for (std::size_t r = 0; r < references.size(); ++r) {
      if (taken[r]) continue;
      const double v = iou(predictions[p].box, references[r]);
      if (v > best) {
        best = v;
        best_ref = r;
      }
    }
    if (best_ref < references.size() && best >= iou_threshold) {
      taken[best_ref] = true;
      out.prediction_is_tp[p] = true;
      out.matches.push_back({p, best_ref, best});
      ++out.counts.tp;
    } else {
      ++out.counts.fp;
    }
  }
  out.counts.fn = static_cast<long>(references.size()) - out.counts.tp;
  return out;
}

PrecisionRecall precision_recall(const EvalCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0) throw std::invalid_argument("counts must be non-negative");
  PrecisionRecall pr;
  if (c.tp + c.fp == 0) {
    pr.precision = 1.0;
    pr.precision_vacuous = true;
  } else {
    pr.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    pr.recall = 1.0;
    pr.recall_vacuous = true;
  } else {
    pr.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
  }
  return pr;
}

std::vector<SweepRow> iou_sweep(std::span<const EvalFrame> frames, std::span<const double> thresholds) {
  std::vector<SweepRow> rows;
  rows.reserve(thresholds.size());
  for (double t : thresholds) {
    EvalCounts total;
    for (const auto& f : frames) total += match_frame(f.predictions, f.references, t).counts;
    rows.push_back({t, total, precision_recall(total)});
  }
  return rows;
}

PRCurve pr_curve(std::span<const EvalFrame> frames, double iou_threshold) {
  struct Scored {
    double confidence;
    bool tp;
  };
  // Greedy matching visits predictions in confidence order, so the TP flags of
  // the full set equal those of every confidence prefix.
  std::vector<Scored> scored;
  long total_refs = 0;
  for (const auto& f : frames) {
    const FrameMatch m = match_frame(f.predictions, f.references, iou_threshold);
    for (std::size_t i = 0; i < f.predictions.size(); ++i) {
      scored.push_back({f.predictions[i].confidence, static_cast<bool>(m.prediction_is_tp[i])});
    }
    total_refs += static_cast<long>(f.references.size());
  }
  PRCurve curve;
  if (scored.empty() && total_refs == 0) return curve;

  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.confidence > b.confidence; });
  EvalCounts counts{0, 0, total_refs};
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].tp) {
      ++counts.tp;
      --counts.fn;
    } else {
      ++counts.fp;
    }
    const bool last_at_threshold = i + 1 == scored.size() || scored[i + 1].confidence != scored[i].confidence;
    if (!last_at_threshold) continue;
    const PrecisionRecall pr = precision_recall(counts);
    curve.points.push_back({scored[i].confidence, pr.precision, pr.recall});
  }

  // All-point interpolation: sentinels (r=0) and (r=1, p=0), envelope from the right.
  std::vector<double> rec{0.0};
  std::vector<double> prec{0.0};
  for (const auto& p : curve.points) {
    rec.push_back(p.recall);
    prec.push_back(p.precision);
  }
  rec.push_back(1.0);
  prec.push_back(0.0);
  for (std::size_t i = prec.size() - 1; i > 0; --i) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < rec.size(); ++i) {
    if (rec[i] != rec[i - 1]) ap += (rec[i] - rec[i - 1]) * prec[i];
  }
  curve.ap = std::clamp(ap, 0.0, 1.0);
  return curve;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<OccupancyRow> align_counts(std::span<const std::pair<std::string, int>> predicted,
                                       std::span<const std::pair<std::string, int>> reference) {
  std::map<std::string, int> pred(predicted.begin(), predicted.end());
  std::map<std::string, int> ref(reference.begin(), reference.end());
  std::vector<std::string> missing;
  for (const auto& [id, _] : pred) {
    if (!ref.count(id)) missing.push_back(id + " (no reference)");
  }
  for (const auto& [id, _] : ref) {
    if (!pred.count(id)) missing.push_back(id + " (no prediction)");
  }
  if (!missing.empty()) {
    throw std::invalid_argument(fmt::format("frame sets differ: {}", fmt::join(missing, ", ")));
  }
  std::vector<OccupancyRow> rows;
  for (const auto& [id, count] : pred) rows.push_back({id, count, ref.at(id)});
  return rows;
}

OccupancyReport occupancy_report(std::span<const OccupancyRow> rows, std::size_t frames_per_bucket) {
  OccupancyReport report;
  report.frames.assign(rows.begin(), rows.end());
  std::sort(report.frames.begin(), report.frames.end(),
            [](const OccupancyRow& a, const OccupancyRow& b) { return a.frame_id < b.frame_id; });
  for (const auto& r : report.frames) {
    if (r.predicted < 0 || r.reference < 0) throw std::invalid_argument("counts must be non-negative");
  }
  if (report.frames.empty()) return report;

  double abs_sum = 0;
  std::size_t exact = 0;
  for (const auto& r : report.frames) {
    abs_sum += std::abs(r.predicted - r.reference);
    exact += r.predicted == r.reference;
  }
  const double n = static_cast<double>(report.frames.size());
  report.mae = abs_sum / n;
  report.exact_match_rate = exact / n;

  if (frames_per_bucket > 0) {
    for (std::size_t start = 0; start < report.frames.size(); start += frames_per_bucket) {
      const std::size_t end = std::min(report.frames.size(), start + frames_per_bucket);
      std::vector<double> p, r;
      for (std::size_t i = start; i < end; ++i) {
        p.push_back(report.frames[i].predicted);
        r.push_back(report.frames[i].reference);
      }
      report.per_minute_predicted.push_back(median_of(std::move(p)));
      report.per_minute_reference.push_back(median_of(std::move(r)));
    }
  }
  return report;
}

std::string counts_csv(std::span<const SweepRow> rows) {
  std::string out = "threshold,tp,fp,fn,precision,recall\n";
  for (const auto& r : rows) {
    out += fmt::format("{:.2f},{},{},{},{:.6f},{:.6f}\n", r.threshold, r.counts.tp, r.counts.fp,
                       r.counts.fn, r.pr.precision, r.pr.recall);
  }
  return out;
}

std::string pr_curve_csv(const PRCurve& curve) {
  std::string out = "threshold,precision,recall\n";
  for (const auto& p : curve.points) {
    out += fmt::format("{:.6f},{:.6f},{:.6f}\n", p.confidence_threshold, p.precision, p.recall);
  }
  return out;
}

std::string occupancy_csv(const OccupancyReport& report) {
  std::string out = "frame_id,pred,ref\n";
  for (const auto& r : report.frames) out += fmt::format("{},{},{}\n", r.frame_id, r.predicted, r.reference);
  return out;
}

std::string table_block(std::span<const SweepRow> rows) {
  std::string out = "IoU";
  for (const auto& r : rows) out += fmt::format(" {:>8.2f}", r.threshold);
  out += "\nTP ";
  for (const auto& r : rows) out += fmt::format(" {:>8}", r.counts.tp);
  out += "\nFP ";
  for (const auto& r : rows) out += fmt::format(" {:>8}", r.counts.fp);
  out += "\nFN ";
  for (const auto& r : rows) out += fmt::format(" {:>8}", r.counts.fn);
  out += "\nP  ";
  for (const auto& r : rows) out += fmt::format(" {:>8.3f}", r.pr.precision);
  out += "\nR  ";
  for (const auto& r : rows) out += fmt::format(" {:>8.3f}", r.pr.recall);
  out += "\n";
  return out;
}

}  // namespace omnicount
