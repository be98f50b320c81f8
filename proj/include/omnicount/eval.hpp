#pragma once

#include "omnicount/box.hpp"
#include "omnicount/detection.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace omnicount {

struct EvalCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  EvalCounts& operator+=(const EvalCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const EvalCounts&) const = default;
};

struct Match {
  std::size_t prediction;
  std::size_t reference;
  double iou;
};

struct FrameMatch {
  EvalCounts counts;
  std::vector<Match> matches;
  std::vector<bool> prediction_is_tp;  // indexed like the input predictions
};

/// Greedy one-to-one matching: predictions by confidence descending (stable),
/// each takes the unmatched reference of highest IoU if that IoU >= threshold.
FrameMatch match_frame(std::span<const Detection> predictions,
                       std::span<const BoundingBox> references, double iou_threshold);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
  bool precision_vacuous = false;  // tp + fp == 0
  bool recall_vacuous = false;     // tp + fn == 0
};

/// Zero denominators give 1.0 with the matching vacuous flag set.
PrecisionRecall precision_recall(const EvalCounts& counts);

/// Predictions and references of one frame, same coordinate space.
struct EvalFrame {
  std::string frame_id;
  std::vector<Detection> predictions;
  std::vector<BoundingBox> references;
};

struct SweepRow {
  double threshold;
  EvalCounts counts;
  PrecisionRecall pr;
};

/// Counts summed over all frames, once per IoU threshold.
std::vector<SweepRow> iou_sweep(std::span<const EvalFrame> frames, std::span<const double> thresholds);

struct PRPoint {
  double confidence_threshold;
  double precision;
  double recall;
};

struct PRCurve {
  std::vector<PRPoint> points;  // descending threshold
  std::optional<double> ap;     // empty when there are neither predictions nor references
};

/// Confidence-swept precision/recall with all-point interpolated AP under the
/// monotone precision envelope.
PRCurve pr_curve(std::span<const EvalFrame> frames, double iou_threshold);

struct OccupancyRow {
  std::string frame_id;
  int predicted = 0;
  int reference = 0;
};

struct OccupancyReport {
  std::vector<OccupancyRow> frames;
  double mae = 0;
  double exact_match_rate = 1.0;
  std::vector<double> per_minute_predicted;  // median per bucket
  std::vector<double> per_minute_reference;
};

/// Per-frame people counts. Frames are matched by id; mismatched sets throw
/// std::invalid_argument listing the missing ids. frames_per_bucket = 0 skips
/// the per-minute series.
OccupancyReport occupancy_report(std::span<const OccupancyRow> predicted_and_reference,
                                 std::size_t frames_per_bucket = 0);

/// Builds the rows from separate per-frame count lists keyed by frame id.
std::vector<OccupancyRow> align_counts(
    std::span<const std::pair<std::string, int>> predicted,
    std::span<const std::pair<std::string, int>> reference);

double median_of(std::vector<double> values);

// CSV renderers (header row included, fixed formatting so output is byte-stable).
std::string counts_csv(std::span<const SweepRow> rows);
std::string pr_curve_csv(const PRCurve& curve);
std::string occupancy_csv(const OccupancyReport& report);

/// The block printed after an evaluation: one column per IoU, rows TP FP FN P R.
std::string table_block(std::span<const SweepRow> rows);

}  // namespace omnicount
