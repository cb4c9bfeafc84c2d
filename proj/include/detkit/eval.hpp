#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "detkit/decode.hpp"
#include "detkit/voc.hpp"

namespace detkit {

enum class ApMode { continuous, elevenpoint };

std::string to_string(ApMode mode);
ApMode ap_mode_from_string(std::string_view name);

struct DetMatch {
  bool tp = false;
  int gt_index = -1;  // matched ground truth, or -1
};

struct MatchResult {
  std::vector<DetMatch> per_detection;  // aligned with the input order
  int unmatched_gt = 0;
};

// Greedy VOC matching for one image+category: detections in descending
// score order (ties by input position) each take the highest-IoU still
// unmatched ground truth when that IoU reaches the threshold.
MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<BBox>& gts,
                             double iou_thresh = 0.5);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct ApResult {
  bool defined = false;  // false when the category has no ground truth
  double ap = 0.0;       // fraction in [0,1]
  std::vector<PrPoint> curve;
};

// Ranked-detection AP. Continuous mode integrates the monotone precision
// envelope; elevenpoint averages the max precision at recalls 0,0.1,...,1.
ApResult average_precision(std::vector<std::pair<double, bool>> score_flags,
                           long n_gt, ApMode mode);

struct LatencyStats {
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

struct CategoryEval {
  std::string name;
  bool defined = false;
  double ap_percent = 0.0;
  long n_gt = 0;
  long n_det = 0;
  long tp = 0;
  long fp = 0;
  std::vector<PrPoint> curve;
};

struct EvalReport {
  std::vector<std::string> categories;
  std::vector<CategoryEval> per_category;
  double map_percent = 0.0;  // mean of defined per-category APs
  long total_gt = 0;
  long total_detections = 0;
  ApMode ap_mode = ApMode::continuous;
  double iou_thresh = 0.5;
  std::optional<LatencyStats> latency;
  std::optional<std::uint64_t> model_size_bytes;
};

struct EvalConfig {
  double iou_thresh = 0.5;
  ApMode ap_mode = ApMode::continuous;
  int jobs = 1;
};

// Per-category VOC evaluation over the whole dataset. Detections are
// canonicalized internally (score desc, then image/category/coords), so the
// result does not depend on their input order. Ground-truth weights are a
// training concept and are ignored here.
EvalReport evaluate(const Dataset& gt, const std::vector<Detection>& dets,
                    const EvalConfig& config = {});

// Builds a report directly from per-category AP percentages (all defined,
// counts zero); used for report arithmetic without raw detections.
EvalReport report_from_aps(const std::vector<std::string>& categories,
                           const std::vector<double>& aps_percent);

// Per-category AP means across folds, counts summed, mAP recomputed from
// the aggregated means.
EvalReport cross_val_aggregate(std::span<const EvalReport> fold_reports);

struct AblationRow {
  std::string name;
  double map_percent = 0.0;
  double delta = 0.0;  // mAP - baseline mAP
  std::vector<double> per_category;
};

struct AblationTable {
  std::vector<std::string> categories;
  std::vector<AblationRow> rows;
};

// Rows keep the given order; delta is relative to the named baseline run.
AblationTable ablation_report(
    const std::vector<std::pair<std::string, EvalReport>>& runs,
    const std::string& baseline);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view json_text);
std::string report_to_csv(const EvalReport& report);

std::string ablation_to_csv(const AblationTable& table);
std::string ablation_to_text(const AblationTable& table);

}  // namespace detkit
