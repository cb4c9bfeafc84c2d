#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detkit/anchors.hpp"
#include "detkit/decode.hpp"
#include "detkit/eval.hpp"
#include "detkit/rng.hpp"
#include "detkit/voc.hpp"

namespace detkit {

struct SyntheticConfig {
  std::uint64_t seed = 0;
  int n_images = 1;
  int width = 640;
  int height = 640;
  // Sampling weights per category; empty means uniform over the table.
  std::vector<double> category_weights;
  // 0 draws 1-3 boxes per image; otherwise the exact total, which must fit
  // in [n_images, 3*n_images].
  long total_boxes = 0;
  std::vector<std::string> categories = default_categories();
};

struct SyntheticDataset {
  Dataset dataset;
  std::vector<Image> images;  // aligned with dataset.annotations
};

// Category-colored rectangles on a noise background; annotations always
// satisfy the dataset invariants; byte-deterministic in the seed.
SyntheticDataset gen_synthetic_dataset(const SyntheticConfig& config);

struct DegradeSpec {
  double miss_rate = 0.0;   // drop probability per ground truth
  double fp_rate = 0.0;     // expected spurious detections per image
  double loc_noise = 0.0;   // corner jitter std in pixels
  double tp_score_lo = 0.5;
  double tp_score_hi = 1.0;
  double fp_score_lo = 0.05;
  double fp_score_hi = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OracleCategory {
  std::string name;
  bool defined = false;
  double ap_continuous = 0.0;   // fractions in [0,1]
  double ap_elevenpoint = 0.0;
};

struct OracleEval {
  std::vector<OracleCategory> per_category;
  double map_continuous = 0.0;
  double map_elevenpoint = 0.0;
};

struct DegradeResult {
  std::vector<Detection> detections;
  OracleEval oracle;
};

// Drops/jitters ground truths into imperfect detections and scores the
// result with the brute-force reference below.
DegradeResult degrade_to_detections(const Dataset& ds, const DegradeSpec& spec,
                                    double match_iou = 0.5);

// Deliberately naive reference scorer: plain O(n^2) loops, own box
// arithmetic, no code shared with the eval module. Exists purely to
// cross-check it.
OracleEval oracle_evaluate(const Dataset& ds,
                           const std::vector<Detection>& dets,
                           double match_iou);

struct BenchConfig {
  int resolution = 608;
  int num_categories = 6;
  int trials = 100;
  std::uint64_t seed = 0;
  double score_thresh = 1e-8;
  double iou_thresh = 0.6;
  // Cell/anchor slots given a strong objectness per scale; the rest sit at
  // trained-background levels far below the score threshold.
  int activated_per_scale = 20;
};

struct BenchResult {
  int resolution = 0;
  long cells = 0;            // (R/8)^2 + (R/16)^2 + (R/32)^2
  double mean_detections = 0.0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

// Synthesizes plausible head tensors for one image.
std::vector<HeadTensor> random_head_tensors(const BenchConfig& config,
                                            Rng& rng);

// Times decode_full+NMS only; backbone inference is out of scope and the
// numbers are not comparable with a full-network speed measurement.
BenchResult time_decode(const BenchConfig& config, const AnchorSet& anchors);

}  // namespace detkit
