#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detkit/voc.hpp"

namespace detkit {

// A box shape: width/height only, position-free.
struct BoxShape {
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  bool operator==(const BoxShape&) const = default;
};

// Prior shapes sorted by area ascending. With the standard nine entries
// they group 3/3/3 into small/medium/large detection scales.
struct AnchorSet {
  std::vector<BoxShape> anchors;

  std::size_t size() const { return anchors.size(); }
  // group 0 = small (stride 8), 1 = medium (16), 2 = large (32).
  // Requires exactly nine anchors.
  std::span<const BoxShape> scale_group(int group) const;
};

// The stock nine priors used when no dataset-specific clustering is run.
AnchorSet default_anchors();

// Corner-aligned shape IoU: min(w)*min(h) / (wa*ha + wb*hb - overlap).
double iou_wh(const BoxShape& a, const BoxShape& b);

// Mean over shapes of the best IoU against any anchor.
double avg_iou(std::span<const BoxShape> shapes, const AnchorSet& anchors);

struct KMeansResult {
  AnchorSet anchors;
  double avg_iou = 0.0;
  int iterations = 0;
  // Mean 1-IoU distance to the assigned centroid, recorded once per Lloyd
  // iteration right after the assignment step. Non-increasing.
  std::vector<double> objective_history;
};

// Lloyd k-means under d = 1 - iou_wh with k-means++ seeding and per-cluster
// median updates. A median candidate that would raise its cluster's cost is
// rejected in favour of the current centroid, which keeps the objective
// monotone. Empty clusters are re-seeded to the farthest shape.
KMeansResult kmeans_anchors(std::vector<BoxShape> shapes, int k = 9,
                            std::uint64_t seed = 0, int max_iter = 300,
                            double tol = 1e-6);

// Ground-truth shapes rescaled to a square input resolution, optionally
// restricted to a set of image ids.
std::vector<BoxShape> dataset_shapes(
    const Dataset& ds, double input_res,
    const std::vector<std::string>* only_ids = nullptr);

// `w,h` rows plus a trailing `# avg_iou=` comment line.
std::string anchors_to_csv(const AnchorSet& anchors, double avg_iou_value);
AnchorSet anchors_from_csv(std::string_view text);

}  // namespace detkit
