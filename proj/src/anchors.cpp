#include "detkit/anchors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "detkit/error.hpp"
#include "detkit/rng.hpp"

namespace detkit {

namespace {

double shape_distance(const BoxShape& s, const BoxShape& c) {
  return 1.0 - iou_wh(s, c);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool area_less(const BoxShape& a, const BoxShape& b) {
  if (a.area() != b.area()) return a.area() < b.area();
  if (a.w != b.w) return a.w < b.w;
  return a.h < b.h;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::span<const BoxShape> AnchorSet::scale_group(int group) const {
  if (anchors.size() != 9) {
    throw InvalidInputError("scale_group requires exactly 9 anchors, have " +
                            std::to_string(anchors.size()));
  }
  if (group < 0 || group > 2) {
    throw InvalidInputError("scale_group: group must be 0, 1 or 2");
  }
  return std::span<const BoxShape>(anchors).subspan(group * 3, 3);
}

AnchorSet default_anchors() {
  return AnchorSet{{{12, 10},
                    {16, 28},
                    {30, 26},
                    {32, 43},
                    {51, 68},
                    {79, 126},
                    {141, 86},
                    {233, 192},
                    {284, 346}}};
}

double iou_wh(const BoxShape& a, const BoxShape& b) {
  if (!(a.w > 0.0) || !(a.h > 0.0) || !(b.w > 0.0) || !(b.h > 0.0)) {
    throw InvalidInputError("iou_wh: shape dims must be > 0");
  }
  const double overlap = std::min(a.w, b.w) * std::min(a.h, b.h);
  return overlap / (a.w * a.h + b.w * b.h - overlap);
}

double avg_iou(std::span<const BoxShape> shapes, const AnchorSet& anchors) {
  if (shapes.empty() || anchors.anchors.empty()) {
    throw InvalidInputError("avg_iou: shapes and anchors must be non-empty");
  }
  double sum = 0.0;
  for (const auto& s : shapes) {
    double best = 0.0;
    for (const auto& a : anchors.anchors) best = std::max(best, iou_wh(s, a));
    sum += best;
  }
  return sum / static_cast<double>(shapes.size());
}

KMeansResult kmeans_anchors(std::vector<BoxShape> shapes, int k,
                            std::uint64_t seed, int max_iter, double tol) {
  if (shapes.empty()) throw InvalidInputError("kmeans_anchors: no shapes");
  if (k < 1) throw InvalidInputError("kmeans_anchors: k must be >= 1");
  if (max_iter < 1) throw InvalidInputError("kmeans_anchors: max_iter >= 1");
  for (const auto& s : shapes) {
    if (!(s.w > 0.0) || !(s.h > 0.0)) {
      throw InvalidInputError("kmeans_anchors: shape dims must be > 0");
    }
  }

  // Canonical input order so the result is independent of caller ordering.
  std::sort(shapes.begin(), shapes.end(), [](const BoxShape& a, const BoxShape& b) {
    return a.w != b.w ? a.w < b.w : a.h < b.h;
  });

  std::set<std::pair<double, double>> distinct;
  for (const auto& s : shapes) distinct.insert({s.w, s.h});
  if (static_cast<std::size_t>(k) > distinct.size()) {
    throw InvalidInputError("kmeans_anchors: k=" + std::to_string(k) +
                            " exceeds " + std::to_string(distinct.size()) +
                            " distinct shapes");
  }

  const std::size_t n = shapes.size();
  Rng rng = Rng(seed).stream("kmeans++");

  // k-means++ seeding: first centroid uniform, the rest proportional to the
  // squared distance to the nearest chosen centroid.
  std::vector<BoxShape> centroids;
  centroids.push_back(shapes[rng.uniform_index(n)]);
  std::vector<double> d2(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = shape_distance(shapes[i], centroids[0]);
      for (std::size_t j = 1; j < centroids.size(); ++j) {
        best = std::min(best, shape_distance(shapes[i], centroids[j]));
      }
      d2[i] = best * best;
      total += d2[i];
    }
    const double target = rng.uniform() * total;
    double cum = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      cum += d2[i];
      if (cum > target) {
        pick = i;
        break;
      }
    }
    centroids.push_back(shapes[pick]);
  }

  KMeansResult result;
  std::vector<int> assignment(n, 0);
  std::vector<double> assigned_dist(n, 0.0);

  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment step; ties resolved to the lowest centroid index.
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best_j = 0;
      double best_d = shape_distance(shapes[i], centroids[0]);
      for (int j = 1; j < k; ++j) {
        const double d = shape_distance(shapes[i], centroids[j]);
        if (d < best_d) {
          best_d = d;
          best_j = j;
        }
      }
      assignment[i] = best_j;
      assigned_dist[i] = best_d;
      total += best_d;
    }
    result.objective_history.push_back(total / static_cast<double>(n));
    result.iterations = iter + 1;

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[assignment[i]].push_back(i);

    // Re-seed empty clusters to the farthest shapes (deterministic order).
    std::vector<std::size_t> farthest(n);
    for (std::size_t i = 0; i < n; ++i) farthest[i] = i;
    std::sort(farthest.begin(), farthest.end(),
              [&](std::size_t a, std::size_t b) {
                if (assigned_dist[a] != assigned_dist[b]) {
                  return assigned_dist[a] > assigned_dist[b];
                }
                return a < b;
              });
    double movement = 0.0;
    std::size_t next_far = 0;
    for (int j = 0; j < k; ++j) {
      if (!members[j].empty()) continue;
      if (next_far < farthest.size()) {
        centroids[j] = shapes[farthest[next_far++]];
        movement = std::max(movement, 1.0);  // force another iteration
      }
    }

    // Median update, accepted only when it does not raise the cluster cost.
    for (int j = 0; j < k; ++j) {
      if (members[j].empty()) continue;
      std::vector<double> ws, hs;
      ws.reserve(members[j].size());
      hs.reserve(members[j].size());
      for (std::size_t i : members[j]) {
        ws.push_back(shapes[i].w);
        hs.push_back(shapes[i].h);
      }
      const BoxShape candidate{median(std::move(ws)), median(std::move(hs))};
      double old_cost = 0.0, new_cost = 0.0;
      for (std::size_t i : members[j]) {
        old_cost += shape_distance(shapes[i], centroids[j]);
        new_cost += shape_distance(shapes[i], candidate);
      }
      if (new_cost <= old_cost) {
        movement = std::max({movement, std::abs(candidate.w - centroids[j].w),
                             std::abs(candidate.h - centroids[j].h)});
        centroids[j] = candidate;
      }
    }

    if (movement < tol) break;
  }

  std::sort(centroids.begin(), centroids.end(), area_less);
  result.anchors.anchors = std::move(centroids);
  result.avg_iou = avg_iou(shapes, result.anchors);
  return result;
}

std::vector<BoxShape> dataset_shapes(const Dataset& ds, double input_res,
                                     const std::vector<std::string>* only_ids) {
  if (!(input_res > 0.0)) {
    throw InvalidInputError("dataset_shapes: input_res must be > 0");
  }
  std::set<std::string> wanted;
  if (only_ids != nullptr) wanted.insert(only_ids->begin(), only_ids->end());

  std::vector<BoxShape> shapes;
  for (const auto& ann : ds.annotations) {
    if (only_ids != nullptr && wanted.count(ann.image_id) == 0) continue;
    const double sx = input_res / ann.width;
    const double sy = input_res / ann.height;
    for (const auto& obj : ann.objects) {
      shapes.push_back({obj.box.width() * sx, obj.box.height() * sy});
    }
  }
  return shapes;
}

std::string anchors_to_csv(const AnchorSet& anchors, double avg_iou_value) {
  std::string out;
  for (const auto& a : anchors.anchors) {
    out += format_double(a.w) + "," + format_double(a.h) + "\n";
  }
  out += "# avg_iou=" + format_double(avg_iou_value) + "\n";
  return out;
}

AnchorSet anchors_from_csv(std::string_view text) {
  AnchorSet set;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line[0] == '#') continue;

    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw InvalidInputError("anchors csv: expected 'w,h', got '" +
                              std::string(line) + "'");
    }
    BoxShape s;
    auto parse = [&](std::string_view field, double& out_value) {
      auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                     out_value);
      if (ec != std::errc() || p != field.data() + field.size() ||
          !(out_value > 0.0)) {
        throw InvalidInputError("anchors csv: bad value '" +
                                std::string(field) + "'");
      }
    };
    parse(line.substr(0, comma), s.w);
    parse(line.substr(comma + 1), s.h);
    set.anchors.push_back(s);
  }
  if (set.anchors.empty()) throw InvalidInputError("anchors csv: empty");
  return set;
}

}  // namespace detkit
