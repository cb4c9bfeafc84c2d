#include "detkit/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "detkit/error.hpp"
#include "detkit/parallel.hpp"

namespace detkit {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Total order on detections: score descending, then image, category and
// coordinates. Makes evaluation independent of input order.
bool canonical_less(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  if (a.category != b.category) return a.category < b.category;
  if (a.box.xmin != b.box.xmin) return a.box.xmin < b.box.xmin;
  if (a.box.ymin != b.box.ymin) return a.box.ymin < b.box.ymin;
  if (a.box.xmax != b.box.xmax) return a.box.xmax < b.box.xmax;
  return a.box.ymax < b.box.ymax;
}

}  // namespace

std::string to_string(ApMode mode) {
  return mode == ApMode::continuous ? "continuous" : "elevenpoint";
}

ApMode ap_mode_from_string(std::string_view name) {
  if (name == "continuous") return ApMode::continuous;
  if (name == "elevenpoint") return ApMode::elevenpoint;
  throw InvalidInputError("unknown AP mode '" + std::string(name) +
                          "' (use continuous or elevenpoint)");
}

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<BBox>& gts, double iou_thresh) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });

  MatchResult result;
  result.per_detection.resize(dets.size());
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t i : order) {
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(dets[i].box, gts[g]);
      if (v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best_iou >= iou_thresh) {
      taken[best_gt] = true;
      result.per_detection[i] = DetMatch{true, best_gt};
    }
  }
  for (bool t : taken) {
    if (!t) ++result.unmatched_gt;
  }
  return result;
}

ApResult average_precision(std::vector<std::pair<double, bool>> score_flags,
                           long n_gt, ApMode mode) {
  if (n_gt < 0) throw InvalidInputError("average_precision: n_gt must be >= 0");
  ApResult result;
  if (n_gt == 0) return result;  // undefined, excluded from mAP
  result.defined = true;

  std::stable_sort(score_flags.begin(), score_flags.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  long tp = 0, fp = 0;
  std::vector<double> recall, precision;
  recall.reserve(score_flags.size());
  precision.reserve(score_flags.size());
  for (const auto& [score, is_tp] : score_flags) {
    is_tp ? ++tp : ++fp;
    if (tp > n_gt) {
      throw InvalidInputError(
          "average_precision: more true positives than ground truths");
    }
    recall.push_back(static_cast<double>(tp) / n_gt);
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    result.curve.push_back(PrPoint{recall.back(), precision.back()});
  }

  if (mode == ApMode::continuous) {
    // Area under the precision envelope (precision made non-increasing
    // from the right), accumulated over recall increments.
    const std::size_t n = recall.size();
    double env = 0.0;
    std::vector<double> envelope(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      env = std::max(env, precision[i]);
      envelope[i] = env;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ap += (recall[i] - prev_recall) * envelope[i];
      prev_recall = recall[i];
    }
    result.ap = ap;
  } else {
    double sum = 0.0;
    for (int level = 0; level <= 10; ++level) {
      const double r = level / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] >= r) best = std::max(best, precision[i]);
      }
      sum += best;
    }
    result.ap = sum / 11.0;
  }
  return result;
}

EvalReport evaluate(const Dataset& gt, const std::vector<Detection>& dets,
                    const EvalConfig& config) {
  const int k = static_cast<int>(gt.categories.size());

  std::unordered_map<std::string, std::size_t> image_index;
  for (std::size_t i = 0; i < gt.annotations.size(); ++i) {
    image_index[gt.annotations[i].image_id] = i;
  }

  std::set<std::string> offenders;
  for (const auto& d : dets) {
    if (image_index.find(d.image_id) == image_index.end()) {
      offenders.insert(d.image_id);
    } else if (d.category < 0 || d.category >= k) {
      offenders.insert(d.image_id + " (category " +
                       std::to_string(d.category) + ")");
    }
  }
  if (!offenders.empty()) {
    std::string msg = "evaluate: detections reference unknown inputs:";
    for (const auto& o : offenders) msg += " '" + o + "'";
    throw InvalidInputError(msg);
  }

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return canonical_less(dets[a], dets[b]);
  });

  // Bucket detections per (image, category) in canonical order; remember
  // each detection's canonical rank for the pooled AP ordering.
  struct Bucket {
    std::vector<Detection> dets;
    std::vector<std::size_t> ranks;
  };
  std::vector<std::vector<Bucket>> buckets(
      gt.annotations.size(), std::vector<Bucket>(static_cast<std::size_t>(k)));
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Detection& d = dets[order[rank]];
    Bucket& bucket = buckets[image_index[d.image_id]][d.category];
    bucket.dets.push_back(d);
    bucket.ranks.push_back(rank);
  }

  // Matching is independent per (image, category); flags land in a dense
  // per-rank table so the merge is deterministic regardless of jobs.
  std::vector<char> tp_by_rank(order.size(), 0);
  std::vector<std::vector<BBox>> gt_boxes(gt.annotations.size());
  parallel_for(gt.annotations.size(), config.jobs, [&](std::size_t img) {
    const auto& ann = gt.annotations[img];
    for (int c = 0; c < k; ++c) {
      const Bucket& bucket = buckets[img][c];
      std::vector<BBox> cat_gts;
      for (const auto& obj : ann.objects) {
        if (obj.category == c) cat_gts.push_back(obj.box);
      }
      if (bucket.dets.empty()) continue;
      const MatchResult matches =
          match_detections(bucket.dets, cat_gts, config.iou_thresh);
      for (std::size_t i = 0; i < bucket.dets.size(); ++i) {
        tp_by_rank[bucket.ranks[i]] = matches.per_detection[i].tp ? 1 : 0;
      }
    }
  });

  EvalReport report;
  report.categories = gt.categories;
  report.ap_mode = config.ap_mode;
  report.iou_thresh = config.iou_thresh;
  report.per_category.resize(static_cast<std::size_t>(k));

  std::vector<long> gt_count(static_cast<std::size_t>(k), 0);
  for (const auto& ann : gt.annotations) {
    for (const auto& obj : ann.objects) ++gt_count[obj.category];
  }

  double ap_sum = 0.0;
  long defined = 0;
  for (int c = 0; c < k; ++c) {
    std::vector<std::pair<double, bool>> score_flags;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const Detection& d = dets[order[rank]];
      if (d.category != c) continue;
      score_flags.emplace_back(d.score, tp_by_rank[rank] != 0);
    }

    CategoryEval& ce = report.per_category[c];
    ce.name = gt.categories[c];
    ce.n_gt = gt_count[c];
    ce.n_det = static_cast<long>(score_flags.size());
    for (const auto& [score, is_tp] : score_flags) {
      is_tp ? ++ce.tp : ++ce.fp;
    }
    report.total_gt += ce.n_gt;
    report.total_detections += ce.n_det;

    const ApResult ap = average_precision(score_flags, ce.n_gt, config.ap_mode);
    ce.defined = ap.defined;
    ce.curve = ap.curve;
    if (ap.defined) {
      ce.ap_percent = ap.ap * 100.0;
      ap_sum += ce.ap_percent;
      ++defined;
    }
  }
  report.map_percent = defined > 0 ? ap_sum / defined : 0.0;
  return report;
}

EvalReport report_from_aps(const std::vector<std::string>& categories,
                           const std::vector<double>& aps_percent) {
  if (categories.size() != aps_percent.size() || categories.empty()) {
    throw InvalidInputError(
        "report_from_aps: need matching non-empty categories and APs");
  }
  EvalReport report;
  report.categories = categories;
  double sum = 0.0;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (aps_percent[i] < 0.0 || aps_percent[i] > 100.0) {
      throw InvalidInputError("report_from_aps: AP must be in [0,100]");
    }
    CategoryEval ce;
    ce.name = categories[i];
    ce.defined = true;
    ce.ap_percent = aps_percent[i];
    report.per_category.push_back(std::move(ce));
    sum += aps_percent[i];
  }
  report.map_percent = sum / static_cast<double>(categories.size());
  return report;
}

EvalReport cross_val_aggregate(std::span<const EvalReport> fold_reports) {
  if (fold_reports.empty()) {
    throw InvalidInputError("cross_val_aggregate: no fold reports");
  }
  const auto& first = fold_reports.front();
  for (const auto& r : fold_reports) {
    if (r.categories != first.categories) {
      throw InvalidInputError(
          "cross_val_aggregate: fold reports have mismatched categories");
    }
    if (r.ap_mode != first.ap_mode || r.iou_thresh != first.iou_thresh) {
      throw InvalidInputError(
          "cross_val_aggregate: fold reports were produced with different "
          "evaluation settings");
    }
  }

  EvalReport agg;
  agg.categories = first.categories;
  agg.ap_mode = first.ap_mode;
  agg.iou_thresh = first.iou_thresh;
  agg.per_category.resize(first.categories.size());

  double ap_sum = 0.0;
  long defined = 0;
  for (std::size_t c = 0; c < first.categories.size(); ++c) {
    CategoryEval& ce = agg.per_category[c];
    ce.name = first.categories[c];
    double sum = 0.0;
    long folds_defined = 0;
    for (const auto& r : fold_reports) {
      const CategoryEval& fc = r.per_category[c];
      ce.n_gt += fc.n_gt;
      ce.n_det += fc.n_det;
      ce.tp += fc.tp;
      ce.fp += fc.fp;
      if (fc.defined) {
        sum += fc.ap_percent;
        ++folds_defined;
      }
    }
    if (folds_defined > 0) {
      ce.defined = true;
      ce.ap_percent = sum / folds_defined;
      ap_sum += ce.ap_percent;
      ++defined;
    }
    agg.total_gt += ce.n_gt;
    agg.total_detections += ce.n_det;
  }
  agg.map_percent = defined > 0 ? ap_sum / defined : 0.0;
  return agg;
}

AblationTable ablation_report(
    const std::vector<std::pair<std::string, EvalReport>>& runs,
    const std::string& baseline) {
  const EvalReport* base = nullptr;
  for (const auto& [name, report] : runs) {
    if (name == baseline) base = &report;
  }
  if (base == nullptr) {
    throw InvalidInputError("ablation_report: baseline run '" + baseline +
                            "' not present");
  }

  AblationTable table;
  table.categories = base->categories;
  for (const auto& [name, report] : runs) {
    if (report.categories != base->categories) {
      throw InvalidInputError("ablation_report: run '" + name +
                              "' has mismatched categories");
    }
    AblationRow row;
    row.name = name;
    row.map_percent = report.map_percent;
    row.delta = report.map_percent - base->map_percent;
    for (const auto& ce : report.per_category) {
      row.per_category.push_back(ce.ap_percent);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["categories"] = report.categories;
  j["map"] = report.map_percent;
  j["ap_mode"] = to_string(report.ap_mode);
  j["iou_thresh"] = report.iou_thresh;
  j["total_gt"] = report.total_gt;
  j["total_detections"] = report.total_detections;
  j["per_category"] = nlohmann::ordered_json::array();
  for (const auto& ce : report.per_category) {
    nlohmann::ordered_json c;
    c["name"] = ce.name;
    c["defined"] = ce.defined;
    c["ap"] = ce.ap_percent;
    c["n_gt"] = ce.n_gt;
    c["n_det"] = ce.n_det;
    c["tp"] = ce.tp;
    c["fp"] = ce.fp;
    c["pr"] = nlohmann::ordered_json::array();
    for (const auto& p : ce.curve) {
      c["pr"].push_back({p.recall, p.precision});
    }
    j["per_category"].push_back(std::move(c));
  }
  if (report.latency) {
    j["latency_ms"] = {{"mean", report.latency->mean_ms},
                       {"median", report.latency->median_ms},
                       {"p95", report.latency->p95_ms}};
  }
  if (report.model_size_bytes) {
    j["model_size_bytes"] = *report.model_size_bytes;
  }
  return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("report json: ") + e.what(), e.byte);
  }
  try {
    EvalReport report;
    report.categories = j.at("categories").get<std::vector<std::string>>();
    report.map_percent = j.at("map").get<double>();
    if (j.contains("ap_mode")) {
      report.ap_mode = ap_mode_from_string(j["ap_mode"].get<std::string>());
    }
    if (j.contains("iou_thresh")) {
      report.iou_thresh = j["iou_thresh"].get<double>();
    }
    report.total_gt = j.value("total_gt", 0L);
    report.total_detections = j.value("total_detections", 0L);
    for (const auto& c : j.at("per_category")) {
      CategoryEval ce;
      ce.name = c.at("name").get<std::string>();
      ce.defined = c.value("defined", true);
      ce.ap_percent = c.at("ap").get<double>();
      ce.n_gt = c.value("n_gt", 0L);
      ce.n_det = c.value("n_det", 0L);
      ce.tp = c.value("tp", 0L);
      ce.fp = c.value("fp", 0L);
      if (c.contains("pr")) {
        for (const auto& p : c["pr"]) {
          ce.curve.push_back(PrPoint{p.at(0).get<double>(),
                                     p.at(1).get<double>()});
        }
      }
      report.per_category.push_back(std::move(ce));
    }
    if (report.per_category.size() != report.categories.size()) {
      throw InvalidInputError(
          "report json: per_category does not match categories");
    }
    if (j.contains("latency_ms")) {
      LatencyStats ls;
      ls.mean_ms = j["latency_ms"].at("mean").get<double>();
      ls.median_ms = j["latency_ms"].at("median").get<double>();
      ls.p95_ms = j["latency_ms"].at("p95").get<double>();
      report.latency = ls;
    }
    if (j.contains("model_size_bytes")) {
      report.model_size_bytes = j["model_size_bytes"].get<std::uint64_t>();
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("report json: ") + e.what());
  }
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "category,ap,n_gt,n_det,tp,fp\n";
  for (const auto& ce : report.per_category) {
    out += ce.name + "," +
           (ce.defined ? format_double(ce.ap_percent) : std::string("nan")) +
           "," + std::to_string(ce.n_gt) + "," + std::to_string(ce.n_det) +
           "," + std::to_string(ce.tp) + "," + std::to_string(ce.fp) + "\n";
  }
  out += "mAP," + format_double(report.map_percent) + ",,,,\n";
  return out;
}

std::string ablation_to_csv(const AblationTable& table) {
  std::string out = "run,map,delta";
  for (const auto& name : table.categories) out += "," + name;
  out += "\n";
  char num[32];
  for (const auto& row : table.rows) {
    out += row.name;
    std::snprintf(num, sizeof(num), ",%.2f,%.2f", row.map_percent, row.delta);
    out += num;
    for (double ap : row.per_category) {
      std::snprintf(num, sizeof(num), ",%.2f", ap);
      out += num;
    }
    out += "\n";
  }
  return out;
}

std::string ablation_to_text(const AblationTable& table) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-24s %8s %8s", "run", "mAP", "Delta");
  out << buf;
  for (const auto& name : table.categories) {
    std::snprintf(buf, sizeof(buf), " %8s", name.c_str());
    out << buf;
  }
  out << "\n";
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof(buf), "%-24s %8.2f %8.2f", row.name.c_str(),
                  row.map_percent, row.delta);
    out << buf;
    for (double ap : row.per_category) {
      std::snprintf(buf, sizeof(buf), " %8.2f", ap);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace detkit
