#include "detkit/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "detkit/error.hpp"
#include "detkit/rng.hpp"

namespace detkit {

namespace {

// Fixed palette, one color per category index (cycled past six).
const double kPalette[6][3] = {{0.85, 0.20, 0.20}, {0.20, 0.70, 0.25},
                               {0.20, 0.35, 0.85}, {0.90, 0.75, 0.15},
                               {0.65, 0.25, 0.75}, {0.15, 0.75, 0.75}};

int sample_category(const std::vector<double>& cumulative, Rng& rng) {
  const double target = rng.uniform() * cumulative.back();
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (cumulative[i] > target) return static_cast<int>(i);
  }
  return static_cast<int>(cumulative.size()) - 1;
}

}  // namespace

SyntheticDataset gen_synthetic_dataset(const SyntheticConfig& config) {
  if (config.n_images < 1) {
    throw InvalidInputError("gen_synthetic_dataset: n_images must be >= 1");
  }
  if (config.width < 16 || config.height < 16) {
    throw InvalidInputError("gen_synthetic_dataset: dims must be >= 16");
  }
  if (config.categories.empty()) {
    throw InvalidInputError("gen_synthetic_dataset: empty category table");
  }
  const std::size_t k = config.categories.size();
  if (!config.category_weights.empty() && config.category_weights.size() != k) {
    throw InvalidInputError(
        "gen_synthetic_dataset: weights must match the category table");
  }

  std::vector<double> cumulative(k, 0.0);
  double running = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double w =
        config.category_weights.empty() ? 1.0 : config.category_weights[c];
    if (w < 0.0) {
      throw InvalidInputError("gen_synthetic_dataset: negative weight");
    }
    running += w;
    cumulative[c] = running;
  }
  if (!(running > 0.0)) {
    throw InvalidInputError("gen_synthetic_dataset: weights sum to zero");
  }

  const long n = config.n_images;
  Rng root(config.seed);

  // Box-count schedule: either 1-3 at random, or an exact total spread as
  // one box per image plus extras dealt over a shuffled image order.
  std::vector<int> box_count(static_cast<std::size_t>(n), 1);
  if (config.total_boxes == 0) {
    Rng counts = root.stream("box-counts");
    for (auto& c : box_count) c = 1 + static_cast<int>(counts.uniform_index(3));
  } else {
    if (config.total_boxes < n || config.total_boxes > 3L * n) {
      throw InvalidInputError(
          "gen_synthetic_dataset: total_boxes must lie in [n_images, "
          "3*n_images]");
    }
    long extras = config.total_boxes - n;
    Rng deal = root.stream("box-extras");
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    deal.shuffle(order);
    for (int pass = 0; pass < 2 && extras > 0; ++pass) {
      for (std::size_t i : order) {
        if (extras == 0) break;
        if (box_count[i] < 3) {
          ++box_count[i];
          --extras;
        }
      }
    }
  }

  SyntheticDataset synth;
  synth.dataset.categories = config.categories;
  synth.dataset.annotations.reserve(static_cast<std::size_t>(n));
  synth.images.reserve(static_cast<std::size_t>(n));

  for (long i = 0; i < n; ++i) {
    Rng rng = root.stream("image").stream(static_cast<std::uint64_t>(i));
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%06ld", i);

    Image img;
    img.width = config.width;
    img.height = config.height;
    img.pixels.resize(static_cast<std::size_t>(config.width) * config.height *
                      3);
    for (auto& v : img.pixels) v = rng.uniform(0.05, 0.55);

    ImageAnnotation ann;
    ann.image_id = id;
    ann.width = config.width;
    ann.height = config.height;

    for (int b = 0; b < box_count[i]; ++b) {
      const int min_side = 8;
      const int bw = min_side + static_cast<int>(rng.uniform_index(
                                    static_cast<std::size_t>(
                                        config.width / 2 - min_side + 1)));
      const int bh = min_side + static_cast<int>(rng.uniform_index(
                                    static_cast<std::size_t>(
                                        config.height / 2 - min_side + 1)));
      const int x0 = static_cast<int>(
          rng.uniform_index(static_cast<std::size_t>(config.width - bw + 1)));
      const int y0 = static_cast<int>(
          rng.uniform_index(static_cast<std::size_t>(config.height - bh + 1)));
      const int category = sample_category(cumulative, rng);

      const double* color = kPalette[category % 6];
      for (int y = y0; y < y0 + bh; ++y) {
        for (int x = x0; x < x0 + bw; ++x) {
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
        }
      }

      GroundTruthObject obj;
      obj.category = category;
      obj.box = BBox{static_cast<double>(x0), static_cast<double>(y0),
                     static_cast<double>(x0 + bw),
                     static_cast<double>(y0 + bh)};
      ann.objects.push_back(obj);
    }

    synth.dataset.annotations.push_back(std::move(ann));
    synth.images.push_back(std::move(img));
  }
  return synth;
}

void DegradeSpec::validate() const {
  if (miss_rate < 0.0 || miss_rate > 1.0) {
    throw InvalidInputError("degrade: miss_rate must be in [0,1]");
  }
  if (fp_rate < 0.0) throw InvalidInputError("degrade: fp_rate must be >= 0");
  if (loc_noise < 0.0) {
    throw InvalidInputError("degrade: loc_noise must be >= 0");
  }
  auto check_band = [](double lo, double hi, const char* what) {
    if (!(lo > 0.0) || lo > hi || hi > 1.0) {
      throw InvalidInputError(std::string("degrade: bad score band for ") +
                              what);
    }
  };
  check_band(tp_score_lo, tp_score_hi, "true positives");
  check_band(fp_score_lo, fp_score_hi, "false positives");
}

DegradeResult degrade_to_detections(const Dataset& ds, const DegradeSpec& spec,
                                    double match_iou) {
  spec.validate();
  Rng rng = Rng(spec.seed).stream("degrade");

  DegradeResult result;
  for (const auto& ann : ds.annotations) {
    for (const auto& obj : ann.objects) {
      if (rng.uniform() < spec.miss_rate) continue;
      BBox box = obj.box;
      if (spec.loc_noise > 0.0) {
        box.xmin += rng.normal() * spec.loc_noise;
        box.ymin += rng.normal() * spec.loc_noise;
        box.xmax += rng.normal() * spec.loc_noise;
        box.ymax += rng.normal() * spec.loc_noise;
        if (box.xmax <= box.xmin) box.xmax = box.xmin + 0.5;
        if (box.ymax <= box.ymin) box.ymax = box.ymin + 0.5;
      }
      const auto clipped = clip_box(box, ann.width, ann.height);
      if (!clipped) continue;  // jittered fully out of frame
      result.detections.push_back(
          Detection{ann.image_id, obj.category,
                    rng.uniform(spec.tp_score_lo, spec.tp_score_hi), *clipped});
    }

    const std::uint64_t spurious = rng.poisson(spec.fp_rate);
    for (std::uint64_t f = 0; f < spurious; ++f) {
      const double bw = rng.uniform(2.0, std::max(3.0, ann.width / 2.0));
      const double bh = rng.uniform(2.0, std::max(3.0, ann.height / 2.0));
      const double x0 = rng.uniform(0.0, ann.width - bw);
      const double y0 = rng.uniform(0.0, ann.height - bh);
      result.detections.push_back(Detection{
          ann.image_id,
          static_cast<int>(rng.uniform_index(ds.categories.size())),
          rng.uniform(spec.fp_score_lo, spec.fp_score_hi),
          BBox{x0, y0, x0 + bw, y0 + bh}});
    }
  }

  result.oracle = oracle_evaluate(ds, result.detections, match_iou);
  return result;
}

// ---------------------------------------------------------------------------
// Brute-force reference scorer. Everything below is intentionally
// self-contained: own box type, own overlap, own sorting, quadratic scans.
// ---------------------------------------------------------------------------

namespace {

struct NaiveBox {
  double x1, y1, x2, y2;
};

double naive_overlap(const NaiveBox& a, const NaiveBox& b) {
  const double ix1 = a.x1 > b.x1 ? a.x1 : b.x1;
  const double iy1 = a.y1 > b.y1 ? a.y1 : b.y1;
  const double ix2 = a.x2 < b.x2 ? a.x2 : b.x2;
  const double iy2 = a.y2 < b.y2 ? a.y2 : b.y2;
  const double iw = ix2 - ix1;
  const double ih = iy2 - iy1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
  const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
  return inter / (area_a + area_b - inter);
}

struct NaiveDet {
  double score;
  NaiveBox box;
  int image;
  bool tp = false;
};

double naive_ap_continuous(const std::vector<double>& recall,
                           const std::vector<double>& precision) {
  double ap = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    const double prev = i == 0 ? 0.0 : recall[i - 1];
    double best = 0.0;
    for (std::size_t j = i; j < precision.size(); ++j) {
      if (precision[j] > best) best = precision[j];
    }
    ap += (recall[i] - prev) * best;
  }
  return ap;
}

double naive_ap_elevenpoint(const std::vector<double>& recall,
                            const std::vector<double>& precision) {
  double sum = 0.0;
  for (int level = 0; level <= 10; ++level) {
    const double r = level / 10.0;
    double best = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= r && precision[i] > best) best = precision[i];
    }
    sum += best;
  }
  return sum / 11.0;
}

}  // namespace

OracleEval oracle_evaluate(const Dataset& ds,
                           const std::vector<Detection>& dets,
                           double match_iou) {
  OracleEval oracle;
  double sum_cont = 0.0, sum_11 = 0.0;
  long defined = 0;

  for (std::size_t cat = 0; cat < ds.categories.size(); ++cat) {
    // Gather this category's detections and count its ground truths.
    std::vector<NaiveDet> cat_dets;
    long n_gt = 0;
    for (std::size_t img = 0; img < ds.annotations.size(); ++img) {
      const auto& ann = ds.annotations[img];
      for (const auto& obj : ann.objects) {
        if (obj.category == static_cast<int>(cat)) ++n_gt;
      }
      for (const auto& d : dets) {
        if (d.category != static_cast<int>(cat) || d.image_id != ann.image_id) {
          continue;
        }
        cat_dets.push_back(NaiveDet{
            d.score,
            NaiveBox{d.box.xmin, d.box.ymin, d.box.xmax, d.box.ymax},
            static_cast<int>(img)});
      }
    }

    OracleCategory result;
    result.name = ds.categories[cat];
    if (n_gt == 0) {
      oracle.per_category.push_back(result);
      continue;
    }
    result.defined = true;

    // Greedy matching per image, best-score first (insertion-stable sort).
    for (std::size_t a = 0; a + 1 < cat_dets.size(); ++a) {
      for (std::size_t b = 0; b + 1 < cat_dets.size() - a; ++b) {
        if (cat_dets[b + 1].score > cat_dets[b].score) {
          std::swap(cat_dets[b], cat_dets[b + 1]);
        }
      }
    }
    for (std::size_t img = 0; img < ds.annotations.size(); ++img) {
      const auto& ann = ds.annotations[img];
      std::vector<NaiveBox> gts;
      for (const auto& obj : ann.objects) {
        if (obj.category == static_cast<int>(cat)) {
          gts.push_back(NaiveBox{obj.box.xmin, obj.box.ymin, obj.box.xmax,
                                 obj.box.ymax});
        }
      }
      std::vector<bool> used(gts.size(), false);
      for (auto& det : cat_dets) {
        if (det.image != static_cast<int>(img)) continue;
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
          if (used[g]) continue;
          const double v = naive_overlap(det.box, gts[g]);
          if (v > best_iou) {
            best_iou = v;
            best = static_cast<int>(g);
          }
        }
        if (best >= 0 && best_iou >= match_iou) {
          used[best] = true;
          det.tp = true;
        }
      }
    }

    std::vector<double> recall, precision;
    long tp = 0, fp = 0;
    for (const auto& det : cat_dets) {
      if (det.tp) {
        ++tp;
      } else {
        ++fp;
      }
      recall.push_back(static_cast<double>(tp) / n_gt);
      precision.push_back(static_cast<double>(tp) / (tp + fp));
    }

    result.ap_continuous = naive_ap_continuous(recall, precision);
    result.ap_elevenpoint = naive_ap_elevenpoint(recall, precision);
    sum_cont += result.ap_continuous;
    sum_11 += result.ap_elevenpoint;
    ++defined;
    oracle.per_category.push_back(result);
  }

  if (defined > 0) {
    oracle.map_continuous = sum_cont / defined;
    oracle.map_elevenpoint = sum_11 / defined;
  }
  return oracle;
}

std::vector<HeadTensor> random_head_tensors(const BenchConfig& config,
                                            Rng& rng) {
  if (config.resolution < 32 || config.resolution % 32 != 0) {
    throw InvalidInputError("bench: resolution must be a multiple of 32");
  }
  if (config.num_categories < 1) {
    throw InvalidInputError("bench: need at least one category");
  }

  std::vector<HeadTensor> tensors;
  for (int stride : {8, 16, 32}) {
    HeadTensor t;
    t.grid = config.resolution / stride;
    t.stride = stride;
    t.num_categories = config.num_categories;
    t.values.resize(static_cast<std::size_t>(t.grid) * t.grid * 3 *
                    t.channels());
    // Background objectness sits where a trained head puts it: deep below
    // the score threshold, with a thin tail that occasionally crosses it.
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      t.values[i] = static_cast<float>(rng.normal());
    }
    for (int cy = 0; cy < t.grid; ++cy) {
      for (int cx = 0; cx < t.grid; ++cx) {
        for (int a = 0; a < 3; ++a) {
          t.at(cy, cx, a, 4) = static_cast<float>(-25.0 + 3.0 * rng.normal());
        }
      }
    }
    const std::size_t slots = static_cast<std::size_t>(t.grid) * t.grid * 3;
    for (int hit = 0; hit < config.activated_per_scale; ++hit) {
      const std::size_t slot = rng.uniform_index(slots);
      const int a = static_cast<int>(slot % 3);
      const int cx = static_cast<int>((slot / 3) % t.grid);
      const int cy = static_cast<int>(slot / 3 / t.grid);
      t.at(cy, cx, a, 4) = static_cast<float>(2.0 + rng.normal());
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

BenchResult time_decode(const BenchConfig& config, const AnchorSet& anchors) {
  if (config.trials < 1) throw InvalidInputError("bench: trials must be >= 1");

  BenchResult result;
  result.resolution = config.resolution;
  const long r = config.resolution;
  result.cells = (r / 8) * (r / 8) + (r / 16) * (r / 16) + (r / 32) * (r / 32);

  DecodeConfig decode_config;
  decode_config.score_thresh = config.score_thresh;
  decode_config.iou_thresh = config.iou_thresh;

  Rng rng = Rng(config.seed).stream("bench");
  std::vector<double> samples_ms;
  long total_dets = 0;
  for (int trial = 0; trial < config.trials; ++trial) {
    const auto tensors = random_head_tensors(config, rng);
    const auto start = std::chrono::steady_clock::now();
    const auto dets =
        decode_full(tensors, anchors, config.resolution, "bench",
                    config.resolution, config.resolution, decode_config);
    const auto stop = std::chrono::steady_clock::now();
    samples_ms.push_back(
        std::chrono::duration<double, std::milli>(stop - start).count());
    total_dets += static_cast<long>(dets.size());
  }

  std::sort(samples_ms.begin(), samples_ms.end());
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  result.mean_ms = sum / samples_ms.size();
  result.median_ms = samples_ms[samples_ms.size() / 2];
  const std::size_t p95_index = std::min(
      samples_ms.size() - 1,
      static_cast<std::size_t>(std::ceil(0.95 * samples_ms.size())) - 1);
  result.p95_ms = samples_ms[p95_index];
  result.mean_detections =
      static_cast<double>(total_dets) / static_cast<double>(config.trials);
  return result;
}

}  // namespace detkit
