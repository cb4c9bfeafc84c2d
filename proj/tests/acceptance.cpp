// Acceptance suite: ten end-to-end checks, one per pipeline guarantee.
// Run all (`acceptance --cli <detkit>`) or one (`--criterion N`).
// Each criterion prints exactly one [PASS]/[FAIL] line.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "detkit/anchors.hpp"
#include "detkit/augment.hpp"
#include "detkit/decode.hpp"
#include "detkit/error.hpp"
#include "detkit/eval.hpp"
#include "detkit/harness.hpp"
#include "detkit/ppm.hpp"
#include "detkit/rng.hpp"
#include "detkit/trainmath.hpp"
#include "detkit/voc.hpp"

namespace fs = std::filesystem;
using namespace detkit;

namespace {

int g_failures_in_criterion = 0;

void expect(bool condition, const std::string& detail) {
  if (!condition) {
    ++g_failures_in_criterion;
    if (g_failures_in_criterion <= 8) {
      std::cout << "       failed: " << detail << "\n";
    }
  }
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// ---------------------------------------------------------------------------
// 1. Table arithmetic: per-category APs aggregate to the published mAP and
//    the ablation deltas come out exact at 2-decimal rounding.
// ---------------------------------------------------------------------------
void criterion1(const std::string&) {
  const EvalReport refinements = report_from_aps(
      default_categories(), {96.88, 88.76, 89.79, 91.26, 89.58, 95.41});
  expect(std::abs(refinements.map_percent - 91.95) <= 0.005,
         "refinements row mAP " + std::to_string(refinements.map_percent));

  const EvalReport baseline_row = report_from_aps(
      default_categories(), {95.93, 88.57, 89.71, 90.62, 85.91, 92.81});
  expect(std::abs(baseline_row.map_percent - 90.59) <= 0.005,
         "baseline row per-category mean " +
             std::to_string(baseline_row.map_percent));

  auto with_map = [](double map) {
    EvalReport r =
        report_from_aps(default_categories(), {map, map, map, map, map, map});
    r.map_percent = map;
    return r;
  };
  const std::vector<std::pair<std::string, EvalReport>> runs{
      {"baseline", with_map(90.59)},
      {"cosine", with_map(90.87)},
      {"smoothing", with_map(91.08)},
      {"mixup", with_map(91.95)},
  };
  const AblationTable table = ablation_report(runs, "baseline");
  const double expected[4] = {0.0, 0.28, 0.49, 1.36};
  for (int i = 0; i < 4; ++i) {
    expect(round2(table.rows[i].delta) == expected[i],
           table.rows[i].name + " delta " + std::to_string(table.rows[i].delta));
  }
}

// ---------------------------------------------------------------------------
// 2. Split fidelity on 2688 ids: one fold is exactly (1882, 268, 538) and
//    the five test blocks partition the id set.
// ---------------------------------------------------------------------------
void criterion2(const std::string&) {
  Dataset ds;
  ds.categories = default_categories();
  for (int i = 0; i < 2688; ++i) {
    ImageAnnotation ann;
    ann.image_id = "img_" + std::to_string(i);
    ann.width = 640;
    ann.height = 640;
    ds.annotations.push_back(std::move(ann));
  }
  const auto folds = kfold_split(ds, 7);

  bool found = false;
  for (const auto& fold : folds) {
    if (fold.train_ids.size() == 1882 && fold.val_ids.size() == 268 &&
        fold.test_ids.size() == 538) {
      found = true;
    }
  }
  expect(found, "no fold with (train,val,test) = (1882,268,538)");

  std::set<std::string> all_test;
  std::size_t total = 0;
  for (const auto& fold : folds) {
    total += fold.test_ids.size();
    for (const auto& id : fold.test_ids) all_test.insert(id);
    std::set<std::string> fold_ids(fold.train_ids.begin(),
                                   fold.train_ids.end());
    fold_ids.insert(fold.val_ids.begin(), fold.val_ids.end());
    fold_ids.insert(fold.test_ids.begin(), fold.test_ids.end());
    expect(fold_ids.size() == 2688, "fold lists overlap or drop ids");
  }
  expect(total == 2688 && all_test.size() == 2688,
         "test blocks do not partition the ids");
}

// ---------------------------------------------------------------------------
// 3. Anchor clustering: the stock nine priors are a fixed point, and the
//    Lloyd objective never rises (1e-12 float-summation slack).
// ---------------------------------------------------------------------------
void criterion3(const std::string&) {
  const AnchorSet priors = default_anchors();
  const KMeansResult fixed_point = kmeans_anchors(priors.anchors, 9, 1);
  expect(fixed_point.anchors.anchors == priors.anchors,
         "priors not returned verbatim");

  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(trial);
    std::vector<BoxShape> shapes;
    for (int i = 0; i < 500; ++i) {
      shapes.push_back({rng.uniform(4.0, 400.0), rng.uniform(4.0, 400.0)});
    }
    const KMeansResult result = kmeans_anchors(shapes, 9, trial);
    for (std::size_t i = 1; i < result.objective_history.size(); ++i) {
      expect(result.objective_history[i] <=
                 result.objective_history[i - 1] + 1e-12,
             "objective rose at trial " + std::to_string(trial) +
                 " iteration " + std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// 4. Mixup contract: out = lambda*a + (1-lambda)*b exactly at every canvas
//    cell under zero padding; weights scale by lambda / 1-lambda; lambda=1
//    reduces to parent a.
// ---------------------------------------------------------------------------
void criterion4(const std::string&) {
  Rng rng(4242);
  auto random_sample = [&](const std::string& id) {
    Sample s;
    const int w = 4 + static_cast<int>(rng.uniform_index(44));
    const int h = 4 + static_cast<int>(rng.uniform_index(44));
    s.image.width = w;
    s.image.height = h;
    s.image.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : s.image.pixels) v = rng.uniform();
    s.annotation.image_id = id;
    s.annotation.width = w;
    s.annotation.height = h;
    const int n = 1 + static_cast<int>(rng.uniform_index(3));
    for (int i = 0; i < n; ++i) {
      GroundTruthObject obj;
      obj.category = static_cast<int>(rng.uniform_index(6));
      obj.box = BBox{0, 0, 1.0 + rng.uniform_index(w - 1),
                     1.0 + rng.uniform_index(h - 1)};
      obj.weight = rng.uniform() < 0.25 ? rng.uniform(0.1, 1.0) : 1.0;
      s.annotation.objects.push_back(obj);
    }
    return s;
  };

  for (int trial = 0; trial < 100; ++trial) {
    const Sample a = random_sample("a");
    const Sample b = random_sample("b");
    const double lambda = sample_mixup_lambda(1.5, rng);
    const MixedSample mixed = mixup(a, b, lambda);
    const Image& img = mixed.sample.image;

    expect(img.width == std::max(a.image.width, b.image.width) &&
               img.height == std::max(a.image.height, b.image.height),
           "canvas is not the elementwise max of parent dims");
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < 3; ++c) {
          const double pa = (x < a.image.width && y < a.image.height)
                                ? a.image.at(x, y, c)
                                : 0.0;
          const double pb = (x < b.image.width && y < b.image.height)
                                ? b.image.at(x, y, c)
                                : 0.0;
          if (img.at(x, y, c) != lambda * pa + (1.0 - lambda) * pb) {
            expect(false, "pixel mismatch at trial " + std::to_string(trial));
            y = img.height;
            x = img.width;
            break;
          }
        }
      }
    }

    std::size_t index = 0;
    if (lambda > 0.0) {
      for (const auto& obj : a.annotation.objects) {
        const auto& merged = mixed.sample.annotation.objects[index++];
        expect(merged.weight == lambda * obj.weight, "parent-a weight");
      }
    }
    if (lambda < 1.0) {
      for (const auto& obj : b.annotation.objects) {
        const auto& merged = mixed.sample.annotation.objects[index++];
        expect(merged.weight == (1.0 - lambda) * obj.weight, "parent-b weight");
      }
    }
    expect(index == mixed.sample.annotation.objects.size(),
           "merged object count");
  }

  // lambda = 1: image equals a zero-padded, b's objects are dropped.
  const Sample a = random_sample("a");
  const Sample b = random_sample("b");
  const MixedSample ident = mixup(a, b, 1.0);
  for (int y = 0; y < ident.sample.image.height; ++y) {
    for (int x = 0; x < ident.sample.image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double pa = (x < a.image.width && y < a.image.height)
                              ? a.image.at(x, y, c)
                              : 0.0;
        expect(ident.sample.image.at(x, y, c) == pa, "lambda=1 pixel");
      }
    }
  }
  expect(ident.sample.annotation.objects.size() == a.annotation.objects.size(),
         "lambda=1 must keep exactly parent a's objects");
}

// ---------------------------------------------------------------------------
// 5. Schedule anchors: the 160/180 x0.1 step instance, and cosine values at
//    restart (exact), cycle end (exact) and midpoint (1e-12).
// ---------------------------------------------------------------------------
void criterion5(const std::string&) {
  ScheduleSpec step;
  step.kind = ScheduleKind::step;
  step.base_lr = 1e-3;
  step.total_epochs = 200;
  step.milestones = {160, 180};
  step.gamma = 0.1;
  expect(lr_at(step, 0) == 1e-3, "step lr(0)");
  expect(std::abs(lr_at(step, 160) - 1e-4) <= 1e-16, "step lr(160)");
  expect(std::abs(lr_at(step, 180) - 1e-5) <= 1e-17, "step lr(180)");
  expect(std::abs(lr_at(step, 199) - 1e-5) <= 1e-17, "step lr(199)");

  // eta values chosen dyadic so the restart identity is exact in floats.
  ScheduleSpec cosine;
  cosine.kind = ScheduleKind::cosine;
  cosine.base_lr = 1.0;
  cosine.eta_min = 0.25;
  cosine.total_epochs = 200;
  cosine.t0 = 50;
  cosine.t_mult = 2.0;  // restarts at epochs 50 and 150
  expect(lr_at(cosine, 0) == 1.0, "cosine restart at 0");
  expect(lr_at(cosine, 50) == 1.0, "cosine restart at 50");
  expect(lr_at(cosine, 150) == 1.0, "cosine restart at 150");
  expect(sgdr_value(0.25, 1.0, 50.0, 50.0) == 0.25, "cosine cycle end");
  expect(std::abs(lr_at(cosine, 25) - 0.625) <= 1e-12, "cosine midpoint");
  expect(std::abs(sgdr_value(0.25, 1.0, 25.0, 50.0) - 0.625) <= 1e-12,
         "sgdr midpoint");
}

// ---------------------------------------------------------------------------
// 6. mAP oracle equivalence: 200 random degradations, eval equals the
//    brute-force scorer to 1e-12 in both AP modes.
// ---------------------------------------------------------------------------
void criterion6(const std::string&) {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    SyntheticConfig config;
    config.seed = trial;
    config.n_images = 1 + static_cast<int>(trial % 20);
    config.width = 48;
    config.height = 48;
    const SyntheticDataset synth = gen_synthetic_dataset(config);

    Rng rng(trial * 7 + 1);
    DegradeSpec spec;
    spec.miss_rate = rng.uniform(0.0, 0.9);
    spec.fp_rate = rng.uniform(0.0, 2.0);
    spec.loc_noise = rng.uniform(0.0, 4.0);
    spec.seed = trial;
    const DegradeResult result = degrade_to_detections(synth.dataset, spec);

    for (ApMode mode : {ApMode::continuous, ApMode::elevenpoint}) {
      EvalConfig eval_config;
      eval_config.ap_mode = mode;
      const EvalReport report =
          evaluate(synth.dataset, result.detections, eval_config);
      const double oracle_map = mode == ApMode::continuous
                                    ? result.oracle.map_continuous
                                    : result.oracle.map_elevenpoint;
      expect(std::abs(report.map_percent / 100.0 - oracle_map) <= 1e-12,
             "mAP mismatch at trial " + std::to_string(trial));
      for (std::size_t c = 0; c < report.per_category.size(); ++c) {
        const auto& oracle_cat = result.oracle.per_category[c];
        expect(report.per_category[c].defined == oracle_cat.defined,
               "defined flag mismatch");
        if (!oracle_cat.defined) continue;
        const double oracle_ap = mode == ApMode::continuous
                                     ? oracle_cat.ap_continuous
                                     : oracle_cat.ap_elevenpoint;
        expect(std::abs(report.per_category[c].ap_percent / 100.0 -
                        oracle_ap) <= 1e-12,
               "per-category AP mismatch at trial " + std::to_string(trial));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// 7. NMS oracle equivalence: 1000 random instances against a quadratic
//    reference implementation.
// ---------------------------------------------------------------------------
void criterion7(const std::string&) {
  auto reference = [](const std::vector<Detection>& dets, double thresh) {
    std::vector<std::size_t> order(dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return dets[a].score > dets[b].score;
                     });
    std::vector<Detection> kept;
    for (std::size_t i : order) {
      bool keep = true;
      for (const auto& k : kept) {
        if (k.category != dets[i].category) continue;
        const BBox& a = k.box;
        const BBox& b = dets[i].box;
        const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
        const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
        const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
        if (inter / (a.area() + b.area() - inter) > thresh) {
          keep = false;
          break;
        }
      }
      if (keep) kept.push_back(dets[i]);
    }
    return kept;
  };

  Rng rng(777);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(50));
    std::vector<Detection> dets;
    for (int i = 0; i < n; ++i) {
      const double x1 = rng.uniform(0.0, 80.0);
      const double y1 = rng.uniform(0.0, 80.0);
      dets.push_back(Detection{"img", static_cast<int>(rng.uniform_index(3)),
                               rng.uniform(0.01, 1.0),
                               BBox{x1, y1, x1 + rng.uniform(2.0, 40.0),
                                    y1 + rng.uniform(2.0, 40.0)}});
    }
    const double thresh = rng.uniform(0.1, 0.9);
    const auto ours = nms(dets, thresh);
    const auto expected = reference(dets, thresh);
    bool same = ours.size() == expected.size();
    for (std::size_t i = 0; same && i < ours.size(); ++i) {
      same = ours[i] == expected[i];
    }
    expect(same, "nms differs from reference at trial " + std::to_string(trial));
  }
}

// ---------------------------------------------------------------------------
// 8. Decode hand case: the all-zero tensor yields box (-2,-1,10,9) at score
//    0.25 for the (12,10)/stride-8 slot, and moving the activated cell one
//    column right moves the box exactly one stride.
// ---------------------------------------------------------------------------
void criterion8(const std::string&) {
  const std::vector<BoxShape> anchors{{12, 10}, {16, 28}, {30, 26}};

  HeadTensor zeros;
  zeros.grid = 4;
  zeros.stride = 8;
  zeros.num_categories = 6;
  zeros.values.assign(4 * 4 * 3 * 11, 0.0f);
  const auto dets = decode_scale(zeros, anchors, 0.2);
  int hits = 0;
  for (const auto& d : dets) {
    if (d.box == BBox{-2, -1, 10, 9}) {
      expect(d.score == 0.25, "hand-case score");
      ++hits;
    }
  }
  expect(hits == 6, "expected the (0,0)/anchor-0 slot once per category");

  Rng rng(88);
  const int grid = 16;
  auto single_cell = [&](int cx, int cy) {
    HeadTensor t;
    t.grid = grid;
    t.stride = 8;
    t.num_categories = 1;
    t.values.assign(static_cast<std::size_t>(grid) * grid * 3 * 6, 0.0f);
    for (int y = 0; y < grid; ++y) {
      for (int x = 0; x < grid; ++x) {
        for (int a = 0; a < 3; ++a) t.at(y, x, a, 4) = -40.0f;
      }
    }
    t.at(cy, cx, 0, 4) = 0.0f;
    const auto out = decode_scale(t, anchors, 1e-8);
    return out.at(0).box;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const int cx = static_cast<int>(rng.uniform_index(grid - 1));
    const int cy = static_cast<int>(rng.uniform_index(grid));
    const BBox base = single_cell(cx, cy);
    const BBox shifted = single_cell(cx + 1, cy);
    expect(shifted.xmin == base.xmin + 8.0 && shifted.xmax == base.xmax + 8.0 &&
               shifted.ymin == base.ymin && shifted.ymax == base.ymax,
           "equivariance at cell " + std::to_string(cx) + "," +
               std::to_string(cy));
  }
}

// ---------------------------------------------------------------------------
// 9. Round-trip and determinism: VOC parse/write/parse identity on 100
//    random annotations, and byte-identical outputs from every CLI
//    subcommand run twice with the same seed.
// ---------------------------------------------------------------------------

int run_cli(const std::string& cli, const std::string& args,
            const fs::path& log) {
  const std::string cmd = cli + " " + args + " >> " + log.string() + " 2>&1";
  return std::system(cmd.c_str());
}

bool dirs_equal(const fs::path& a, const fs::path& b, std::string& detail) {
  std::vector<fs::path> rel;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.is_regular_file()) {
      rel.push_back(fs::relative(entry.path(), a));
    }
  }
  std::sort(rel.begin(), rel.end());
  for (const auto& r : rel) {
    std::ifstream fa(a / r, std::ios::binary);
    std::ifstream fb(b / r, std::ios::binary);
    if (!fb) {
      detail = "missing in second run: " + r.string();
      return false;
    }
    const std::string ba((std::istreambuf_iterator<char>(fa)),
                         std::istreambuf_iterator<char>());
    const std::string bb((std::istreambuf_iterator<char>(fb)),
                         std::istreambuf_iterator<char>());
    if (ba != bb) {
      detail = "differs: " + r.string();
      return false;
    }
  }
  return !rel.empty();
}

void write_decode_inputs(const fs::path& dir) {
  fs::create_directories(dir);
  Rng rng = Rng(5).stream("tensors");
  const int input_res = 96;
  std::string manifest;
  for (int img = 0; img < 2; ++img) {
    std::vector<std::string> names;
    for (int stride : {8, 16, 32}) {
      HeadTensor t;
      t.grid = input_res / stride;
      t.stride = stride;
      t.num_categories = 6;
      t.values.resize(static_cast<std::size_t>(t.grid) * t.grid * 3 * 11);
      for (auto& v : t.values) v = static_cast<float>(rng.normal());
      for (int y = 0; y < t.grid; ++y) {
        for (int x = 0; x < t.grid; ++x) {
          for (int a = 0; a < 3; ++a) {
            t.at(y, x, a, 4) = static_cast<float>(-30.0 + 2.0 * rng.normal());
          }
        }
      }
      t.at(0, 0, 0, 4) = 3.0f;  // one guaranteed detection
      const std::string name =
          "img" + std::to_string(img) + "_s" + std::to_string(stride) + ".bin";
      write_head_tensor(dir / name, t);
      names.push_back(name);
    }
    manifest += "img" + std::to_string(img) + "\t320\t240\t" + names[0] + "\t" +
                names[1] + "\t" + names[2] + "\n";
  }
  std::ofstream out(dir / "tensors.tsv", std::ios::binary);
  out << manifest;
}

void criterion9(const std::string& cli) {
  // Round-trip identity on random annotations.
  Rng rng(909);
  for (int i = 0; i < 100; ++i) {
    ImageAnnotation ann;
    ann.image_id = "rt_" + std::to_string(i);
    ann.width = 32 + static_cast<int>(rng.uniform_index(600));
    ann.height = 32 + static_cast<int>(rng.uniform_index(600));
    const int n = static_cast<int>(rng.uniform_index(5));
    for (int b = 0; b < n; ++b) {
      GroundTruthObject obj;
      obj.category = static_cast<int>(rng.uniform_index(6));
      const int x1 = static_cast<int>(rng.uniform_index(ann.width - 2));
      const int y1 = static_cast<int>(rng.uniform_index(ann.height - 2));
      obj.box = BBox{
          static_cast<double>(x1), static_cast<double>(y1),
          static_cast<double>(x1 + 1 + rng.uniform_index(ann.width - x1 - 1)),
          static_cast<double>(y1 + 1 + rng.uniform_index(ann.height - y1 - 1))};
      if (rng.uniform() < 0.3) obj.weight = rng.uniform(0.05, 1.0);
      obj.difficult = rng.uniform() < 0.1 ? 1 : 0;
      obj.truncated = rng.uniform() < 0.1 ? 1 : 0;
      ann.objects.push_back(obj);
    }
    const ImageAnnotation once = parse_voc_xml(write_voc_xml(ann));
    expect(once == ann, "round trip changed annotation " + std::to_string(i));
    expect(parse_voc_xml(write_voc_xml(once)) == once,
           "second round trip not stable");
  }

  if (cli.empty()) {
    expect(false, "--cli path required for the determinism half");
    return;
  }

  const fs::path root =
      fs::temp_directory_path() /
      ("detkit_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "cli.log";

  write_decode_inputs(root / "tensors");

  // Hand-written run reports for the ablate subcommand.
  {
    const EvalReport base = report_from_aps(
        default_categories(), {95.93, 88.57, 89.71, 90.62, 85.91, 92.81});
    const EvalReport mix = report_from_aps(
        default_categories(), {96.88, 88.76, 89.79, 91.26, 89.58, 95.41});
    std::ofstream(root / "baseline.json") << report_to_json(base);
    std::ofstream(root / "mixup.json") << report_to_json(mix);
  }

  auto sequence = [&](const fs::path& out) {
    const std::string o = out.string();
    const std::string t = (root / "tensors").string();
    int rc = 0;
    rc |= run_cli(cli,
                  "--seed 42 --out " + o +
                      "/data synth --n 12 --width 96 --height 96 --degrade",
                  log);
    rc |= run_cli(cli, "--out " + o + "/stats stats --manifest " + o +
                           "/data/manifest.tsv",
                  log);
    rc |= run_cli(cli, "--seed 42 --out " + o + "/split split --manifest " +
                           o + "/data/manifest.tsv",
                  log);
    rc |= run_cli(cli,
                  "--seed 42 --out " + o + "/anchors anchors --manifest " + o +
                      "/data/manifest.tsv --fold " + o +
                      "/split/fold0.json --subset train --k 3 --input-res 96",
                  log);
    rc |= run_cli(cli,
                  "--seed 42 --out " + o + "/aug augment --manifest " + o +
                      "/data/manifest.tsv --fold " + o +
                      "/split/fold0.json --subset train",
                  log);
    rc |= run_cli(cli,
                  "--out " + o +
                      "/sched schedule dump --kind cosine --epochs 50 --t0 10 "
                      "--tmult 2 --eta-min 1e-5",
                  log);
    rc |= run_cli(cli,
                  "--out " + o + "/decode decode --tensors " + t +
                      "/tensors.tsv --input-res 96",
                  log);
    rc |= run_cli(cli,
                  "--out " + o + "/eval eval --gt " + o +
                      "/data/manifest.tsv --dets " + o +
                      "/data/detections.jsonl",
                  log);
    rc |= run_cli(cli,
                  "--out " + o + "/evalfolds eval --gt " + o +
                      "/data/manifest.tsv --dets " + o +
                      "/data/detections.jsonl --folds " + o +
                      "/split/fold0.json," + o + "/split/fold1.json," + o +
                      "/split/fold2.json," + o + "/split/fold3.json," + o +
                      "/split/fold4.json",
                  log);
    rc |= run_cli(cli,
                  "--out " + o + "/ablate ablate --baseline " +
                      (root / "baseline.json").string() + " --runs " +
                      (root / "mixup.json").string(),
                  log);
    rc |= run_cli(cli,
                  "--seed 42 --out " + o +
                      "/bench bench --resolutions 320 --trials 2",
                  log);
    return rc;
  };

  const int rc_a = sequence(root / "a");
  const int rc_b = sequence(root / "b");
  expect(rc_a == 0, "first CLI sequence failed (see " + log.string() + ")");
  expect(rc_b == 0, "second CLI sequence failed (see " + log.string() + ")");

  if (rc_a == 0 && rc_b == 0) {
    std::string detail;
    expect(dirs_equal(root / "a", root / "b", detail),
           "outputs not byte-identical: " + detail);
  }
  if (g_failures_in_criterion == 0) fs::remove_all(root);
}

// ---------------------------------------------------------------------------
// 10. Bench sanity: candidate cell counts follow (R/8)^2+(R/16)^2+(R/32)^2
//     for every resolution in the training set, and one 608 head set
//     decodes in under 50 ms single-threaded.
// ---------------------------------------------------------------------------
void criterion10(const std::string&) {
  const AnchorSet anchors = default_anchors();
  for (int r : default_resolutions().resolutions) {
    BenchConfig config;
    config.resolution = r;
    config.trials = 1;
    config.seed = 10;
    const BenchResult result = time_decode(config, anchors);
    const long expected = (r / 8) * (r / 8) + (r / 16) * (r / 16) +
                          (r / 32) * (r / 32);
    expect(result.cells == expected,
           "cell count at " + std::to_string(r) + ": " +
               std::to_string(result.cells));
  }

  BenchConfig config;
  config.resolution = 608;
  config.trials = 5;
  config.seed = 11;
  const BenchResult result = time_decode(config, anchors);
  expect(result.mean_detections > 0.0, "608 bench produced no detections");
  expect(result.median_ms < 50.0,
         "608 decode median " + std::to_string(result.median_ms) + " ms");
}

struct Criterion {
  int id;
  const char* description;
  void (*run)(const std::string& cli);
};

const Criterion kCriteria[] = {
    {1, "table arithmetic: mAP aggregation and ablation deltas", criterion1},
    {2, "split fidelity: 1882/268/538 fold and exact test partition",
     criterion2},
    {3, "anchor fixed point and Lloyd objective monotonicity", criterion3},
    {4, "mixup pixel equation, label weights, lambda=1 reduction", criterion4},
    {5, "schedule anchors: step milestones and cosine restart values",
     criterion5},
    {6, "mAP oracle equivalence over 200 random degradations", criterion6},
    {7, "NMS oracle equivalence over 1000 random instances", criterion7},
    {8, "decode hand case and cell-shift equivariance", criterion8},
    {9, "VOC round-trip identity and CLI byte determinism", criterion9},
    {10, "bench candidate counts and 608 decode under 50 ms", criterion10},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  std::string cli;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--criterion N] [--cli path]\n";
      return 2;
    }
  }

  int failed = 0;
  for (const auto& criterion : kCriteria) {
    if (only != 0 && criterion.id != only) continue;
    g_failures_in_criterion = 0;
    const auto start = std::chrono::steady_clock::now();
    criterion.run(cli);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool ok = g_failures_in_criterion == 0;
    failed += ok ? 0 : 1;
    std::printf("[%s] criterion %2d: %s (%.2fs)\n", ok ? "PASS" : "FAIL",
                criterion.id, criterion.description, secs);
  }
  return failed == 0 ? 0 : 1;
}
