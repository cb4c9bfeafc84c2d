// detkit: detection pipeline toolkit. One binary, one subcommand per
// pipeline stage; every run is deterministic in --seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "detkit/anchors.hpp"
#include "detkit/augment.hpp"
#include "detkit/decode.hpp"
#include "detkit/error.hpp"
#include "detkit/eval.hpp"
#include "detkit/harness.hpp"
#include "detkit/parallel.hpp"
#include "detkit/ppm.hpp"
#include "detkit/trainmath.hpp"
#include "detkit/voc.hpp"

namespace fs = std::filesystem;
using namespace detkit;

namespace {

// Tracks files created by the current subcommand and removes them unless
// the run commits, so failed invocations leave no partial outputs.
class OutputGuard {
 public:
  explicit OutputGuard(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }
  ~OutputGuard() {
    if (committed_) return;
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

  fs::path dir() const { return dir_; }

  void write_text(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InvalidInputError("cannot open for writing: " + p.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + p.string());
    written_.push_back(p);
  }

  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string categories_path;

  std::vector<std::string> categories() const {
    if (categories_path.empty()) return default_categories();
    std::ifstream in(categories_path);
    if (!in) throw InvalidInputError("cannot open: " + categories_path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) names.push_back(line);
    }
    if (names.empty()) {
      throw InvalidInputError("category table is empty: " + categories_path);
    }
    return names;
  }
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open: " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

const std::vector<std::string>& fold_subset(const FoldSplit& fold,
                                            const std::string& subset) {
  if (subset == "train") return fold.train_ids;
  if (subset == "val") return fold.val_ids;
  if (subset == "test") return fold.test_ids;
  throw InvalidInputError("subset must be train, val or test, got '" + subset +
                          "'");
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string manifest;
};

void run_stats(const GlobalOptions& global, const StatsArgs& args) {
  OutputGuard out(global.out_dir);
  const Dataset ds = load_dataset(args.manifest, global.categories());
  const StatsReport report = dataset_stats(ds);
  out.write_text("stats.csv", stats_to_csv(report));
  out.write_text("stats.txt", stats_to_table(report));
  std::cout << stats_to_table(report);
  out.commit();
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

struct SplitArgs {
  std::string manifest;
};

void run_split(const GlobalOptions& global, const SplitArgs& args) {
  OutputGuard out(global.out_dir);
  const Dataset ds = load_dataset(args.manifest, global.categories());
  const auto folds = kfold_split(ds, global.seed);
  for (const auto& fold : folds) {
    out.write_text("fold" + std::to_string(fold.fold) + ".json",
                   fold_to_json(fold));
  }
  std::cout << "wrote 5 folds for " << ds.size() << " images\n";
  out.commit();
}

// ---------------------------------------------------------------------------
// anchors
// ---------------------------------------------------------------------------

struct AnchorsArgs {
  std::string manifest;
  std::string fold;
  std::string subset = "train";
  int k = 9;
  double input_res = 640.0;
  int max_iter = 300;
  double tol = 1e-6;
};

void run_anchors(const GlobalOptions& global, const AnchorsArgs& args) {
  OutputGuard out(global.out_dir);
  const Dataset ds = load_dataset(args.manifest, global.categories());

  std::vector<BoxShape> shapes;
  if (args.fold.empty()) {
    shapes = dataset_shapes(ds, args.input_res);
  } else {
    const FoldSplit fold = fold_from_json(read_file(args.fold));
    const auto& ids = fold_subset(fold, args.subset);
    shapes = dataset_shapes(ds, args.input_res, &ids);
  }

  const KMeansResult result =
      kmeans_anchors(shapes, args.k, global.seed, args.max_iter, args.tol);
  out.write_text("anchors.csv",
                 anchors_to_csv(result.anchors, result.avg_iou));
  std::printf("%d anchors from %zu shapes, avg_iou %.4f, %d iterations\n",
              args.k, shapes.size(), result.avg_iou, result.iterations);
  out.commit();
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

struct AugmentArgs {
  std::string manifest;
  std::string fold;
  std::string subset = "train";
  double flip_prob = 0.5;
  double crop_prob = 0.5;
  double translate_prob = 0.5;
  double jitter_prob = 0.5;
  double mixup_prob = 0.5;
  double mixup_alpha = 1.5;
};

void run_augment(const GlobalOptions& global, const AugmentArgs& args) {
  OutputGuard out(global.out_dir);
  const auto categories = global.categories();
  const Dataset ds = load_dataset(args.manifest, categories);

  std::vector<std::string> ids;
  if (args.fold.empty()) {
    for (const auto& ann : ds.annotations) ids.push_back(ann.image_id);
  } else {
    const FoldSplit fold = fold_from_json(read_file(args.fold));
    ids = fold_subset(fold, args.subset);
  }
  if (ids.empty()) throw InvalidInputError("augment: no images selected");

  auto load_sample = [&](const std::string& id) {
    const ImageAnnotation* ann = ds.find(id);
    if (ann == nullptr) {
      throw InvalidInputError("augment: fold id '" + id +
                              "' is not in the manifest");
    }
    Sample s;
    s.image = load_image(ds, id);
    s.annotation = *ann;
    if (s.image.width != ann->width || s.image.height != ann->height) {
      throw InvalidInputError("augment: pixmap dims disagree with '" + id +
                              "'");
    }
    return s;
  };

  const Rng root(global.seed);
  std::string manifest_out;
  for (const auto& id : ids) {
    // Per-image stream keyed by id, so adding images does not reshuffle
    // the noise of existing ones.
    Rng rng = root.stream("augment").stream(id);
    Sample s = load_sample(id);

    // Fixed stage order: flip, crop, translate, jitter, mixup.
    if (rng.uniform() < args.flip_prob) s = horizontal_flip(s);
    if (rng.uniform() < args.crop_prob) s = random_crop(s, rng);
    if (rng.uniform() < args.translate_prob) s = random_translate(s, rng);
    if (rng.uniform() < args.jitter_prob) s = color_jitter(s, rng);
    if (rng.uniform() < args.mixup_prob && ids.size() > 1) {
      std::string partner_id = id;
      while (partner_id == id) {
        partner_id = ids[rng.uniform_index(ids.size())];
      }
      const double lambda = sample_mixup_lambda(args.mixup_alpha, rng);
      s = mixup(s, load_sample(partner_id), lambda).sample;
    }

    s.annotation.image_id = id;
    out.write_text(id + ".ppm", encode_ppm(s.image));
    out.write_text(id + ".xml", write_voc_xml(s.annotation, categories));
    manifest_out += id + "\t" + id + ".xml\t" + id + ".ppm\n";
  }
  out.write_text("manifest.tsv", manifest_out);
  std::cout << "augmented " << ids.size() << " images\n";
  out.commit();
}

// ---------------------------------------------------------------------------
// schedule dump
// ---------------------------------------------------------------------------

struct ScheduleArgs {
  std::string kind = "step";
  double base_lr = 1e-3;
  int epochs = 200;
  std::string milestones = "160,180";
  double gamma = 0.1;
  double eta_min = 0.0;
  double t0 = 0.0;
  double t_mult = 1.0;
  int warmup = 0;
};

ScheduleSpec to_spec(const ScheduleArgs& args) {
  ScheduleSpec spec;
  if (args.kind == "step") {
    spec.kind = ScheduleKind::step;
  } else if (args.kind == "cosine") {
    spec.kind = ScheduleKind::cosine;
  } else {
    throw InvalidInputError("schedule kind must be step or cosine, got '" +
                            args.kind + "'");
  }
  spec.base_lr = args.base_lr;
  spec.total_epochs = args.epochs;
  spec.milestones.clear();
  for (const auto& m : split_commas(args.milestones)) {
    spec.milestones.push_back(std::stoi(m));
  }
  spec.gamma = args.gamma;
  spec.eta_min = args.eta_min;
  spec.t0 = args.t0;
  spec.t_mult = args.t_mult;
  spec.warmup_epochs = args.warmup;
  spec.validate();
  return spec;
}

void run_schedule_dump(const GlobalOptions& global, const ScheduleArgs& args) {
  OutputGuard out(global.out_dir);
  out.write_text("schedule.csv", schedule_to_csv(to_spec(args)));
  std::cout << "wrote schedule.csv (" << args.epochs << " epochs)\n";
  out.commit();
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string tensors;
  std::string anchors;
  int input_res = 608;
  double score_thresh = 1e-8;
  double iou_thresh = 0.6;
  int max_dets = 100;
  int jobs = 1;
};

void run_decode(const GlobalOptions& global, const DecodeArgs& args) {
  OutputGuard out(global.out_dir);
  const AnchorSet anchors = args.anchors.empty()
                                ? default_anchors()
                                : anchors_from_csv(read_file(args.anchors));

  struct Entry {
    std::string id;
    int orig_w, orig_h;
    fs::path t8, t16, t32;
  };
  std::vector<Entry> entries;
  const fs::path base = fs::path(args.tensors).parent_path();
  std::istringstream lines(read_file(args.tensors));
  std::string line;
  long line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 6) {
      throw InvalidInputError(
          "tensor manifest line " + std::to_string(line_no) +
          ": expected image_id, orig_w, orig_h and three tensor paths");
    }
    entries.push_back(Entry{fields[0], std::stoi(fields[1]),
                            std::stoi(fields[2]), base / fields[3],
                            base / fields[4], base / fields[5]});
  }

  const DecodeConfig config{args.score_thresh, args.iou_thresh, args.max_dets};
  std::vector<std::vector<Detection>> per_image(entries.size());
  parallel_for(entries.size(), args.jobs, [&](std::size_t i) {
    const Entry& e = entries[i];
    const std::vector<HeadTensor> tensors{read_head_tensor(e.t8),
                                          read_head_tensor(e.t16),
                                          read_head_tensor(e.t32)};
    per_image[i] = decode_full(tensors, anchors, args.input_res, e.id,
                               e.orig_w, e.orig_h, config);
  });

  std::string jsonl;
  long total = 0;
  for (const auto& dets : per_image) {
    jsonl += detections_to_jsonl(dets);
    total += static_cast<long>(dets.size());
  }
  out.write_text("detections.jsonl", jsonl);
  std::cout << "decoded " << total << " detections from " << entries.size()
            << " images\n";
  out.commit();
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string gt_manifest;
  std::string dets;
  double iou = 0.5;
  std::string ap_mode = "continuous";
  std::string folds;  // comma-separated fold JSON paths
  std::uint64_t model_size_bytes = 0;
  double speed_ms = 0.0;
  int jobs = 1;
};

Dataset subset_dataset(const Dataset& ds, const std::vector<std::string>& ids) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  Dataset out;
  out.categories = ds.categories;
  for (const auto& ann : ds.annotations) {
    if (wanted.count(ann.image_id)) out.annotations.push_back(ann);
  }
  return out;
}

void run_eval(const GlobalOptions& global, const EvalArgs& args) {
  OutputGuard out(global.out_dir);
  const Dataset ds = load_dataset(args.gt_manifest, global.categories());
  const auto dets = detections_from_jsonl(read_file(args.dets));

  EvalConfig config;
  config.iou_thresh = args.iou;
  config.ap_mode = ap_mode_from_string(args.ap_mode);
  config.jobs = args.jobs;

  auto attach_report_fields = [&](EvalReport& report) {
    if (args.model_size_bytes > 0) {
      report.model_size_bytes = args.model_size_bytes;
    }
    if (args.speed_ms > 0.0) {
      report.latency =
          LatencyStats{args.speed_ms, args.speed_ms, args.speed_ms};
    }
  };

  if (args.folds.empty()) {
    EvalReport report = evaluate(ds, dets, config);
    attach_report_fields(report);
    out.write_text("report.json", report_to_json(report));
    out.write_text("report.csv", report_to_csv(report));
    std::printf("mAP %.2f over %ld detections / %ld ground truths\n",
                report.map_percent, report.total_detections, report.total_gt);
  } else {
    // Per-fold evaluation on each fold's test block, then aggregation.
    std::vector<EvalReport> fold_reports;
    for (const auto& path : split_commas(args.folds)) {
      const FoldSplit fold = fold_from_json(read_file(path));
      const Dataset fold_ds = subset_dataset(ds, fold.test_ids);
      std::set<std::string> wanted(fold.test_ids.begin(), fold.test_ids.end());
      std::vector<Detection> fold_dets;
      for (const auto& d : dets) {
        if (wanted.count(d.image_id)) fold_dets.push_back(d);
      }
      EvalReport report = evaluate(fold_ds, fold_dets, config);
      attach_report_fields(report);
      out.write_text("report_fold" + std::to_string(fold.fold) + ".json",
                     report_to_json(report));
      fold_reports.push_back(std::move(report));
    }
    EvalReport aggregate = cross_val_aggregate(fold_reports);
    attach_report_fields(aggregate);
    out.write_text("report.json", report_to_json(aggregate));
    out.write_text("report.csv", report_to_csv(aggregate));
    std::printf("aggregate mAP %.2f over %zu folds\n", aggregate.map_percent,
                fold_reports.size());
  }
  out.commit();
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
  std::string baseline;
  std::string runs;
};

void run_ablate(const GlobalOptions& global, const AblateArgs& args) {
  OutputGuard out(global.out_dir);
  auto stem = [](const std::string& path) {
    return fs::path(path).stem().string();
  };
  std::vector<std::pair<std::string, EvalReport>> runs;
  runs.emplace_back(stem(args.baseline),
                    report_from_json(read_file(args.baseline)));
  for (const auto& path : split_commas(args.runs)) {
    runs.emplace_back(stem(path), report_from_json(read_file(path)));
  }
  const AblationTable table = ablation_report(runs, stem(args.baseline));
  out.write_text("ablation.csv", ablation_to_csv(table));
  out.write_text("ablation.txt", ablation_to_text(table));
  std::cout << ablation_to_text(table);
  out.commit();
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  int n = 16;
  int width = 640;
  int height = 640;
  long total_boxes = 0;
  std::string weights;
  bool degrade = false;
  double miss_rate = 0.1;
  double fp_rate = 0.5;
  double loc_noise = 2.0;
  double match_iou = 0.5;
};

void run_synth(const GlobalOptions& global, const SynthArgs& args) {
  OutputGuard out(global.out_dir);
  SyntheticConfig config;
  config.seed = global.seed;
  config.n_images = args.n;
  config.width = args.width;
  config.height = args.height;
  config.total_boxes = args.total_boxes;
  config.categories = global.categories();
  for (const auto& w : split_commas(args.weights)) {
    config.category_weights.push_back(std::stod(w));
  }

  const SyntheticDataset synth = gen_synthetic_dataset(config);
  std::string manifest;
  for (std::size_t i = 0; i < synth.dataset.annotations.size(); ++i) {
    const auto& ann = synth.dataset.annotations[i];
    out.write_text(ann.image_id + ".ppm", encode_ppm(synth.images[i]));
    out.write_text(ann.image_id + ".xml",
                   write_voc_xml(ann, config.categories));
    manifest += ann.image_id + "\t" + ann.image_id + ".xml\t" + ann.image_id +
                ".ppm\n";
  }
  out.write_text("manifest.tsv", manifest);

  if (args.degrade) {
    DegradeSpec spec;
    spec.miss_rate = args.miss_rate;
    spec.fp_rate = args.fp_rate;
    spec.loc_noise = args.loc_noise;
    spec.seed = global.seed;
    const DegradeResult result =
        degrade_to_detections(synth.dataset, spec, args.match_iou);
    out.write_text("detections.jsonl",
                   detections_to_jsonl(result.detections));

    nlohmann::ordered_json oracle;
    oracle["match_iou"] = args.match_iou;
    oracle["map_continuous"] = result.oracle.map_continuous;
    oracle["map_elevenpoint"] = result.oracle.map_elevenpoint;
    oracle["per_category"] = nlohmann::ordered_json::array();
    for (const auto& c : result.oracle.per_category) {
      oracle["per_category"].push_back({{"name", c.name},
                                        {"defined", c.defined},
                                        {"ap_continuous", c.ap_continuous},
                                        {"ap_elevenpoint", c.ap_elevenpoint}});
    }
    out.write_text("oracle.json", oracle.dump(2) + "\n");
  }

  std::cout << "generated " << args.n << " images\n";
  out.commit();
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string resolutions = "320,352,384,416,448,480,512,544,576,608";
  int trials = 100;
  int categories_count = 6;
  std::string anchors;
  double score_thresh = 1e-8;
  double iou_thresh = 0.6;
  int activated_per_scale = 20;
};

void run_bench(const GlobalOptions& global, const BenchArgs& args) {
  OutputGuard out(global.out_dir);
  const AnchorSet anchors = args.anchors.empty()
                                ? default_anchors()
                                : anchors_from_csv(read_file(args.anchors));

  nlohmann::ordered_json j;
  j["trials"] = args.trials;
  j["seed"] = global.seed;
  j["score_thresh"] = args.score_thresh;
  j["iou_thresh"] = args.iou_thresh;
  j["per_resolution"] = nlohmann::ordered_json::array();

  std::printf("%6s %12s %10s %10s %10s %10s\n", "res", "cells", "dets",
              "mean_ms", "median_ms", "p95_ms");
  for (const auto& r : split_commas(args.resolutions)) {
    BenchConfig config;
    config.resolution = std::stoi(r);
    config.num_categories = args.categories_count;
    config.trials = args.trials;
    config.seed = global.seed;
    config.score_thresh = args.score_thresh;
    config.iou_thresh = args.iou_thresh;
    config.activated_per_scale = args.activated_per_scale;

    const BenchResult result = time_decode(config, anchors);
    // Wall-clock numbers go to stdout only; the file stays byte-stable
    // across runs.
    std::printf("%6d %12ld %10.1f %10.3f %10.3f %10.3f\n", result.resolution,
                result.cells, result.mean_detections, result.mean_ms,
                result.median_ms, result.p95_ms);
    j["per_resolution"].push_back(
        {{"resolution", result.resolution},
         {"cells", result.cells},
         {"mean_detections", result.mean_detections}});
  }
  std::printf(
      "note: decode+NMS only; backbone inference is excluded, so these "
      "numbers are not comparable with full-model speed reports.\n");
  out.write_text("bench.json", j.dump(2) + "\n");
  out.commit();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "detkit: detection pipeline toolkit (VOC annotations, anchor k-means, "
      "augmentation, LR schedules, head decoding, NMS, VOC mAP)"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOptions global;
  app.add_option("--seed", global.seed,
                 "root RNG seed; all stages derive from it")
      ->capture_default_str();
  app.add_option("--out", global.out_dir, "output directory")
      ->envname("DETKIT_OUT_DIR")
      ->capture_default_str();
  app.add_option("--categories", global.categories_path,
                 "category name table, one per line (default grade0..grade5)");

  StatsArgs stats_args;
  auto* stats_cmd =
      app.add_subcommand("stats", "dataset statistics (boxes, areas) as CSV");
  stats_cmd->add_option("--manifest", stats_args.manifest,
                        "dataset manifest: image_id<TAB>xml[<TAB>ppm]")
      ->required();

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand(
      "split", "reproducible 5-fold 70/10/20 split as fold JSON files");
  split_cmd->add_option("--manifest", split_args.manifest, "dataset manifest")
      ->required();

  AnchorsArgs anchors_args;
  auto* anchors_cmd = app.add_subcommand(
      "anchors", "IoU k-means over ground-truth shapes; emits w,h CSV");
  anchors_cmd
      ->add_option("--manifest", anchors_args.manifest, "dataset manifest")
      ->required();
  anchors_cmd->add_option("--fold", anchors_args.fold,
                          "fold JSON; clusters on one subset only");
  anchors_cmd
      ->add_option("--subset", anchors_args.subset, "fold subset to cluster on")
      ->capture_default_str();
  anchors_cmd->add_option("--k", anchors_args.k, "number of anchors")
      ->capture_default_str();
  anchors_cmd
      ->add_option("--input-res", anchors_args.input_res,
                   "square resolution shapes are rescaled to")
      ->capture_default_str();
  anchors_cmd
      ->add_option("--max-iter", anchors_args.max_iter, "Lloyd iterations")
      ->capture_default_str();
  anchors_cmd->add_option("--tol", anchors_args.tol, "centroid movement stop")
      ->capture_default_str();

  AugmentArgs augment_args;
  auto* augment_cmd = app.add_subcommand(
      "augment",
      "write augmented PPM+XML pairs (stage order flip, crop, translate, "
      "jitter, mixup)");
  augment_cmd
      ->add_option("--manifest", augment_args.manifest,
                   "dataset manifest with ppm paths")
      ->required();
  augment_cmd->add_option("--fold", augment_args.fold, "fold JSON");
  augment_cmd->add_option("--subset", augment_args.subset, "fold subset")
      ->capture_default_str();
  augment_cmd
      ->add_option("--flip-prob", augment_args.flip_prob, "flip probability")
      ->capture_default_str();
  augment_cmd
      ->add_option("--crop-prob", augment_args.crop_prob, "crop probability")
      ->capture_default_str();
  augment_cmd
      ->add_option("--translate-prob", augment_args.translate_prob,
                   "translate probability")
      ->capture_default_str();
  augment_cmd
      ->add_option("--jitter-prob", augment_args.jitter_prob,
                   "color jitter probability")
      ->capture_default_str();
  augment_cmd
      ->add_option("--mixup-prob", augment_args.mixup_prob,
                   "mixup probability per image (Beta(1.5,1.5) lambda)")
      ->capture_default_str();
  augment_cmd
      ->add_option("--mixup-alpha", augment_args.mixup_alpha,
                   "Beta(alpha,alpha) mixing parameter")
      ->capture_default_str();

  ScheduleArgs schedule_args;
  auto* schedule_cmd =
      app.add_subcommand("schedule", "learning-rate schedule tools");
  schedule_cmd->require_subcommand(1);
  auto* dump_cmd =
      schedule_cmd->add_subcommand("dump", "emit epoch,lr CSV for a schedule");
  dump_cmd->add_option("--kind", schedule_args.kind, "step or cosine")
      ->capture_default_str();
  dump_cmd->add_option("--base-lr", schedule_args.base_lr, "peak learning rate")
      ->capture_default_str();
  dump_cmd->add_option("--epochs", schedule_args.epochs, "total epochs")
      ->capture_default_str();
  dump_cmd
      ->add_option("--milestones", schedule_args.milestones,
                   "step drop epochs, comma separated")
      ->capture_default_str();
  dump_cmd->add_option("--gamma", schedule_args.gamma, "step decay ratio")
      ->capture_default_str();
  dump_cmd->add_option("--eta-min", schedule_args.eta_min, "cosine floor")
      ->capture_default_str();
  dump_cmd
      ->add_option("--t0", schedule_args.t0,
                   "first cosine cycle length (0 = all epochs)")
      ->capture_default_str();
  dump_cmd->add_option("--tmult", schedule_args.t_mult, "cycle growth factor")
      ->capture_default_str();
  dump_cmd->add_option("--warmup", schedule_args.warmup, "linear warmup epochs")
      ->capture_default_str();

  DecodeArgs decode_args;
  auto* decode_cmd = app.add_subcommand(
      "decode", "decode three-scale head tensor files into detections JSONL");
  decode_cmd
      ->add_option("--tensors", decode_args.tensors,
                   "manifest: image_id, orig_w, orig_h, t8, t16, t32 (tabs)")
      ->required();
  decode_cmd->add_option("--anchors", decode_args.anchors,
                         "anchors CSV (default: stock nine priors)");
  decode_cmd
      ->add_option("--input-res", decode_args.input_res,
                   "network input resolution")
      ->capture_default_str();
  decode_cmd
      ->add_option("--score-thresh", decode_args.score_thresh,
                   "candidate score threshold")
      ->capture_default_str();
  decode_cmd
      ->add_option("--iou-thresh", decode_args.iou_thresh, "NMS IoU threshold")
      ->capture_default_str();
  decode_cmd->add_option("--max-dets", decode_args.max_dets, "cap per image")
      ->capture_default_str();
  decode_cmd->add_option("--jobs", decode_args.jobs, "worker threads")
      ->capture_default_str();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand(
      "eval", "VOC mAP of detections JSONL against ground truth");
  eval_cmd->add_option("--gt", eval_args.gt_manifest, "ground-truth manifest")
      ->required();
  eval_cmd->add_option("--dets", eval_args.dets, "detections JSONL")
      ->required();
  eval_cmd->add_option("--iou", eval_args.iou, "matching IoU threshold")
      ->capture_default_str();
  eval_cmd
      ->add_option("--ap-mode", eval_args.ap_mode,
                   "continuous (area) or elevenpoint")
      ->capture_default_str();
  eval_cmd->add_option("--folds", eval_args.folds,
                       "comma-separated fold JSONs; evaluates each test block "
                       "and aggregates");
  eval_cmd->add_option("--model-size-bytes", eval_args.model_size_bytes,
                       "reported model size field");
  eval_cmd->add_option("--speed-ms", eval_args.speed_ms,
                       "reported per-image inference time field");
  eval_cmd->add_option("--jobs", eval_args.jobs, "worker threads")
      ->capture_default_str();

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand(
      "ablate", "delta table over named run reports (run, mAP, Delta, APs)");
  ablate_cmd
      ->add_option("--baseline", ablate_args.baseline, "baseline report JSON")
      ->required();
  ablate_cmd
      ->add_option("--runs", ablate_args.runs,
                   "comma-separated run report JSONs")
      ->required();

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate a synthetic dataset (PPM + VOC XML + manifest)");
  synth_cmd->add_option("--n", synth_args.n, "image count")
      ->capture_default_str();
  synth_cmd->add_option("--width", synth_args.width, "image width")
      ->capture_default_str();
  synth_cmd->add_option("--height", synth_args.height, "image height")
      ->capture_default_str();
  synth_cmd
      ->add_option("--total-boxes", synth_args.total_boxes,
                   "exact ground-truth total (0 = 1-3 per image)")
      ->capture_default_str();
  synth_cmd->add_option("--weights", synth_args.weights,
                        "per-category sampling weights, comma separated");
  synth_cmd->add_flag("--degrade", synth_args.degrade,
                      "also emit degraded detections plus oracle AP sidecar");
  synth_cmd
      ->add_option("--miss-rate", synth_args.miss_rate,
                   "ground-truth drop probability")
      ->capture_default_str();
  synth_cmd
      ->add_option("--fp-rate", synth_args.fp_rate,
                   "expected false positives per image")
      ->capture_default_str();
  synth_cmd
      ->add_option("--loc-noise", synth_args.loc_noise,
                   "corner jitter std (pixels)")
      ->capture_default_str();
  synth_cmd
      ->add_option("--match-iou", synth_args.match_iou,
                   "oracle matching threshold")
      ->capture_default_str();

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand(
      "bench", "time decode_full+NMS on synthetic head tensors");
  bench_cmd
      ->add_option("--resolutions", bench_args.resolutions,
                   "input resolutions, comma separated")
      ->capture_default_str();
  bench_cmd->add_option("--trials", bench_args.trials, "timing repetitions")
      ->capture_default_str();
  bench_cmd
      ->add_option("--categories-count", bench_args.categories_count,
                   "category count of the synthetic head")
      ->capture_default_str();
  bench_cmd->add_option("--anchors", bench_args.anchors,
                        "anchors CSV (default: stock nine priors)");
  bench_cmd
      ->add_option("--score-thresh", bench_args.score_thresh,
                   "candidate score threshold")
      ->capture_default_str();
  bench_cmd
      ->add_option("--iou-thresh", bench_args.iou_thresh, "NMS IoU threshold")
      ->capture_default_str();
  bench_cmd
      ->add_option("--activated-per-scale", bench_args.activated_per_scale,
                   "strong activations planted per scale")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (stats_cmd->parsed()) run_stats(global, stats_args);
    if (split_cmd->parsed()) run_split(global, split_args);
    if (anchors_cmd->parsed()) run_anchors(global, anchors_args);
    if (augment_cmd->parsed()) run_augment(global, augment_args);
    if (schedule_cmd->parsed()) run_schedule_dump(global, schedule_args);
    if (decode_cmd->parsed()) run_decode(global, decode_args);
    if (eval_cmd->parsed()) run_eval(global, eval_args);
    if (ablate_cmd->parsed()) run_ablate(global, ablate_args);
    if (synth_cmd->parsed()) run_synth(global, synth_args);
    if (bench_cmd->parsed()) run_bench(global, bench_args);
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
