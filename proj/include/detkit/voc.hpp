#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "detkit/geometry.hpp"

namespace detkit {

// One labelled region. `weight` is 1 for plain annotations and in (0,1]
// for mixup-merged labels; evaluation ignores it. `difficult`/`truncated`
// are carried through round trips but otherwise unused.
struct GroundTruthObject {
  int category = 0;
  BBox box;
  double weight = 1.0;
  int difficult = 0;
  int truncated = 0;

  bool operator==(const GroundTruthObject&) const = default;
};

struct ImageAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<GroundTruthObject> objects;

  // An annotation with no objects is only legal when explicitly degenerate.
  bool degenerate() const { return objects.empty(); }

  bool operator==(const ImageAnnotation&) const = default;
};

struct Dataset {
  std::vector<std::string> categories;
  std::vector<ImageAnnotation> annotations;
  // image_id -> pixmap path; pixels are loaded on demand.
  std::unordered_map<std::string, std::string> image_paths;

  std::size_t size() const { return annotations.size(); }
  const ImageAnnotation* find(std::string_view image_id) const;
};

// grade0 .. grade5.
const std::vector<std::string>& default_categories();

// Parses one VOC annotation document. 1-based integer corners become
// continuous coordinates via xmin-1, ymin-1 (xmax, ymax unchanged); boxes
// are clipped to the image and must keep positive extent. Category names
// must match the table exactly.
ImageAnnotation parse_voc_xml(
    std::string_view xml,
    const std::vector<std::string>& categories = default_categories());

// Inverse of the parser: +1 on xmin/ymin, every corner rounded to the
// nearest integer. Weight is written (as an extra <weight> child) only
// when it differs from 1.
std::string write_voc_xml(
    const ImageAnnotation& ann,
    const std::vector<std::string>& categories = default_categories());

// Manifest: one `image_id<TAB>xml_path[<TAB>ppm_path]` per line, paths
// relative to the manifest. All failures are aggregated into one LoadError.
Dataset load_dataset(
    const std::filesystem::path& manifest,
    const std::vector<std::string>& categories = default_categories());

// Loads the pixmap registered for an image id.
Image load_image(const Dataset& ds, const std::string& image_id);

struct CategoryStats {
  std::string name;
  double mean_boxes = 0.0;       // mean count of this category over all images
  double mean_categories = 0.0;  // mean distinct categories, images containing it
  double area_fraction = 0.0;    // mean labelled-area share, images containing it
};

struct StatsReport {
  std::vector<CategoryStats> per_category;
  long image_count = 0;
  long ground_truth_count = 0;
};

StatsReport dataset_stats(const Dataset& ds);
std::string stats_to_csv(const StatsReport& report);
std::string stats_to_table(const StatsReport& report);

struct FoldSplit {
  int fold = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

// Shuffles ids once with the seeded generator, cuts 5 contiguous test
// blocks of floor(N/5) ids (remainder spread one per fold from fold 0),
// then splits the rest with train = round(0.7*N) capped to fit.
std::array<FoldSplit, 5> kfold_split(const Dataset& ds, std::uint64_t seed);

std::string fold_to_json(const FoldSplit& fold);
FoldSplit fold_from_json(std::string_view json_text);

}  // namespace detkit
