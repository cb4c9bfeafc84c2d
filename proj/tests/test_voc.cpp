#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "detkit/error.hpp"
#include "detkit/rng.hpp"
#include "detkit/voc.hpp"

using namespace detkit;
namespace fs = std::filesystem;

namespace {

const char* kSingleObjectXml = R"(<?xml version="1.0"?>
<annotation>
  <filename>foot_001</filename>
  <size><width>640</width><height>640</height><depth>3</depth></size>
  <object>
    <name>grade3</name>
    <bndbox><xmin>1</xmin><ymin>1</ymin><xmax>100</xmax><ymax>200</ymax></bndbox>
  </object>
</annotation>)";

ImageAnnotation random_annotation(Rng& rng, int index) {
  ImageAnnotation ann;
  ann.image_id = "img_" + std::to_string(index);
  ann.width = 64 + static_cast<int>(rng.uniform_index(600));
  ann.height = 64 + static_cast<int>(rng.uniform_index(600));
  const int n_objects = static_cast<int>(rng.uniform_index(5));
  for (int i = 0; i < n_objects; ++i) {
    GroundTruthObject obj;
    obj.category = static_cast<int>(rng.uniform_index(6));
    // Integer-valued coordinates survive the VOC integer corner format.
    const int x1 = static_cast<int>(rng.uniform_index(ann.width - 2));
    const int y1 = static_cast<int>(rng.uniform_index(ann.height - 2));
    const int x2 = x1 + 1 + static_cast<int>(rng.uniform_index(ann.width - x1 - 1));
    const int y2 = y1 + 1 + static_cast<int>(rng.uniform_index(ann.height - y1 - 1));
    obj.box = BBox{static_cast<double>(x1), static_cast<double>(y1),
                   static_cast<double>(x2), static_cast<double>(y2)};
    if (rng.uniform() < 0.3) obj.weight = rng.uniform(0.05, 1.0);
    obj.difficult = rng.uniform() < 0.1 ? 1 : 0;
    obj.truncated = rng.uniform() < 0.1 ? 1 : 0;
    ann.objects.push_back(obj);
  }
  return ann;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("detkit_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(path / name, std::ios::binary);
    out << content;
  }
};

}  // namespace

TEST_CASE("parse_voc_xml applies the 1-based corner conversion") {
  const ImageAnnotation ann = parse_voc_xml(kSingleObjectXml);
  CHECK(ann.image_id == "foot_001");
  CHECK(ann.width == 640);
  CHECK(ann.height == 640);
  REQUIRE(ann.objects.size() == 1);
  CHECK(ann.objects[0].category == 3);
  CHECK(ann.objects[0].box == BBox{0, 0, 100, 200});
  CHECK(ann.objects[0].weight == 1.0);
  CHECK_FALSE(ann.degenerate());
}

TEST_CASE("parse_voc_xml flags empty annotations as degenerate") {
  const ImageAnnotation ann = parse_voc_xml(
      "<annotation><size><width>64</width><height>48</height></size>"
      "</annotation>");
  CHECK(ann.degenerate());
  CHECK(ann.width == 64);
}

TEST_CASE("parse_voc_xml rejects unknown categories by name") {
  const std::string xml =
      "<annotation><size><width>64</width><height>64</height></size>"
      "<object><name>grade9</name>"
      "<bndbox><xmin>1</xmin><ymin>1</ymin><xmax>5</xmax><ymax>5</ymax>"
      "</bndbox></object></annotation>";
  CHECK_THROWS_WITH_AS(parse_voc_xml(xml),
                       doctest::Contains("grade9"), InvalidInputError);
}

TEST_CASE("parse_voc_xml reports malformed xml with a byte offset") {
  try {
    parse_voc_xml("<annotation><size></annotation>");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() > 0);
  }
}

TEST_CASE("parse_voc_xml rejects non-positive extents") {
  const std::string xml =
      "<annotation><size><width>64</width><height>64</height></size>"
      "<object><name>grade0</name>"
      "<bndbox><xmin>5</xmin><ymin>1</ymin><xmax>4</xmax><ymax>5</ymax>"
      "</bndbox></object></annotation>";
  CHECK_THROWS_AS(parse_voc_xml(xml), InvalidInputError);
}

TEST_CASE("parse clips boxes that overhang the image") {
  const std::string xml =
      "<annotation><size><width>64</width><height>64</height></size>"
      "<object><name>grade0</name>"
      "<bndbox><xmin>60</xmin><ymin>60</ymin><xmax>99</xmax><ymax>99</ymax>"
      "</bndbox></object></annotation>";
  const ImageAnnotation ann = parse_voc_xml(xml);
  CHECK(ann.objects[0].box == BBox{59, 59, 64, 64});
}

TEST_CASE("write_voc_xml emits zero object nodes for degenerate annotations") {
  ImageAnnotation ann;
  ann.image_id = "empty";
  ann.width = 32;
  ann.height = 32;
  const std::string xml = write_voc_xml(ann);
  CHECK(xml.find("<object>") == std::string::npos);
  CHECK(parse_voc_xml(xml) == ann);
}

TEST_CASE("write_voc_xml rounds non-integer coordinates to integers") {
  ImageAnnotation ann;
  ann.image_id = "fractional";
  ann.width = 100;
  ann.height = 100;
  GroundTruthObject obj;
  obj.category = 1;
  obj.box = BBox{1.4, 2.6, 50.2, 60.8};
  ann.objects.push_back(obj);
  const ImageAnnotation reparsed = parse_voc_xml(write_voc_xml(ann));
  CHECK(reparsed.objects[0].box == BBox{1, 3, 50, 61});
}

TEST_CASE("parser and writer round trip on random annotations") {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const ImageAnnotation ann = random_annotation(rng, i);
    const ImageAnnotation once = parse_voc_xml(write_voc_xml(ann));
    CHECK(once == ann);
    CHECK(parse_voc_xml(write_voc_xml(once)) == once);
  }
}

TEST_CASE("load_dataset reads a manifest with lazy pixmap paths") {
  TempDir tmp;
  tmp.write("a.xml", kSingleObjectXml);
  tmp.write("b.xml",
            "<annotation><size><width>32</width><height>32</height></size>"
            "</annotation>");
  tmp.write("c.xml", kSingleObjectXml);
  tmp.write("manifest.tsv", "a\ta.xml\nb\tb.xml\nc\tc.xml\n");
  const Dataset ds = load_dataset(tmp.path / "manifest.tsv");
  CHECK(ds.size() == 3);
  CHECK(ds.annotations[0].image_id == "a");  // manifest id wins
  CHECK(ds.find("b") != nullptr);
  CHECK(ds.image_paths.empty());
}

TEST_CASE("load_dataset aggregates every failure") {
  TempDir tmp;
  tmp.write("a.xml", kSingleObjectXml);
  tmp.write("bad.xml", "<annotation><size>");
  tmp.write("manifest.tsv",
            "a\ta.xml\na\ta.xml\nb\tmissing.xml\nc\tbad.xml\nd\ta.xml\tno.ppm\n");
  try {
    load_dataset(tmp.path / "manifest.tsv");
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    REQUIRE(e.failures().size() == 4);
    CHECK(e.failures()[0].find("duplicate image id 'a'") != std::string::npos);
  }
}

TEST_CASE("load_dataset accepts an empty manifest") {
  TempDir tmp;
  tmp.write("manifest.tsv", "");
  const Dataset ds = load_dataset(tmp.path / "manifest.tsv");
  CHECK(ds.size() == 0);
  const StatsReport report = dataset_stats(ds);
  CHECK(report.image_count == 0);
  CHECK(report.ground_truth_count == 0);
  for (const auto& cs : report.per_category) {
    CHECK(cs.mean_boxes == 0.0);
    CHECK(cs.area_fraction == 0.0);
  }
}

TEST_CASE("dataset_stats single image hand case") {
  Dataset ds;
  ds.categories = default_categories();
  ImageAnnotation ann;
  ann.image_id = "one";
  ann.width = 100;
  ann.height = 100;
  GroundTruthObject obj;
  obj.category = 0;
  obj.box = BBox{0, 0, 50, 50};
  ann.objects.push_back(obj);
  ds.annotations.push_back(ann);

  const StatsReport report = dataset_stats(ds);
  CHECK(report.per_category[0].mean_boxes == 1.0);
  CHECK(report.per_category[0].area_fraction == 0.25);
  CHECK(report.per_category[0].mean_categories == 1.0);
  CHECK(report.per_category[1].mean_boxes == 0.0);
  CHECK(report.ground_truth_count == 1);
}

TEST_CASE("dataset_stats totals on a 2688-image synthetic layout") {
  // 600 images with two boxes, 2088 with one: 3288 ground truths.
  Dataset ds;
  ds.categories = default_categories();
  for (int i = 0; i < 2688; ++i) {
    ImageAnnotation ann;
    ann.image_id = "img_" + std::to_string(i);
    ann.width = 640;
    ann.height = 640;
    const int boxes = i < 600 ? 2 : 1;
    for (int b = 0; b < boxes; ++b) {
      GroundTruthObject obj;
      obj.category = (i + b) % 6;
      obj.box = BBox{0, 0, 64.0 + b, 64.0};
      ann.objects.push_back(obj);
    }
    ds.annotations.push_back(std::move(ann));
  }
  const StatsReport report = dataset_stats(ds);
  CHECK(report.image_count == 2688);
  CHECK(report.ground_truth_count == 3288);
}

TEST_CASE("kfold_split reproduces the 2688 fold sizes") {
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

  std::multiset<std::size_t> test_sizes;
  for (const auto& f : folds) test_sizes.insert(f.test_ids.size());
  CHECK(test_sizes == std::multiset<std::size_t>{538, 538, 538, 537, 537});

  CHECK(folds[0].test_ids.size() == 538);
  CHECK(folds[0].train_ids.size() == 1882);
  CHECK(folds[0].val_ids.size() == 268);

  // The five test blocks partition the ids exactly.
  std::set<std::string> all_test;
  for (const auto& f : folds) {
    for (const auto& id : f.test_ids) CHECK(all_test.insert(id).second);
  }
  CHECK(all_test.size() == 2688);

  // Within each fold the three lists are disjoint and complete.
  for (const auto& f : folds) {
    std::set<std::string> seen;
    for (const auto& id : f.train_ids) CHECK(seen.insert(id).second);
    for (const auto& id : f.val_ids) CHECK(seen.insert(id).second);
    for (const auto& id : f.test_ids) CHECK(seen.insert(id).second);
    CHECK(seen.size() == 2688);
  }
}

TEST_CASE("kfold_split smallest case and determinism") {
  Dataset ds;
  ds.categories = default_categories();
  for (int i = 0; i < 5; ++i) {
    ImageAnnotation ann;
    ann.image_id = "i" + std::to_string(i);
    ann.width = 8;
    ann.height = 8;
    ds.annotations.push_back(std::move(ann));
  }
  const auto folds = kfold_split(ds, 3);
  for (const auto& f : folds) {
    CHECK(f.test_ids.size() == 1);
    CHECK(f.train_ids.size() == 4);  // round(0.7*5) = 4, val empty
    CHECK(f.val_ids.empty());
  }
  const auto again = kfold_split(ds, 3);
  for (int f = 0; f < 5; ++f) {
    CHECK(folds[f].train_ids == again[f].train_ids);
    CHECK(folds[f].test_ids == again[f].test_ids);
  }

  Dataset tiny;
  tiny.categories = default_categories();
  ImageAnnotation ann;
  ann.image_id = "only";
  ann.width = 8;
  ann.height = 8;
  tiny.annotations.push_back(ann);
  CHECK_THROWS_AS(kfold_split(tiny, 0), InvalidInputError);
}

TEST_CASE("fold json round trip") {
  FoldSplit fold;
  fold.fold = 2;
  fold.train_ids = {"a", "b"};
  fold.val_ids = {"c"};
  fold.test_ids = {"d", "e"};
  const FoldSplit parsed = fold_from_json(fold_to_json(fold));
  CHECK(parsed.fold == 2);
  CHECK(parsed.train_ids == fold.train_ids);
  CHECK(parsed.val_ids == fold.val_ids);
  CHECK(parsed.test_ids == fold.test_ids);
}

TEST_CASE("stats csv has the documented header") {
  Dataset ds;
  ds.categories = default_categories();
  const std::string csv = stats_to_csv(dataset_stats(ds));
  CHECK(csv.rfind("category,mean_boxes,mean_categories,area_fraction\n", 0) ==
        0);
}
