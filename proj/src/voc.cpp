#include "detkit/voc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "detkit/error.hpp"
#include "detkit/ppm.hpp"
#include "detkit/rng.hpp"
#include "detkit/xml.hpp"

namespace detkit {

namespace {

double parse_number(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw InvalidInputError("voc: bad numeric value for " + what + ": '" +
                            text + "'");
  }
  return value;
}

int parse_int(const std::string& text, const std::string& what) {
  const double v = parse_number(text, what);
  if (v != std::floor(v)) {
    throw InvalidInputError("voc: expected integer for " + what + ": '" +
                            text + "'");
  }
  return static_cast<int>(v);
}

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

int resolve_category(const std::string& name,
                     const std::vector<std::string>& categories) {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == name) return static_cast<int>(i);
  }
  throw InvalidInputError("voc: unknown category name '" + name + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

}  // namespace

const ImageAnnotation* Dataset::find(std::string_view image_id) const {
  for (const auto& ann : annotations) {
    if (ann.image_id == image_id) return &ann;
  }
  return nullptr;
}

const std::vector<std::string>& default_categories() {
  static const std::vector<std::string> names = {"grade0", "grade1", "grade2",
                                                 "grade3", "grade4", "grade5"};
  return names;
}

ImageAnnotation parse_voc_xml(std::string_view xml,
                              const std::vector<std::string>& categories) {
  const XmlNode root = parse_xml(xml);
  if (root.name != "annotation") {
    throw InvalidInputError("voc: root element must be <annotation>, got <" +
                            root.name + ">");
  }

  ImageAnnotation ann;
  if (const XmlNode* fn = root.child("filename")) ann.image_id = fn->text;

  const XmlNode* size = root.child("size");
  if (size == nullptr) {
    throw InvalidInputError("voc: <annotation> is missing <size>");
  }
  ann.width = parse_int(size->child_text("width"), "size/width");
  ann.height = parse_int(size->child_text("height"), "size/height");
  if (ann.width < 1 || ann.height < 1) {
    throw InvalidInputError("voc: image dimensions must be >= 1");
  }

  for (const auto& node : root.children) {
    if (node.name != "object") continue;
    GroundTruthObject obj;
    obj.category = resolve_category(node.child_text("name"), categories);

    const XmlNode* bnd = node.child("bndbox");
    if (bnd == nullptr) {
      throw InvalidInputError("voc: <object> is missing <bndbox>");
    }
    // VOC corners are 1-based; internal coordinates are 0-based continuous.
    BBox box{parse_number(bnd->child_text("xmin"), "bndbox/xmin") - 1.0,
             parse_number(bnd->child_text("ymin"), "bndbox/ymin") - 1.0,
             parse_number(bnd->child_text("xmax"), "bndbox/xmax"),
             parse_number(bnd->child_text("ymax"), "bndbox/ymax")};
    if (!(box.xmin < box.xmax) || !(box.ymin < box.ymax)) {
      throw InvalidInputError(
          "voc: box has non-positive extent after conversion in '" +
          ann.image_id + "'");
    }
    const auto clipped = clip_box(box, ann.width, ann.height);
    if (!clipped) {
      throw InvalidInputError("voc: box lies outside the image in '" +
                              ann.image_id + "'");
    }
    obj.box = *clipped;

    if (const XmlNode* w = node.child("weight")) {
      obj.weight = parse_number(w->text, "object/weight");
      if (!(obj.weight > 0.0) || obj.weight > 1.0) {
        throw InvalidInputError("voc: weight must be in (0,1], got " +
                                w->text);
      }
    }
    if (const XmlNode* d = node.child("difficult")) {
      obj.difficult = parse_int(d->text, "object/difficult");
    }
    if (const XmlNode* t = node.child("truncated")) {
      obj.truncated = parse_int(t->text, "object/truncated");
    }
    ann.objects.push_back(obj);
  }
  return ann;
}

std::string write_voc_xml(const ImageAnnotation& ann,
                          const std::vector<std::string>& categories) {
  std::ostringstream out;
  out << "<annotation>\n";
  out << "  <filename>" << xml_escape(ann.image_id) << "</filename>\n";
  out << "  <size>\n";
  out << "    <width>" << ann.width << "</width>\n";
  out << "    <height>" << ann.height << "</height>\n";
  out << "    <depth>3</depth>\n";
  out << "  </size>\n";
  for (const auto& obj : ann.objects) {
    if (obj.category < 0 ||
        obj.category >= static_cast<int>(categories.size())) {
      throw InvalidInputError("voc: category index " +
                              std::to_string(obj.category) +
                              " outside the name table");
    }
    out << "  <object>\n";
    out << "    <name>" << xml_escape(categories[obj.category]) << "</name>\n";
    out << "    <truncated>" << obj.truncated << "</truncated>\n";
    out << "    <difficult>" << obj.difficult << "</difficult>\n";
    out << "    <bndbox>\n";
    out << "      <xmin>" << std::llround(obj.box.xmin + 1.0) << "</xmin>\n";
    out << "      <ymin>" << std::llround(obj.box.ymin + 1.0) << "</ymin>\n";
    out << "      <xmax>" << std::llround(obj.box.xmax) << "</xmax>\n";
    out << "      <ymax>" << std::llround(obj.box.ymax) << "</ymax>\n";
    out << "    </bndbox>\n";
    if (obj.weight != 1.0) {
      out << "    <weight>" << format_double(obj.weight) << "</weight>\n";
    }
    out << "  </object>\n";
  }
  out << "</annotation>\n";
  return out.str();
}

Dataset load_dataset(const std::filesystem::path& manifest,
                     const std::vector<std::string>& categories) {
  const std::string text = read_text_file(manifest);
  const std::filesystem::path base = manifest.parent_path();

  Dataset ds;
  ds.categories = categories;
  std::vector<std::string> failures;
  std::set<std::string> seen_ids;

  std::istringstream lines(text);
  std::string line;
  long line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
      failures.push_back(where + ": expected image_id<TAB>xml_path[<TAB>ppm_path]");
      continue;
    }
    const std::string& id = fields[0];
    if (!seen_ids.insert(id).second) {
      failures.push_back(where + ": duplicate image id '" + id + "'");
      continue;
    }

    const std::filesystem::path xml_path = base / fields[1];
    try {
      ImageAnnotation ann = parse_voc_xml(read_text_file(xml_path), categories);
      ann.image_id = id;  // manifest id is authoritative
      ds.annotations.push_back(std::move(ann));
    } catch (const InvalidInputError& e) {
      failures.push_back(where + " (" + xml_path.string() + "): " + e.what());
      continue;
    }

    if (fields.size() == 3) {
      const std::filesystem::path ppm_path = base / fields[2];
      if (!std::filesystem::exists(ppm_path)) {
        failures.push_back(where + ": missing pixmap " + ppm_path.string());
        continue;
      }
      ds.image_paths[id] = ppm_path.string();
    }
  }

  if (!failures.empty()) throw LoadError(std::move(failures));
  return ds;
}

Image load_image(const Dataset& ds, const std::string& image_id) {
  const auto it = ds.image_paths.find(image_id);
  if (it == ds.image_paths.end()) {
    throw InvalidInputError("no pixmap registered for image '" + image_id +
                            "'");
  }
  return read_ppm(it->second);
}

StatsReport dataset_stats(const Dataset& ds) {
  const std::size_t k = ds.categories.size();
  StatsReport report;
  report.image_count = static_cast<long>(ds.annotations.size());
  report.per_category.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    report.per_category[c].name = ds.categories[c];
  }

  std::vector<long> total_boxes(k, 0);
  std::vector<long> images_with(k, 0);
  std::vector<double> area_sum(k, 0.0);
  std::vector<double> categories_sum(k, 0.0);

  for (const auto& ann : ds.annotations) {
    std::vector<long> count(k, 0);
    std::vector<double> area(k, 0.0);
    for (const auto& obj : ann.objects) {
      ++count[obj.category];
      area[obj.category] += obj.box.area();
      ++report.ground_truth_count;
    }
    long distinct = 0;
    for (std::size_t c = 0; c < k; ++c) distinct += count[c] > 0 ? 1 : 0;
    const double image_area =
        static_cast<double>(ann.width) * static_cast<double>(ann.height);
    for (std::size_t c = 0; c < k; ++c) {
      total_boxes[c] += count[c];
      if (count[c] > 0) {
        ++images_with[c];
        area_sum[c] += std::min(1.0, area[c] / image_area);
        categories_sum[c] += static_cast<double>(distinct);
      }
    }
  }

  for (std::size_t c = 0; c < k; ++c) {
    auto& cs = report.per_category[c];
    if (report.image_count > 0) {
      cs.mean_boxes = static_cast<double>(total_boxes[c]) / report.image_count;
    }
    if (images_with[c] > 0) {
      cs.mean_categories = categories_sum[c] / images_with[c];
      cs.area_fraction = area_sum[c] / images_with[c];
    }
  }
  return report;
}

std::string stats_to_csv(const StatsReport& report) {
  std::string out = "category,mean_boxes,mean_categories,area_fraction\n";
  for (const auto& cs : report.per_category) {
    out += cs.name + "," + format_double(cs.mean_boxes) + "," +
           format_double(cs.mean_categories) + "," +
           format_double(cs.area_fraction) + "\n";
  }
  return out;
}

std::string stats_to_table(const StatsReport& report) {
  std::ostringstream out;
  out << "images: " << report.image_count
      << "  ground truths: " << report.ground_truth_count << "\n";
  char row[128];
  std::snprintf(row, sizeof(row), "%-10s %12s %12s %14s\n", "category",
                "mean_boxes", "mean_cats", "area_fraction");
  out << row;
  for (const auto& cs : report.per_category) {
    std::snprintf(row, sizeof(row), "%-10s %12.4f %12.4f %14.4f\n",
                  cs.name.c_str(), cs.mean_boxes, cs.mean_categories,
                  cs.area_fraction);
    out << row;
  }
  return out.str();
}

std::array<FoldSplit, 5> kfold_split(const Dataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.annotations.size();
  if (n < 5) {
    throw InvalidInputError("kfold_split: dataset must have at least 5 images");
  }

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& ann : ds.annotations) ids.push_back(ann.image_id);

  Rng rng = Rng(seed).stream("kfold");
  rng.shuffle(ids);

  const std::size_t base = n / 5;
  const std::size_t remainder = n % 5;

  std::array<FoldSplit, 5> folds;
  std::size_t offset = 0;
  for (int f = 0; f < 5; ++f) {
    const std::size_t test_n = base + (static_cast<std::size_t>(f) < remainder);
    auto& fold = folds[f];
    fold.fold = f;
    fold.test_ids.assign(ids.begin() + offset, ids.begin() + offset + test_n);

    std::vector<std::string> rest;
    rest.reserve(n - test_n);
    rest.insert(rest.end(), ids.begin(), ids.begin() + offset);
    rest.insert(rest.end(), ids.begin() + offset + test_n, ids.end());

    std::size_t train_n =
        static_cast<std::size_t>(std::lround(0.7 * static_cast<double>(n)));
    train_n = std::min(train_n, n - test_n);
    fold.train_ids.assign(rest.begin(), rest.begin() + train_n);
    fold.val_ids.assign(rest.begin() + train_n, rest.end());

    offset += test_n;
  }
  return folds;
}

std::string fold_to_json(const FoldSplit& fold) {
  nlohmann::ordered_json j;
  j["fold"] = fold.fold;
  j["train"] = fold.train_ids;
  j["val"] = fold.val_ids;
  j["test"] = fold.test_ids;
  return j.dump(2) + "\n";
}

FoldSplit fold_from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("fold json: ") + e.what(), e.byte);
  }
  try {
    FoldSplit fold;
    fold.fold = j.at("fold").get<int>();
    fold.train_ids = j.at("train").get<std::vector<std::string>>();
    fold.val_ids = j.at("val").get<std::vector<std::string>>();
    fold.test_ids = j.at("test").get<std::vector<std::string>>();
    return fold;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("fold json: ") + e.what());
  }
}

}  // namespace detkit
