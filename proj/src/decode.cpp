#include "detkit/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "detkit/error.hpp"

namespace detkit {

namespace {

constexpr std::uint32_t kTensorMagic = 0x31544859u;  // "YHT1"

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

std::uint32_t read_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(
             bytes[offset + i]))
         << (8 * i);
  }
  return v;
}

}  // namespace

void HeadTensor::validate() const {
  if (grid < 1) throw InvalidInputError("head tensor: grid must be >= 1");
  if (stride != 8 && stride != 16 && stride != 32) {
    throw InvalidInputError("head tensor: stride must be 8, 16 or 32, got " +
                            std::to_string(stride));
  }
  if (num_categories < 1) {
    throw InvalidInputError("head tensor: need at least one category");
  }
  const std::size_t expected =
      static_cast<std::size_t>(grid) * grid * 3 * channels();
  if (values.size() != expected) {
    throw InvalidInputError("head tensor: buffer holds " +
                            std::to_string(values.size()) + " values, " +
                            "expected " + std::to_string(expected));
  }
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw InvalidInputError("head tensor: non-finite value");
    }
  }
}

std::vector<Detection> decode_scale(const HeadTensor& tensor,
                                    std::span<const BoxShape> anchors3,
                                    double score_thresh) {
  tensor.validate();
  if (anchors3.size() != 3) {
    throw InvalidInputError("decode_scale: expected 3 anchors, got " +
                            std::to_string(anchors3.size()));
  }

  std::vector<Detection> out;
  const int s = tensor.grid;
  const int k = tensor.num_categories;
  for (int cy = 0; cy < s; ++cy) {
    for (int cx = 0; cx < s; ++cx) {
      for (int a = 0; a < 3; ++a) {
        const double objectness = sigmoid(tensor.at(cy, cx, a, 4));
        // Category sigmoids are < 1, so objectness bounds every score.
        if (objectness <= score_thresh) continue;

        const double center_x =
            (sigmoid(tensor.at(cy, cx, a, 0)) + cx) * tensor.stride;
        const double center_y =
            (sigmoid(tensor.at(cy, cx, a, 1)) + cy) * tensor.stride;
        const double tw = std::min<double>(tensor.at(cy, cx, a, 2), 10.0);
        const double th = std::min<double>(tensor.at(cy, cx, a, 3), 10.0);
        const double bw = anchors3[a].w * std::exp(tw);
        const double bh = anchors3[a].h * std::exp(th);
        const BBox box{center_x - bw / 2.0, center_y - bh / 2.0,
                       center_x + bw / 2.0, center_y + bh / 2.0};

        for (int c = 0; c < k; ++c) {
          const double score =
              objectness * sigmoid(tensor.at(cy, cx, a, 5 + c));
          if (score > score_thresh) {
            out.push_back(Detection{"", c, score, box});
          }
        }
      }
    }
  }
  return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_thresh) {
  if (dets.empty()) return {};
  for (const auto& d : dets) {
    if (d.image_id != dets.front().image_id) {
      throw InvalidInputError("nms: detections must share one image");
    }
  }

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<Detection> kept;
  std::vector<std::size_t> kept_order;
  for (std::size_t i : order) {
    bool suppressed = false;
    for (std::size_t j : kept_order) {
      if (dets[j].category != dets[i].category) continue;
      if (iou(dets[j].box, dets[i].box) > iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept_order.push_back(i);
      kept.push_back(dets[i]);
    }
  }
  return kept;
}

std::vector<Detection> decode_full(const std::vector<HeadTensor>& tensors,
                                   const AnchorSet& anchors, int input_res,
                                   const std::string& image_id, int orig_w,
                                   int orig_h, const DecodeConfig& config) {
  if (anchors.size() != 9) {
    throw InvalidInputError("decode_full: expected 9 anchors, got " +
                            std::to_string(anchors.size()));
  }
  if (orig_w < 1 || orig_h < 1) {
    throw InvalidInputError("decode_full: original dims must be >= 1");
  }
  if (input_res < 32 || input_res % 32 != 0) {
    throw InvalidInputError("decode_full: input_res must be a multiple of 32");
  }

  // Exactly one tensor per stride; small anchors pair with stride 8,
  // medium with 16, large with 32.
  const int strides[3] = {8, 16, 32};
  std::vector<Detection> merged;
  for (int g = 0; g < 3; ++g) {
    const HeadTensor* tensor = nullptr;
    for (const auto& t : tensors) {
      if (t.stride == strides[g]) {
        if (tensor != nullptr) {
          throw InvalidInputError("decode_full: duplicate stride " +
                                  std::to_string(strides[g]));
        }
        tensor = &t;
      }
    }
    if (tensor == nullptr) {
      throw InvalidInputError("decode_full: missing stride " +
                              std::to_string(strides[g]));
    }
    if (tensor->grid * tensor->stride != input_res) {
      throw InvalidInputError(
          "decode_full: grid " + std::to_string(tensor->grid) + " x stride " +
          std::to_string(tensor->stride) + " != input_res " +
          std::to_string(input_res));
    }
    if (tensor->num_categories != tensors.front().num_categories) {
      throw InvalidInputError(
          "decode_full: scales disagree on the category count");
    }
    auto scale_dets =
        decode_scale(*tensor, anchors.scale_group(g), config.score_thresh);
    merged.insert(merged.end(), scale_dets.begin(), scale_dets.end());
  }

  std::vector<Detection> survivors = nms(merged, config.iou_thresh);

  const double sx = static_cast<double>(orig_w) / input_res;
  const double sy = static_cast<double>(orig_h) / input_res;
  std::vector<Detection> out;
  for (auto& d : survivors) {
    const auto clipped = clip_box(scale_box(d.box, sx, sy), orig_w, orig_h);
    if (!clipped) continue;
    d.box = *clipped;
    d.image_id = image_id;
    out.push_back(std::move(d));
    if (static_cast<int>(out.size()) >= config.max_dets) break;
  }
  return out;
}

std::string encode_head_tensor(const HeadTensor& tensor) {
  tensor.validate();
  std::string out;
  out.reserve(32 + tensor.values.size() * 4);
  append_u32(out, kTensorMagic);
  append_u32(out, static_cast<std::uint32_t>(tensor.grid));
  append_u32(out, static_cast<std::uint32_t>(tensor.stride));
  append_u32(out, static_cast<std::uint32_t>(tensor.num_categories));
  for (int i = 0; i < 4; ++i) append_u32(out, 0);
  for (float v : tensor.values) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    append_u32(out, bits);
  }
  return out;
}

HeadTensor decode_head_tensor(std::string_view bytes) {
  if (bytes.size() < 32) throw ParseError("head tensor: truncated header", 0);
  if (read_u32(bytes, 0) != kTensorMagic) {
    throw ParseError("head tensor: bad magic", 0);
  }
  HeadTensor tensor;
  tensor.grid = static_cast<int>(read_u32(bytes, 4));
  tensor.stride = static_cast<int>(read_u32(bytes, 8));
  tensor.num_categories = static_cast<int>(read_u32(bytes, 12));
  if (tensor.grid < 1 || tensor.grid > 4096 || tensor.num_categories < 1 ||
      tensor.num_categories > 4096) {
    throw ParseError("head tensor: implausible header", 4);
  }
  const std::size_t count = static_cast<std::size_t>(tensor.grid) *
                            tensor.grid * 3 * tensor.channels();
  if (bytes.size() != 32 + count * 4) {
    throw ParseError("head tensor: payload size mismatch", bytes.size());
  }
  tensor.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = read_u32(bytes, 32 + i * 4);
    std::memcpy(&tensor.values[i], &bits, 4);
  }
  tensor.validate();
  return tensor;
}

void write_head_tensor(const std::filesystem::path& path,
                       const HeadTensor& tensor) {
  const std::string data = encode_head_tensor(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InvalidInputError("cannot open for writing: " + path.string());
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

HeadTensor read_head_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return decode_head_tensor(data);
}

std::string detections_to_jsonl(std::span<const Detection> dets) {
  std::string out;
  for (const auto& d : dets) {
    nlohmann::ordered_json j;
    j["image_id"] = d.image_id;
    j["category"] = d.category;
    j["score"] = d.score;
    j["bbox"] = {d.box.xmin, d.box.ymin, d.box.xmax, d.box.ymax};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<Detection> detections_from_jsonl(std::string_view text) {
  std::vector<Detection> dets;
  std::size_t pos = 0;
  long line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    const std::size_t line_start = pos;
    pos = end + 1;
    ++line_no;
    if (line.empty() || line == "\r") continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("detections line " + std::to_string(line_no) + ": " +
                           e.what(),
                       line_start + e.byte);
    }
    try {
      Detection d;
      d.image_id = j.at("image_id").get<std::string>();
      d.category = j.at("category").get<int>();
      d.score = j.at("score").get<double>();
      const auto& bb = j.at("bbox");
      if (!bb.is_array() || bb.size() != 4) {
        throw InvalidInputError("bbox must be a 4-element array");
      }
      d.box = BBox{bb[0].get<double>(), bb[1].get<double>(),
                   bb[2].get<double>(), bb[3].get<double>()};
      if (!(d.score > 0.0) || d.score > 1.0) {
        throw InvalidInputError("score must be in (0,1]");
      }
      require_valid(d.box, "detections");
      if (d.category < 0) throw InvalidInputError("category must be >= 0");
      dets.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInputError("detections line " + std::to_string(line_no) +
                              ": " + e.what());
    } catch (const InvalidInputError& e) {
      throw InvalidInputError("detections line " + std::to_string(line_no) +
                              ": " + e.what());
    }
  }
  return dets;
}

}  // namespace detkit
