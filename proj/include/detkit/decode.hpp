#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detkit/anchors.hpp"
#include "detkit/geometry.hpp"

namespace detkit {

// Raw output grid of one detection scale: S x S cells, 3 anchor slots,
// 5+K channels per slot (t_x, t_y, t_w, t_h, t_obj, t_c1..t_cK).
struct HeadTensor {
  int grid = 0;
  int stride = 0;  // 8, 16 or 32
  int num_categories = 0;
  std::vector<float> values;  // (y, x, anchor, channel) row-major

  int channels() const { return 5 + num_categories; }
  std::size_t index(int y, int x, int anchor, int channel) const {
    return ((static_cast<std::size_t>(y) * grid + x) * 3 + anchor) *
               channels() +
           channel;
  }
  float at(int y, int x, int anchor, int channel) const {
    return values[index(y, x, anchor, channel)];
  }
  float& at(int y, int x, int anchor, int channel) {
    return values[index(y, x, anchor, channel)];
  }

  void validate() const;
};

// A scored, located object prediction.
struct Detection {
  std::string image_id;
  int category = 0;
  double score = 0.0;
  BBox box;

  bool operator==(const Detection&) const = default;
};

struct DecodeConfig {
  double score_thresh = 1e-8;
  double iou_thresh = 0.6;
  int max_dets = 100;
};

// Decodes one scale into candidates in network-input coordinates. Emits one
// detection per (cell, anchor, category) whose score sigma(t_obj)*sigma(t_c)
// exceeds score_thresh. Box transform:
//   center = (sigma(t_x)+cx)*stride, (sigma(t_y)+cy)*stride
//   size   = anchor_w*exp(t_w), anchor_h*exp(t_h)  (t capped at 10)
std::vector<Detection> decode_scale(const HeadTensor& tensor,
                                    std::span<const BoxShape> anchors3,
                                    double score_thresh);

// Greedy per-category suppression: keep the best-scored box, drop later
// boxes of the same category with iou strictly above the threshold.
// Detections must share one image; ties break by input position. Output is
// ordered by descending score.
std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_thresh);

// Full pipeline over the three scales: decode, merge, per-category NMS,
// rescale from network input to the original resolution, clip, cap count.
std::vector<Detection> decode_full(const std::vector<HeadTensor>& tensors,
                                   const AnchorSet& anchors, int input_res,
                                   const std::string& image_id, int orig_w,
                                   int orig_h, const DecodeConfig& config = {});

// Binary tensor file: 8 little-endian uint32 header
// (magic 0x31544859 "YHT1", S, stride, K, 4 reserved zeros) followed by
// S*S*3*(5+K) little-endian 32-bit floats in (y, x, anchor, channel) order.
std::string encode_head_tensor(const HeadTensor& tensor);
HeadTensor decode_head_tensor(std::string_view bytes);
void write_head_tensor(const std::filesystem::path& path,
                       const HeadTensor& tensor);
HeadTensor read_head_tensor(const std::filesystem::path& path);

// One JSON object per line:
// {"image_id":...,"category":...,"score":...,"bbox":[x1,y1,x2,y2]}
std::string detections_to_jsonl(std::span<const Detection> dets);
std::vector<Detection> detections_from_jsonl(std::string_view text);

}  // namespace detkit
