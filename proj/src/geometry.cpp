#include "detkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detkit/error.hpp"

namespace detkit {

bool BBox::valid() const {
  return std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) &&
         std::isfinite(ymax) && xmin < xmax && ymin < ymax;
}

void require_valid(const BBox& box, const char* context) {
  if (!box.valid()) {
    throw InvalidInputError(std::string(context) + ": invalid box (" +
                            std::to_string(box.xmin) + "," +
                            std::to_string(box.ymin) + "," +
                            std::to_string(box.xmax) + "," +
                            std::to_string(box.ymax) + ")");
  }
}

Image Image::filled(int width, int height, double value) {
  Image img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width) * height * 3, value);
  return img;
}

bool Image::valid() const {
  if (width < 1 || height < 1) return false;
  if (pixels.size() != static_cast<std::size_t>(width) * height * 3)
    return false;
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

void require_valid(const Image& img, const char* context) {
  if (!img.valid()) {
    throw InvalidInputError(std::string(context) +
                            ": invalid image (dims " +
                            std::to_string(img.width) + "x" +
                            std::to_string(img.height) + ", buffer " +
                            std::to_string(img.pixels.size()) + ")");
  }
}

double iou(const BBox& a, const BBox& b) {
  require_valid(a, "iou");
  require_valid(b, "iou");
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

Image resize_image(const Image& img, int target_w, int target_h) {
  require_valid(img, "resize_image");
  if (target_w < 1 || target_h < 1) {
    throw InvalidInputError("resize_image: target dims must be >= 1");
  }

  Image out;
  out.width = target_w;
  out.height = target_h;
  out.pixels.resize(static_cast<std::size_t>(target_w) * target_h * 3);

  const double x_ratio = static_cast<double>(img.width) / target_w;
  const double y_ratio = static_cast<double>(img.height) / target_h;

  for (int y = 0; y < target_h; ++y) {
    const double sy = (y + 0.5) * y_ratio - 0.5;
    const int y0 = static_cast<int>(std::floor(sy));
    const double fy = sy - y0;
    const int y0c = std::clamp(y0, 0, img.height - 1);
    const int y1c = std::clamp(y0 + 1, 0, img.height - 1);
    for (int x = 0; x < target_w; ++x) {
      const double sx = (x + 0.5) * x_ratio - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const double fx = sx - x0;
      const int x0c = std::clamp(x0, 0, img.width - 1);
      const int x1c = std::clamp(x0 + 1, 0, img.width - 1);
      for (int c = 0; c < 3; ++c) {
        const double top =
            (1.0 - fx) * img.at(x0c, y0c, c) + fx * img.at(x1c, y0c, c);
        const double bottom =
            (1.0 - fx) * img.at(x0c, y1c, c) + fx * img.at(x1c, y1c, c);
        out.at(x, y, c) = std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 1.0);
      }
    }
  }
  return out;
}

BBox scale_box(const BBox& box, double sx, double sy) {
  if (!(sx > 0.0) || !(sy > 0.0)) {
    throw InvalidInputError("scale_box: factors must be > 0");
  }
  require_valid(box, "scale_box");
  return BBox{box.xmin * sx, box.ymin * sy, box.xmax * sx, box.ymax * sy};
}

std::vector<BBox> scale_boxes(const std::vector<BBox>& boxes, double sx,
                              double sy) {
  if (!(sx > 0.0) || !(sy > 0.0)) {
    throw InvalidInputError("scale_boxes: factors must be > 0");
  }
  std::vector<BBox> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) out.push_back(scale_box(b, sx, sy));
  return out;
}

std::optional<BBox> clip_box(const BBox& box, double w, double h) {
  if (!(w > 0.0) || !(h > 0.0)) {
    throw InvalidInputError("clip_box: image dims must be > 0");
  }
  require_valid(box, "clip_box");
  BBox clipped{std::max(box.xmin, 0.0), std::max(box.ymin, 0.0),
               std::min(box.xmax, w), std::min(box.ymax, h)};
  if (clipped.xmin >= clipped.xmax || clipped.ymin >= clipped.ymax) {
    return std::nullopt;
  }
  return clipped;
}

}  // namespace detkit
