#pragma once

#include <optional>
#include <vector>

namespace detkit {

// Axis-aligned box in continuous pixel coordinates, origin top-left,
// x rightward, y downward. The box covers [xmin,xmax) x [ymin,ymax);
// area is (xmax-xmin)*(ymax-ymin) with no pixel "+1" convention.
struct BBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool valid() const;

  bool operator==(const BBox&) const = default;
};

// Throws InvalidInputError when the box is degenerate or non-finite.
void require_valid(const BBox& box, const char* context);

// RGB raster with interleaved channels, values in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // size width*height*3, (y, x, channel) order

  static Image filled(int width, int height, double value);

  double& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  bool valid() const;
  bool operator==(const Image&) const = default;
};

void require_valid(const Image& img, const char* context);

// Intersection over union; 0 for disjoint boxes. Both boxes must be valid.
double iou(const BBox& a, const BBox& b);

// Bilinear resize with half-pixel-center sampling and edge clamping.
// Output values stay in [0,1].
Image resize_image(const Image& img, int target_w, int target_h);

// Multiplies each coordinate by the per-axis factor. Factors must be > 0.
std::vector<BBox> scale_boxes(const std::vector<BBox>& boxes, double sx,
                              double sy);
BBox scale_box(const BBox& box, double sx, double sy);

// Intersection of the box with [0,w] x [0,h]; nullopt when the
// intersection has zero area.
std::optional<BBox> clip_box(const BBox& box, double w, double h);

}  // namespace detkit
