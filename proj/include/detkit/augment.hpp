#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detkit/geometry.hpp"
#include "detkit/rng.hpp"
#include "detkit/voc.hpp"

namespace detkit {

// An image paired with its annotation; dimensions must agree.
struct Sample {
  Image image;
  ImageAnnotation annotation;

  void validate() const;
};

struct MixedSample {
  Sample sample;
  double lambda = 0.0;
  std::string parent_a;
  std::string parent_b;
};

// Square training resolutions; each must be divisible by 32 so the three
// decode strides tile exactly.
struct ResolutionSet {
  std::vector<int> resolutions;

  void validate() const;
};

// {320, 352, ..., 608}.
ResolutionSet default_resolutions();

// lambda ~ Beta(alpha, alpha).
double sample_mixup_lambda(double alpha, Rng& rng);

// Blends two samples on a max-dimension canvas, both top-left aligned at
// native scale, uncovered cells treated as 0:
//   out = lambda * a + (1 - lambda) * b
// Boxes are carried over unscaled; object weights are multiplied by lambda
// (parent a) or 1-lambda (parent b), and zero-weight objects are dropped.
MixedSample mixup(const Sample& a, const Sample& b, double lambda);

// Mirrors pixels about the vertical axis; (x1,y1,x2,y2) -> (W-x2,y1,W-x1,y2).
Sample horizontal_flip(const Sample& s);

struct CropWindow {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;
};

// Crops to the window; boxes are intersected and re-origined, and an object
// survives only if it keeps at least min_keep_frac of its area.
Sample apply_crop(const Sample& s, const CropWindow& window,
                  double min_keep_frac);

// Shifts by (dx,dy), vacated pixels 0, same keep rule as apply_crop.
Sample apply_translate(const Sample& s, int dx, int dy, double min_keep_frac);

// Brightness offset and contrast scaling about the image mean, clamped
// to [0,1]. Boxes untouched.
Sample apply_color_jitter(const Sample& s, double brightness, double contrast);

// Window scale uniform in [min_scale,1], position uniform. If every object
// would drop, the window is resampled up to 50 times before giving up and
// returning the input unchanged.
Sample random_crop(const Sample& s, Rng& rng, double min_keep_frac = 0.3,
                   double min_scale = 0.5);

// Shift uniform in +/- max_frac * dims, with the crop retry rule.
Sample random_translate(const Sample& s, Rng& rng, double max_frac = 0.2,
                        double min_keep_frac = 0.3);

// Brightness and contrast deltas uniform in +/- max_delta.
Sample color_jitter(const Sample& s, Rng& rng, double max_delta = 0.2);

// One resolution per epoch, uniform over the set, deterministic in
// (epoch, seed).
int sample_resolution(long epoch, std::uint64_t seed, const ResolutionSet& w);

}  // namespace detkit
