#include "detkit/augment.hpp"

#include <algorithm>
#include <cmath>

#include "detkit/error.hpp"

namespace detkit {

namespace {

// Intersects the box with an axis-aligned window and re-origins it.
// Returns false when the object loses too much area.
bool clip_to_window(const BBox& box, double wx0, double wy0, double wx1,
                    double wy1, double min_keep_frac, BBox& out) {
  const BBox inter{std::max(box.xmin, wx0), std::max(box.ymin, wy0),
                   std::min(box.xmax, wx1), std::min(box.ymax, wy1)};
  if (inter.xmin >= inter.xmax || inter.ymin >= inter.ymax) return false;
  if (inter.area() < min_keep_frac * box.area()) return false;
  out = BBox{inter.xmin - wx0, inter.ymin - wy0, inter.xmax - wx0,
             inter.ymax - wy0};
  return true;
}

}  // namespace

void Sample::validate() const {
  require_valid(image, "sample");
  if (annotation.width != image.width || annotation.height != image.height) {
    throw InvalidInputError("sample: annotation dims (" +
                            std::to_string(annotation.width) + "x" +
                            std::to_string(annotation.height) +
                            ") do not match image (" +
                            std::to_string(image.width) + "x" +
                            std::to_string(image.height) + ")");
  }
}

void ResolutionSet::validate() const {
  if (resolutions.empty()) {
    throw InvalidInputError("resolution set must be non-empty");
  }
  for (int r : resolutions) {
    if (r < 32 || r % 32 != 0) {
      throw InvalidInputError("resolution " + std::to_string(r) +
                              " is not a positive multiple of 32");
    }
  }
}

ResolutionSet default_resolutions() {
  return ResolutionSet{{320, 352, 384, 416, 448, 480, 512, 544, 576, 608}};
}

double sample_mixup_lambda(double alpha, Rng& rng) {
  if (!(alpha > 0.0)) {
    throw InvalidInputError("sample_mixup_lambda: alpha must be > 0");
  }
  return std::clamp(rng.beta(alpha, alpha), 0.0, 1.0);
}

MixedSample mixup(const Sample& a, const Sample& b, double lambda) {
  a.validate();
  b.validate();
  if (!(lambda >= 0.0) || lambda > 1.0) {
    throw InvalidInputError("mixup: lambda must be in [0,1]");
  }

  const int cw = std::max(a.image.width, b.image.width);
  const int ch = std::max(a.image.height, b.image.height);

  MixedSample mixed;
  mixed.lambda = lambda;
  mixed.parent_a = a.annotation.image_id;
  mixed.parent_b = b.annotation.image_id;

  Image canvas = Image::filled(cw, ch, 0.0);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      const bool in_a = x < a.image.width && y < a.image.height;
      const bool in_b = x < b.image.width && y < b.image.height;
      for (int c = 0; c < 3; ++c) {
        const double pa = in_a ? a.image.at(x, y, c) : 0.0;
        const double pb = in_b ? b.image.at(x, y, c) : 0.0;
        canvas.at(x, y, c) = lambda * pa + (1.0 - lambda) * pb;
      }
    }
  }

  ImageAnnotation ann;
  ann.image_id = a.annotation.image_id;
  ann.width = cw;
  ann.height = ch;
  for (const auto& obj : a.annotation.objects) {
    const double w = lambda * obj.weight;
    if (w > 0.0) {
      GroundTruthObject merged = obj;
      merged.weight = w;
      ann.objects.push_back(merged);
    }
  }
  for (const auto& obj : b.annotation.objects) {
    const double w = (1.0 - lambda) * obj.weight;
    if (w > 0.0) {
      GroundTruthObject merged = obj;
      merged.weight = w;
      ann.objects.push_back(merged);
    }
  }

  mixed.sample = Sample{std::move(canvas), std::move(ann)};
  return mixed;
}

Sample horizontal_flip(const Sample& s) {
  s.validate();
  const int w = s.image.width;
  const int h = s.image.height;
  Sample out = s;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.image.at(x, y, c) = s.image.at(w - 1 - x, y, c);
      }
    }
  }
  for (auto& obj : out.annotation.objects) {
    const BBox b = obj.box;
    obj.box = BBox{w - b.xmax, b.ymin, w - b.xmin, b.ymax};
  }
  return out;
}

Sample apply_crop(const Sample& s, const CropWindow& window,
                  double min_keep_frac) {
  s.validate();
  if (window.w < 1 || window.h < 1 || window.x0 < 0 || window.y0 < 0 ||
      window.x0 + window.w > s.image.width ||
      window.y0 + window.h > s.image.height) {
    throw InvalidInputError("apply_crop: window outside image");
  }

  Sample out;
  out.image.width = window.w;
  out.image.height = window.h;
  out.image.pixels.resize(static_cast<std::size_t>(window.w) * window.h * 3);
  for (int y = 0; y < window.h; ++y) {
    for (int x = 0; x < window.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.image.at(x, y, c) = s.image.at(window.x0 + x, window.y0 + y, c);
      }
    }
  }

  out.annotation.image_id = s.annotation.image_id;
  out.annotation.width = window.w;
  out.annotation.height = window.h;
  for (const auto& obj : s.annotation.objects) {
    BBox kept;
    if (clip_to_window(obj.box, window.x0, window.y0, window.x0 + window.w,
                       window.y0 + window.h, min_keep_frac, kept)) {
      GroundTruthObject moved = obj;
      moved.box = kept;
      out.annotation.objects.push_back(moved);
    }
  }
  return out;
}

Sample apply_translate(const Sample& s, int dx, int dy, double min_keep_frac) {
  s.validate();
  const int w = s.image.width;
  const int h = s.image.height;

  Sample out;
  out.image = Image::filled(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= h) continue;
    for (int x = 0; x < w; ++x) {
      const int sx = x - dx;
      if (sx < 0 || sx >= w) continue;
      for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = s.image.at(sx, sy, c);
    }
  }

  out.annotation.image_id = s.annotation.image_id;
  out.annotation.width = w;
  out.annotation.height = h;
  for (const auto& obj : s.annotation.objects) {
    const BBox shifted{obj.box.xmin + dx, obj.box.ymin + dy, obj.box.xmax + dx,
                       obj.box.ymax + dy};
    BBox kept;
    // Window is the image itself; clip_to_window re-origins by (0,0).
    if (clip_to_window(shifted, 0.0, 0.0, w, h, min_keep_frac, kept)) {
      GroundTruthObject moved = obj;
      moved.box = kept;
      out.annotation.objects.push_back(moved);
    }
  }
  return out;
}

Sample apply_color_jitter(const Sample& s, double brightness, double contrast) {
  s.validate();
  if (!(contrast > 0.0)) {
    throw InvalidInputError("apply_color_jitter: contrast must be > 0");
  }
  double mean = 0.0;
  for (double v : s.image.pixels) mean += v;
  mean /= static_cast<double>(s.image.pixels.size());

  // Algebraically mean + (v-mean)*contrast + brightness, written so the
  // identity transform is bit-exact.
  Sample out = s;
  for (double& v : out.image.pixels) {
    v = std::clamp(v + (contrast - 1.0) * (v - mean) + brightness, 0.0, 1.0);
  }
  return out;
}

Sample random_crop(const Sample& s, Rng& rng, double min_keep_frac,
                   double min_scale) {
  s.validate();
  if (!(min_scale > 0.0) || min_scale > 1.0) {
    throw InvalidInputError("random_crop: min_scale must be in (0,1]");
  }
  const int w = s.image.width;
  const int h = s.image.height;
  for (int attempt = 0; attempt < 50; ++attempt) {
    const double scale = rng.uniform(min_scale, 1.0);
    CropWindow window;
    window.w = std::max(1, static_cast<int>(std::lround(scale * w)));
    window.h = std::max(1, static_cast<int>(std::lround(scale * h)));
    window.x0 = static_cast<int>(rng.uniform_index(w - window.w + 1));
    window.y0 = static_cast<int>(rng.uniform_index(h - window.h + 1));
    Sample out = apply_crop(s, window, min_keep_frac);
    if (s.annotation.objects.empty() || !out.annotation.objects.empty()) {
      return out;
    }
  }
  return s;
}

Sample random_translate(const Sample& s, Rng& rng, double max_frac,
                        double min_keep_frac) {
  s.validate();
  if (max_frac < 0.0) {
    throw InvalidInputError("random_translate: max_frac must be >= 0");
  }
  const int max_dx = static_cast<int>(std::lround(max_frac * s.image.width));
  const int max_dy = static_cast<int>(std::lround(max_frac * s.image.height));
  for (int attempt = 0; attempt < 50; ++attempt) {
    const int dx = static_cast<int>(rng.uniform_index(2 * max_dx + 1)) - max_dx;
    const int dy = static_cast<int>(rng.uniform_index(2 * max_dy + 1)) - max_dy;
    Sample out = apply_translate(s, dx, dy, min_keep_frac);
    if (s.annotation.objects.empty() || !out.annotation.objects.empty()) {
      return out;
    }
  }
  return s;
}

Sample color_jitter(const Sample& s, Rng& rng, double max_delta) {
  if (max_delta < 0.0) {
    throw InvalidInputError("color_jitter: max_delta must be >= 0");
  }
  const double brightness = rng.uniform(-max_delta, max_delta);
  const double contrast = 1.0 + rng.uniform(-max_delta, max_delta);
  return apply_color_jitter(s, brightness, contrast);
}

int sample_resolution(long epoch, std::uint64_t seed, const ResolutionSet& w) {
  w.validate();
  if (epoch < 0) throw InvalidInputError("sample_resolution: epoch must be >= 0");
  Rng rng = Rng(seed).stream("resolution").stream(static_cast<std::uint64_t>(epoch));
  return w.resolutions[rng.uniform_index(w.resolutions.size())];
}

}  // namespace detkit
