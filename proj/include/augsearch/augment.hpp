#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "augsearch/image.hpp"

namespace augsearch {

// The 14 candidate element kinds, in catalog row order.
enum class AugKind : int {
  kHorizontalShear = 0,
  kVerticalShear,
  kHorizontalTranslate,
  kVerticalTranslate,
  kRotate,
  kColorAdjust,
  kPosterize,
  kSolarize,
  kContrast,
  kSharpness,
  kBrightness,
  kAutoContrast,
  kEqualize,
  kInvert,
};

inline constexpr int kNumElements = 36;
inline constexpr int kNumOperations = kNumElements * kNumElements;  // 1296

// One augmentation element: a kind plus a fixed magnitude picked from that
// kind's 3-entry list (magnitude-free kinds have magnitude_index = -1).
// Geometric kinds are `is_signed`: the direction is randomized at apply time.
struct AugElement {
  AugKind kind = AugKind::kInvert;
  int magnitude_index = -1;
  double magnitude = 0.0;
  bool is_signed = false;
};

// Ordered pair of elements; the policy's atomic action.
struct AugOperation {
  AugElement first;
  AugElement second;
};

inline const char* kind_name(AugKind k) {
  switch (k) {
    case AugKind::kHorizontalShear: return "HorizontalShear";
    case AugKind::kVerticalShear: return "VerticalShear";
    case AugKind::kHorizontalTranslate: return "HorizontalTranslate";
    case AugKind::kVerticalTranslate: return "VerticalTranslate";
    case AugKind::kRotate: return "Rotate";
    case AugKind::kColorAdjust: return "ColorAdjust";
    case AugKind::kPosterize: return "Posterize";
    case AugKind::kSolarize: return "Solarize";
    case AugKind::kContrast: return "Contrast";
    case AugKind::kSharpness: return "Sharpness";
    case AugKind::kBrightness: return "Brightness";
    case AugKind::kAutoContrast: return "AutoContrast";
    case AugKind::kEqualize: return "Equalize";
    case AugKind::kInvert: return "Invert";
  }
  return "?";
}

inline AugKind kind_from_name(const std::string& name) {
  for (int k = 0; k < 14; ++k) {
    AugKind kind = static_cast<AugKind>(k);
    if (name == kind_name(kind)) return kind;
  }
  throw std::invalid_argument("unknown augmentation kind: " + name);
}

// Kinds in row order with their magnitude lists; magnitude-free kinds last.
// Catalog layout: 11 kinds x 3 ascending magnitudes (indices 0..32), then
// AutoContrast (33), Equalize (34), Invert (35).
inline const std::array<AugElement, kNumElements>& element_catalog() {
  static const std::array<AugElement, kNumElements> catalog = [] {
    struct Row {
      AugKind kind;
      std::array<double, 3> mags;
      bool is_signed;
    };
    const Row rows[11] = {
        {AugKind::kHorizontalShear, {0.1, 0.2, 0.3}, true},
        {AugKind::kVerticalShear, {0.1, 0.2, 0.3}, true},
        {AugKind::kHorizontalTranslate, {0.15, 0.3, 0.45}, true},
        {AugKind::kVerticalTranslate, {0.15, 0.3, 0.45}, true},
        {AugKind::kRotate, {10.0, 20.0, 30.0}, true},
        {AugKind::kColorAdjust, {0.3, 0.6, 0.9}, false},
        {AugKind::kPosterize, {4.4, 5.6, 6.8}, false},
        {AugKind::kSolarize, {26.0, 102.0, 179.0}, false},
        {AugKind::kContrast, {1.3, 1.6, 1.9}, false},
        {AugKind::kSharpness, {1.3, 1.6, 1.9}, false},
        {AugKind::kBrightness, {1.3, 1.6, 1.9}, false},
    };
    std::array<AugElement, kNumElements> out{};
    int i = 0;
    for (const Row& row : rows) {
      for (int m = 0; m < 3; ++m) {
        out[i++] = AugElement{row.kind, m, row.mags[m], row.is_signed};
      }
    }
    out[i++] = AugElement{AugKind::kAutoContrast, -1, 0.0, false};
    out[i++] = AugElement{AugKind::kEqualize, -1, 0.0, false};
    out[i++] = AugElement{AugKind::kInvert, -1, 0.0, false};
    return out;
  }();
  return catalog;
}

// Operation index k = 36 * first + second, k in [0, 1295].
inline int operation_index(int first_element, int second_element) {
  return first_element * kNumElements + second_element;
}

inline AugOperation operation_from_index(int k) {
  if (k < 0 || k >= kNumOperations)
    throw std::invalid_argument("operation index out of range: " +
                                std::to_string(k));
  const auto& cat = element_catalog();
  return AugOperation{cat[k / kNumElements], cat[k % kNumElements]};
}

namespace detail {

inline constexpr double kFill = 128.0;  // out-of-bounds fill for geometric ops

// Round half away from zero, clamp to [0, 255].
inline std::uint8_t quantize(double v) {
  double r = std::round(v);
  if (r < 0.0) r = 0.0;
  if (r > 255.0) r = 255.0;
  return static_cast<std::uint8_t>(r);
}

inline double sample_or_fill(const ImageBuffer& img, int y, int x, int c) {
  if (y < 0 || y >= img.height || x < 0 || x >= img.width) return kFill;
  return static_cast<double>(img.at(y, x, c));
}

inline double bilinear(const ImageBuffer& img, double ys, double xs, int c) {
  const double yf = std::floor(ys);
  const double xf = std::floor(xs);
  const int y0 = static_cast<int>(yf);
  const int x0 = static_cast<int>(xf);
  const double fy = ys - yf;
  const double fx = xs - xf;
  const double s00 = sample_or_fill(img, y0, x0, c);
  const double s01 = sample_or_fill(img, y0, x0 + 1, c);
  const double s10 = sample_or_fill(img, y0 + 1, x0, c);
  const double s11 = sample_or_fill(img, y0 + 1, x0 + 1, c);
  return (1.0 - fy) * ((1.0 - fx) * s00 + fx * s01) +
         fy * ((1.0 - fx) * s10 + fx * s11);
}

// Inverse-mapped affine resample: for each destination pixel the functor
// returns the source coordinates; sampling is bilinear with constant fill.
template <typename InverseMap>
ImageBuffer resample(const ImageBuffer& img, InverseMap&& map) {
  ImageBuffer out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto [ys, xs] = map(static_cast<double>(y), static_cast<double>(x));
      for (int c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = quantize(bilinear(img, ys, xs, c));
      }
    }
  }
  return out;
}

inline double luma(const ImageBuffer& img, int y, int x) {
  if (img.channels == 1) return static_cast<double>(img.at(y, x, 0));
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
         0.114 * img.at(y, x, 2);
}

// out = degenerate + f * (img - degenerate), quantized per sample.
template <typename Degenerate>
ImageBuffer blend_toward(const ImageBuffer& img, double f, Degenerate&& deg) {
  ImageBuffer out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const double d = deg(y, x, c);
        out.at(y, x, c) = quantize(d + f * (img.at(y, x, c) - d));
      }
  return out;
}

inline ImageBuffer color_adjust(const ImageBuffer& img, double f) {
  return blend_toward(img, f,
                      [&](int y, int x, int) { return luma(img, y, x); });
}

inline ImageBuffer contrast(const ImageBuffer& img, double f) {
  double sum = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) sum += luma(img, y, x);
  const double mean =
      sum / (static_cast<double>(img.height) * img.width);
  return blend_toward(img, f, [mean](int, int, int) { return mean; });
}

// 3x3 smoothing kernel [[1,1,1],[1,5,1],[1,1,1]]/13; border pixels of the
// degenerate image are copied from the input.
inline ImageBuffer sharpness(const ImageBuffer& img, double f) {
  std::vector<double> smooth(img.sample_count());
  auto idx = [&](int y, int x, int c) {
    return (static_cast<std::size_t>(y) * img.width + x) * img.channels + c;
  };
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        if (y == 0 || y == img.height - 1 || x == 0 || x == img.width - 1) {
          smooth[idx(y, x, c)] = img.at(y, x, c);
          continue;
        }
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const double w = (dy == 0 && dx == 0) ? 5.0 : 1.0;
            acc += w * img.at(y + dy, x + dx, c);
          }
        smooth[idx(y, x, c)] = acc / 13.0;
      }
  return blend_toward(img, f,
                      [&](int y, int x, int c) { return smooth[idx(y, x, c)]; });
}

inline ImageBuffer posterize(const ImageBuffer& img, double magnitude) {
  const int bits = static_cast<int>(std::floor(magnitude));
  const std::uint8_t mask =
      static_cast<std::uint8_t>(0xFFu << (8 - bits));
  ImageBuffer out = img;
  for (auto& v : out.pixels) v &= mask;
  return out;
}

inline ImageBuffer solarize(const ImageBuffer& img, double threshold) {
  ImageBuffer out = img;
  for (auto& v : out.pixels)
    if (static_cast<double>(v) >= threshold) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

inline ImageBuffer autocontrast(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (int c = 0; c < img.channels; ++c) {
    int lo = 255, hi = 0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const int v = img.at(y, x, c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (lo == hi) continue;
    const double scale = 255.0 / (hi - lo);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(y, x, c) = quantize((img.at(y, x, c) - lo) * scale);
  }
  return out;
}

inline ImageBuffer equalize(const ImageBuffer& img) {
  ImageBuffer out = img;
  const std::size_t total =
      static_cast<std::size_t>(img.height) * img.width;
  for (int c = 0; c < img.channels; ++c) {
    std::array<std::size_t, 256> hist{};
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) hist[img.at(y, x, c)]++;
    std::array<std::size_t, 256> cdf{};
    std::size_t run = 0;
    int nonzero_bins = 0;
    for (int v = 0; v < 256; ++v) {
      if (hist[v] > 0) ++nonzero_bins;
      run += hist[v];
      cdf[v] = run;
    }
    if (nonzero_bins <= 1) continue;  // all mass in one bin: identity
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v)
      lut[v] = quantize(255.0 * static_cast<double>(cdf[v]) /
                        static_cast<double>(total));
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(y, x, c) = lut[img.at(y, x, c)];
  }
  return out;
}

inline ImageBuffer invert(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (auto& v : out.pixels) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

}  // namespace detail

// Applies one element. `sign` (+1/-1) selects the direction of geometric
// kinds and is ignored by photometric ones. Output shape equals input shape;
// every sample stays in [0, 255].
inline ImageBuffer apply_element(const ImageBuffer& img, const AugElement& e,
                                 int sign) {
  validate_image(img);
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("sign must be +1 or -1");
  const double cx = 0.5 * (img.width - 1);
  const double cy = 0.5 * (img.height - 1);
  const double m = e.magnitude;
  const double s = static_cast<double>(sign);
  switch (e.kind) {
    case AugKind::kHorizontalShear:
      return detail::resample(img, [=](double y, double x) {
        return std::pair{y, x + s * m * (y - cy)};
      });
    case AugKind::kVerticalShear:
      return detail::resample(img, [=](double y, double x) {
        return std::pair{y + s * m * (x - cx), x};
      });
    case AugKind::kHorizontalTranslate:
      return detail::resample(img, [=, w = img.width](double y, double x) {
        return std::pair{y, x + s * m * w};
      });
    case AugKind::kVerticalTranslate:
      return detail::resample(img, [=, h = img.height](double y, double x) {
        return std::pair{y + s * m * h, x};
      });
    case AugKind::kRotate: {
      const double a = s * m * std::numbers::pi / 180.0;
      const double ca = std::cos(a), sa = std::sin(a);
      return detail::resample(img, [=](double y, double x) {
        const double dx = x - cx, dy = y - cy;
        return std::pair{cy - sa * dx + ca * dy, cx + ca * dx + sa * dy};
      });
    }
    case AugKind::kColorAdjust: return detail::color_adjust(img, m);
    case AugKind::kPosterize: return detail::posterize(img, m);
    case AugKind::kSolarize: return detail::solarize(img, m);
    case AugKind::kContrast: return detail::contrast(img, m);
    case AugKind::kSharpness: return detail::sharpness(img, m);
    case AugKind::kBrightness:
      return detail::blend_toward(img, m, [](int, int, int) { return 0.0; });
    case AugKind::kAutoContrast: return detail::autocontrast(img);
    case AugKind::kEqualize: return detail::equalize(img);
    case AugKind::kInvert: return detail::invert(img);
  }
  throw std::logic_error("unreachable");
}

// First element applied first, then the second; one sign draw per element.
inline ImageBuffer apply_operation(const ImageBuffer& img,
                                   const AugOperation& op, int sign1,
                                   int sign2) {
  return apply_element(apply_element(img, op.first, sign1), op.second, sign2);
}

}  // namespace augsearch
