// Independent scalar oracles used to freeze expected values. Everything here
// is written directly from the operation contracts, without reusing the
// library's helpers, so agreement is a real check and not a tautology.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "augsearch/augment.hpp"
#include "augsearch/image.hpp"

namespace oracle {

using augsearch::AugKind;
using augsearch::ImageBuffer;

inline int round_clamp(double v) {
  // half away from zero
  double r = v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5);
  if (r < 0) r = 0;
  if (r > 255) r = 255;
  return static_cast<int>(r);
}

inline double pixel_or_fill(const ImageBuffer& img, int y, int x, int c) {
  if (y >= 0 && y < img.height && x >= 0 && x < img.width)
    return img.at(y, x, c);
  return 128.0;
}

inline double bilinear_sample(const ImageBuffer& img, double ys, double xs,
                              int c) {
  const int y0 = static_cast<int>(std::floor(ys));
  const int x0 = static_cast<int>(std::floor(xs));
  const double wy = ys - std::floor(ys);
  const double wx = xs - std::floor(xs);
  double acc = 0.0;
  acc += (1 - wy) * (1 - wx) * pixel_or_fill(img, y0, x0, c);
  acc += (1 - wy) * wx * pixel_or_fill(img, y0, x0 + 1, c);
  acc += wy * (1 - wx) * pixel_or_fill(img, y0 + 1, x0, c);
  acc += wy * wx * pixel_or_fill(img, y0 + 1, x0 + 1, c);
  return acc;
}

inline double gray_601(const ImageBuffer& img, int y, int x) {
  if (img.channels == 1) return img.at(y, x, 0);
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
         0.114 * img.at(y, x, 2);
}

// Direct per-kind evaluation of the element contracts.
inline ImageBuffer apply_element(const ImageBuffer& img, AugKind kind,
                                 double magnitude, int sign) {
  ImageBuffer out = img;
  const double cy = (img.height - 1) / 2.0;
  const double cx = (img.width - 1) / 2.0;

  auto geometric = [&](const std::function<void(double, double, double&,
                                                double&)>& src_of) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double ys = 0.0, xs = 0.0;
        src_of(static_cast<double>(y), static_cast<double>(x), ys, xs);
        for (int c = 0; c < img.channels; ++c)
          out.at(y, x, c) = static_cast<std::uint8_t>(
              round_clamp(bilinear_sample(img, ys, xs, c)));
      }
  };

  switch (kind) {
    case AugKind::kHorizontalShear:
      geometric([&](double y, double x, double& ys, double& xs) {
        ys = y;
        xs = x + sign * magnitude * (y - cy);
      });
      break;
    case AugKind::kVerticalShear:
      geometric([&](double y, double x, double& ys, double& xs) {
        ys = y + sign * magnitude * (x - cx);
        xs = x;
      });
      break;
    case AugKind::kHorizontalTranslate:
      geometric([&](double y, double x, double& ys, double& xs) {
        ys = y;
        xs = x + sign * magnitude * img.width;
      });
      break;
    case AugKind::kVerticalTranslate:
      geometric([&](double y, double x, double& ys, double& xs) {
        ys = y + sign * magnitude * img.height;
        xs = x;
      });
      break;
    case AugKind::kRotate: {
      const double rad = sign * magnitude * M_PI / 180.0;
      geometric([&](double y, double x, double& ys, double& xs) {
        const double dy = y - cy, dx = x - cx;
        ys = cy + std::cos(rad) * dy - std::sin(rad) * dx;
        xs = cx + std::sin(rad) * dy + std::cos(rad) * dx;
      });
      break;
    }
    case AugKind::kColorAdjust:
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
          const double g = gray_601(img, y, x);
          for (int c = 0; c < img.channels; ++c)
            out.at(y, x, c) = static_cast<std::uint8_t>(
                round_clamp(g + magnitude * (img.at(y, x, c) - g)));
        }
      break;
    case AugKind::kPosterize: {
      const int keep = static_cast<int>(magnitude);  // floor of 4.4/5.6/6.8
      const int drop = 8 - keep;
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          for (int c = 0; c < img.channels; ++c)
            out.at(y, x, c) = static_cast<std::uint8_t>(
                (img.at(y, x, c) >> drop) << drop);
      break;
    }
    case AugKind::kSolarize:
      for (auto& v : out.pixels)
        v = (v >= magnitude) ? static_cast<std::uint8_t>(255 - v) : v;
      break;
    case AugKind::kContrast: {
      double total = 0.0;
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) total += gray_601(img, y, x);
      const double mean = total / (img.height * img.width);
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          for (int c = 0; c < img.channels; ++c)
            out.at(y, x, c) = static_cast<std::uint8_t>(
                round_clamp(mean + magnitude * (img.at(y, x, c) - mean)));
      break;
    }
    case AugKind::kSharpness:
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          for (int c = 0; c < img.channels; ++c) {
            double degenerate;
            if (y == 0 || x == 0 || y == img.height - 1 ||
                x == img.width - 1) {
              degenerate = img.at(y, x, c);
            } else {
              degenerate = (img.at(y - 1, x - 1, c) + img.at(y - 1, x, c) +
                            img.at(y - 1, x + 1, c) + img.at(y, x - 1, c) +
                            5.0 * img.at(y, x, c) + img.at(y, x + 1, c) +
                            img.at(y + 1, x - 1, c) + img.at(y + 1, x, c) +
                            img.at(y + 1, x + 1, c)) /
                           13.0;
            }
            out.at(y, x, c) = static_cast<std::uint8_t>(round_clamp(
                degenerate + magnitude * (img.at(y, x, c) - degenerate)));
          }
      break;
    case AugKind::kBrightness:
      for (auto& v : out.pixels)
        v = static_cast<std::uint8_t>(round_clamp(magnitude * v));
      break;
    case AugKind::kAutoContrast:
      for (int c = 0; c < img.channels; ++c) {
        int lo = 256, hi = -1;
        for (int y = 0; y < img.height; ++y)
          for (int x = 0; x < img.width; ++x) {
            lo = std::min<int>(lo, img.at(y, x, c));
            hi = std::max<int>(hi, img.at(y, x, c));
          }
        if (lo >= hi) continue;
        for (int y = 0; y < img.height; ++y)
          for (int x = 0; x < img.width; ++x)
            out.at(y, x, c) = static_cast<std::uint8_t>(
                round_clamp(255.0 * (img.at(y, x, c) - lo) / (hi - lo)));
      }
      break;
    case AugKind::kEqualize:
      for (int c = 0; c < img.channels; ++c) {
        std::array<long, 256> hist{};
        for (int y = 0; y < img.height; ++y)
          for (int x = 0; x < img.width; ++x) hist[img.at(y, x, c)] += 1;
        int occupied = 0;
        for (long h : hist) occupied += (h > 0);
        if (occupied <= 1) continue;
        std::array<long, 256> cdf{};
        long acc = 0;
        for (int v = 0; v < 256; ++v) {
          acc += hist[v];
          cdf[v] = acc;
        }
        const double denom = static_cast<double>(cdf[255]);
        for (int y = 0; y < img.height; ++y)
          for (int x = 0; x < img.width; ++x)
            out.at(y, x, c) = static_cast<std::uint8_t>(
                round_clamp(255.0 * cdf[img.at(y, x, c)] / denom));
      }
      break;
    case AugKind::kInvert:
      for (auto& v : out.pixels) v = static_cast<std::uint8_t>(255 - v);
      break;
  }
  return out;
}

inline ImageBuffer apply_element(const ImageBuffer& img,
                                 const augsearch::AugElement& e, int sign) {
  return apply_element(img, e.kind, e.magnitude, sign);
}

// Plain per-component Adam ascent trace, kept separate from the library.
struct AdamTrace {
  std::vector<double> theta, m, v;
  double lr, b1, b2, eps;
  long t = 0;

  AdamTrace(std::vector<double> theta0, double lr_, double b1_, double b2_,
            double eps_)
      : theta(std::move(theta0)),
        m(theta.size(), 0.0),
        v(theta.size(), 0.0),
        lr(lr_),
        b1(b1_),
        b2(b2_),
        eps(eps_) {}

  void step(const std::vector<double>& g) {
    t += 1;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(b1, t));
      const double vh = v[i] / (1 - std::pow(b2, t));
      theta[i] += lr * mh / (std::sqrt(vh) + eps);
    }
  }
};

// Central finite differences of a scalar function of a vector.
inline std::vector<double> finite_difference(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double hi = f(x);
    x[i] = keep - h;
    const double lo = f(x);
    x[i] = keep;
    g[i] = (hi - lo) / (2 * h);
  }
  return g;
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < 1e-7) return std::abs(a - b);  // both essentially zero
  return std::abs(a - b) / scale;
}

}  // namespace oracle
