#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "augsearch/augment.hpp"
#include "augsearch/image.hpp"
#include "augsearch/rng.hpp"

namespace augsearch {

enum class SplitTag { kTrain, kVal, kTest };

struct Dataset {
  std::vector<ImageBuffer> images;
  std::vector<int> labels;
  int class_count = 0;
  SplitTag split_tag = SplitTag::kTrain;

  std::size_t size() const { return images.size(); }
};

inline void validate_dataset(const Dataset& d) {
  if (d.images.size() != d.labels.size())
    throw std::invalid_argument("images/labels length mismatch");
  for (int label : d.labels)
    if (label < 0 || label >= d.class_count)
      throw std::invalid_argument("label out of range");
}

// --- CIFAR-10 binary format ------------------------------------------------
//
// Record = 1 label byte + 3072 image bytes as three 1024-byte channel planes
// (R, G, B), each plane 32x32 row-major. Train split = data_batch_{1..5}.bin,
// test split = test_batch.bin, 10000 records per file.

inline constexpr int kCifarDim = 32;
inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 1024;
inline constexpr std::size_t kCifarRecordsPerFile = 10000;

inline void parse_cifar10_file(const std::string& path, Dataset* out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("missing CIFAR-10 batch file: " + path);
  std::vector<std::uint8_t> record(kCifarRecordBytes);
  for (std::size_t r = 0; r < kCifarRecordsPerFile; ++r) {
    is.read(reinterpret_cast<char*>(record.data()),
            static_cast<std::streamsize>(record.size()));
    if (static_cast<std::size_t>(is.gcount()) != record.size())
      throw std::runtime_error(
          "truncated record in " + path + " at byte offset " +
          std::to_string(r * kCifarRecordBytes + is.gcount()));
    const int label = record[0];
    if (label > 9)
      throw std::runtime_error("invalid label " + std::to_string(label) +
                               " in " + path + " at byte offset " +
                               std::to_string(r * kCifarRecordBytes));
    ImageBuffer img = ImageBuffer::filled(kCifarDim, kCifarDim, 3, 0);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < kCifarDim; ++y)
        for (int x = 0; x < kCifarDim; ++x)
          img.at(y, x, c) = record[1 + c * 1024 + y * kCifarDim + x];
    out->images.push_back(std::move(img));
    out->labels.push_back(label);
  }
}

inline std::pair<Dataset, Dataset> load_cifar10(const std::string& dir) {
  Dataset train, test;
  train.class_count = test.class_count = 10;
  train.split_tag = SplitTag::kTrain;
  test.split_tag = SplitTag::kTest;
  for (int i = 1; i <= 5; ++i)
    parse_cifar10_file(dir + "/data_batch_" + std::to_string(i) + ".bin",
                       &train);
  parse_cifar10_file(dir + "/test_batch.bin", &test);
  return {std::move(train), std::move(test)};
}

// Inverse of the parse; used by the round-trip test and fixture generation.
inline std::vector<std::uint8_t> serialize_cifar10_records(
    const Dataset& d, std::size_t begin, std::size_t end) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve((end - begin) * kCifarRecordBytes);
  for (std::size_t r = begin; r < end; ++r) {
    const ImageBuffer& img = d.images[r];
    if (img.height != kCifarDim || img.width != kCifarDim || img.channels != 3)
      throw std::invalid_argument("not a CIFAR-shaped image");
    bytes.push_back(static_cast<std::uint8_t>(d.labels[r]));
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < kCifarDim; ++y)
        for (int x = 0; x < kCifarDim; ++x) bytes.push_back(img.at(y, x, c));
  }
  return bytes;
}

// --- validation split -------------------------------------------------------

// Seeded Fisher-Yates shuffle; the last val_size records become the
// validation split. Disjoint and exhaustive by construction.
inline std::pair<Dataset, Dataset> split_validation(const Dataset& train,
                                                    std::size_t val_size,
                                                    std::uint64_t seed) {
  if (val_size == 0) throw std::invalid_argument("val_size must be positive");
  if (val_size >= train.size())
    throw std::invalid_argument("val_size " + std::to_string(val_size) +
                                " >= train size " +
                                std::to_string(train.size()));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(derive_seed(seed, StreamId::kSplit));
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = rng.uniform_int(i + 1);
    std::swap(order[i], order[j]);
  }
  Dataset head, tail;
  head.class_count = tail.class_count = train.class_count;
  head.split_tag = SplitTag::kTrain;
  tail.split_tag = SplitTag::kVal;
  const std::size_t cut = train.size() - val_size;
  for (std::size_t i = 0; i < train.size(); ++i) {
    Dataset& dst = (i < cut) ? head : tail;
    dst.images.push_back(train.images[order[i]]);
    dst.labels.push_back(train.labels[order[i]]);
  }
  return {std::move(head), std::move(tail)};
}

// --- fixed pre-processing pipeline ------------------------------------------

// Stage order is fixed: flip, pad+crop, policy operation, cutout. Validation
// images never pass through here; standardization happens at model input.
struct PreprocSpec {
  double flip_prob = 0.5;
  int pad = 4;
  int crop = 0;  // 0 = same as input size
  int cutout = 16;
  bool enable_flip = true;
  bool enable_pad_crop = true;
  bool enable_cutout = true;

  void validate(int input_h, int input_w) const {
    const int crop_size = crop > 0 ? crop : std::min(input_h, input_w);
    if (enable_pad_crop) {
      if (pad < 0) throw std::invalid_argument("pad must be >= 0");
      if (crop_size > input_h + 2 * pad || crop_size > input_w + 2 * pad)
        throw std::invalid_argument("crop exceeds padded size");
    }
    if (enable_cutout && cutout > crop_size)
      throw std::invalid_argument("cutout exceeds crop size");
    if (flip_prob < 0.0 || flip_prob > 1.0)
      throw std::invalid_argument("flip_prob must be in [0, 1]");
  }
};

namespace detail {

inline ImageBuffer hflip(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
  return out;
}

inline ImageBuffer pad_crop(const ImageBuffer& img, int pad, int crop,
                            RngStream& rng) {
  const int crop_h = crop > 0 ? crop : img.height;
  const int crop_w = crop > 0 ? crop : img.width;
  const int oy = static_cast<int>(rng.uniform_int(
      static_cast<std::uint64_t>(img.height + 2 * pad - crop_h + 1)));
  const int ox = static_cast<int>(rng.uniform_int(
      static_cast<std::uint64_t>(img.width + 2 * pad - crop_w + 1)));
  ImageBuffer out = ImageBuffer::filled(crop_h, crop_w, img.channels, 0);
  for (int y = 0; y < crop_h; ++y)
    for (int x = 0; x < crop_w; ++x) {
      const int sy = y + oy - pad;
      const int sx = x + ox - pad;
      if (sy < 0 || sy >= img.height || sx < 0 || sx >= img.width) continue;
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(sy, sx, c);
    }
  return out;
}

// Square of side `cut` centered at (cx, cy), filled with 128, clipped at the
// borders.
inline ImageBuffer cutout_at(const ImageBuffer& img, int cut, int cx, int cy) {
  ImageBuffer out = img;
  const int half = cut / 2;
  const int y0 = std::max(0, cy - half), y1 = std::min(img.height, cy - half + cut);
  const int x0 = std::max(0, cx - half), x1 = std::min(img.width, cx - half + cut);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = 128;
  return out;
}

inline ImageBuffer cutout(const ImageBuffer& img, int cut, RngStream& rng) {
  const int cx = static_cast<int>(rng.uniform_int(img.width));
  const int cy = static_cast<int>(rng.uniform_int(img.height));
  return cutout_at(img, cut, cx, cy);
}

}  // namespace detail

// Applies the training-time pipeline to one image. `rng` drives the basic
// pre-processing stages only (flip/crop/cutout); the policy operation and its
// sign draws come from the caller so trajectory weights depend on nothing but
// the sampled operations. `stage_log`, when given, records the applied stages.
inline ImageBuffer apply_pipeline(const ImageBuffer& img,
                                  const PreprocSpec& spec,
                                  const AugOperation& op, int sign1, int sign2,
                                  RngStream& rng,
                                  std::vector<std::string>* stage_log = nullptr) {
  spec.validate(img.height, img.width);
  ImageBuffer out = img;
  if (spec.enable_flip) {
    if (rng.bernoulli(spec.flip_prob)) out = detail::hflip(out);
    if (stage_log) stage_log->push_back("flip");
  }
  if (spec.enable_pad_crop) {
    out = detail::pad_crop(out, spec.pad, spec.crop, rng);
    if (stage_log) stage_log->push_back("pad_crop");
  }
  out = apply_operation(out, op, sign1, sign2);
  if (stage_log) stage_log->push_back("policy_op");
  if (spec.enable_cutout) {
    out = detail::cutout(out, spec.cutout, rng);
    if (stage_log) stage_log->push_back("cutout");
  }
  return out;
}

// --- synthetic bandit dataset ------------------------------------------------

// Two-class task whose label is which image half (top/bottom) is brighter.
// The designated destructive element flips which half is brighter and
// therefore flips the label; every other element shrinks the margin without
// changing its sign.
struct BanditSpec {
  int image_size = 12;
  int channels = 1;
  int class_count = 2;
  int samples = 512;           // even; half per class
  AugKind destructive = AugKind::kInvert;
  std::uint64_t seed = 0;
};

inline Dataset synthetic_bandit_dataset(const BanditSpec& spec) {
  if (spec.image_size < 2 || spec.image_size % 2 != 0)
    throw std::invalid_argument("image_size must be even and >= 2");
  if (spec.channels != 1 && spec.channels != 3)
    throw std::invalid_argument("channels must be 1 or 3");
  if (spec.class_count != 2)
    throw std::invalid_argument("bandit task is two-class");
  if (spec.samples <= 0 || spec.samples % 2 != 0)
    throw std::invalid_argument("samples must be positive and even");
  if (spec.destructive != AugKind::kInvert &&
      spec.destructive != AugKind::kVerticalTranslate)
    throw std::invalid_argument(
        "destructive kind must flip half brightness; supported: Invert, "
        "VerticalTranslate");
  Dataset d;
  d.class_count = 2;
  d.split_tag = SplitTag::kTrain;
  RngStream rng(derive_seed(spec.seed, StreamId::kSynthetic));
  const int n = spec.image_size;
  // Bright half in [138, 157], dark half in [98, 117]. The ranges are exact
  // mirror images under v -> 255 - v, so an inverted image of one class is
  // distributionally identical to the other class and inversion acts as pure
  // label noise; both ranges straddle the geometric fill level 128.
  auto draw = [&](bool bright) {
    const int lo = bright ? 138 : 98;
    return static_cast<std::uint8_t>(lo + rng.uniform_int(20));
  };
  for (int i = 0; i < spec.samples; ++i) {
    const int label = i % 2;  // exactly half per class
    const bool top_bright = (label == 1);
    ImageBuffer img = ImageBuffer::filled(n, n, spec.channels, 0);
    for (int y = 0; y < n; ++y) {
      const bool in_top = y < n / 2;
      for (int x = 0; x < n; ++x) {
        const std::uint8_t v = draw(in_top == top_bright);
        for (int c = 0; c < spec.channels; ++c) img.at(y, x, c) = v;
      }
    }
    d.images.push_back(std::move(img));
    d.labels.push_back(label);
  }
  return d;
}

// --- channel statistics -------------------------------------------------------

// Per-channel mean and population standard deviation of the training split,
// computed once after the validation split and applied at model input.
struct ChannelStats {
  int channels = 0;
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};
};

inline ChannelStats compute_channel_stats(const Dataset& train) {
  if (train.size() == 0) throw std::invalid_argument("empty dataset");
  ChannelStats s;
  s.channels = train.images.front().channels;
  std::array<double, 3> sum{}, sumsq{};
  std::size_t count = 0;
  for (const ImageBuffer& img : train.images) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < img.channels; ++c) {
          const double v = img.at(y, x, c);
          sum[c] += v;
          sumsq[c] += v * v;
        }
    count += static_cast<std::size_t>(img.height) * img.width;
  }
  for (int c = 0; c < s.channels; ++c) {
    s.mean[c] = sum[c] / static_cast<double>(count);
    const double var = sumsq[c] / static_cast<double>(count) - s.mean[c] * s.mean[c];
    s.stddev[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

// Writes standardized samples into `out` in channel-major (CHW) order,
// the tensor layout the model consumes.
inline void standardize_into(const ImageBuffer& img, const ChannelStats& stats,
                             double* out) {
  std::size_t i = 0;
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out[i++] = (img.at(y, x, c) - stats.mean[c]) / stats.stddev[c];
}

}  // namespace augsearch
