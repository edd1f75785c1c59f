#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "augsearch/data.hpp"
#include "augsearch/rng.hpp"

namespace augsearch {

// Built-in classifier architectures. Both are small fixed layouts so the
// training engine stays model-agnostic behind this enum.
//   mlp:      flatten -> dense 64 -> relu -> dense classes
//   smallcnn: conv3x3 16 -> relu -> maxpool2 -> conv3x3 32 -> relu
//             -> maxpool2 -> dense classes        (convs are pad-1 "same")
enum class ModelKind { kMlp, kSmallCnn };

inline constexpr int kMlpHidden = 64;
inline constexpr int kCnnC1 = 16;
inline constexpr int kCnnC2 = 32;

inline const char* model_kind_name(ModelKind k) {
  return k == ModelKind::kMlp ? "mlp" : "smallcnn";
}

inline ModelKind model_kind_from_name(const std::string& name) {
  if (name == "mlp") return ModelKind::kMlp;
  if (name == "smallcnn") return ModelKind::kSmallCnn;
  throw std::invalid_argument("unknown model kind: " + name);
}

struct LayerSpec {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t count = 0;
};

// Flat parameter vector plus layer layout metadata.
struct ModelWeights {
  ModelKind kind = ModelKind::kMlp;
  int input_h = 0, input_w = 0, input_c = 0, num_classes = 0;
  std::vector<LayerSpec> layout;
  std::vector<double> values;

  double* layer(std::size_t i) { return values.data() + layout[i].offset; }
  const double* layer(std::size_t i) const {
    return values.data() + layout[i].offset;
  }
  std::size_t input_dim() const {
    return static_cast<std::size_t>(input_h) * input_w * input_c;
  }
};

struct NonFiniteLossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void validate_weights(const ModelWeights& w) {
  for (double v : w.values)
    if (!std::isfinite(v))
      throw NonFiniteLossError("non-finite model weight detected");
}

struct TrainHyper {
  double base_lr = 0.2;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int warmup_steps = 0;
  double warmup_start = 0.0;
  int total_steps = 0;
  int batch_size = 256;

  void validate() const {
    if (base_lr <= 0.0) throw std::invalid_argument("base_lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
      throw std::invalid_argument("momentum must be in [0, 1)");
    if (weight_decay < 0.0)
      throw std::invalid_argument("weight_decay must be >= 0");
    if (warmup_steps < 0 || warmup_steps > total_steps)
      throw std::invalid_argument("warmup_steps must be <= total_steps");
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be > 0");
  }
};

// Standardized float inputs in CHW layout, one image per row.
struct Batch {
  int count = 0;
  int height = 0, width = 0, channels = 0;
  std::vector<double> inputs;  // count * channels*height*width
  std::vector<int> labels;

  std::size_t image_dim() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
};

// --- layer primitives -------------------------------------------------------

namespace layers {

// out[n][o] = b[o] + sum_i in[n][i] * w[o][i]
inline void dense_forward(const double* in, const double* w, const double* b,
                          double* out, int batch, int in_dim, int out_dim) {
  for (int n = 0; n < batch; ++n)
    for (int o = 0; o < out_dim; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in_dim;
      const double* x = in + static_cast<std::size_t>(n) * in_dim;
      for (int i = 0; i < in_dim; ++i) acc += row[i] * x[i];
      out[static_cast<std::size_t>(n) * out_dim + o] = acc;
    }
}

inline void dense_backward(const double* in, const double* w,
                           const double* dout, double* din, double* dw,
                           double* db, int batch, int in_dim, int out_dim) {
  for (int n = 0; n < batch; ++n) {
    const double* x = in + static_cast<std::size_t>(n) * in_dim;
    const double* dy = dout + static_cast<std::size_t>(n) * out_dim;
    for (int o = 0; o < out_dim; ++o) {
      const double g = dy[o];
      db[o] += g;
      double* dwrow = dw + static_cast<std::size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) dwrow[i] += g * x[i];
    }
    if (din) {
      double* dx = din + static_cast<std::size_t>(n) * in_dim;
      for (int i = 0; i < in_dim; ++i) {
        double acc = 0.0;
        for (int o = 0; o < out_dim; ++o)
          acc += w[static_cast<std::size_t>(o) * in_dim + i] * dy[o];
        dx[i] = acc;
      }
    }
  }
}

inline void relu_forward(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

// `pre` is the pre-activation that gated the forward pass.
inline void relu_backward(const double* pre, const double* dout, double* din,
                          std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) din[i] = pre[i] > 0.0 ? dout[i] : 0.0;
}

// 3x3 convolution, stride 1, zero padding 1 ("same"). Tensors are CHW.
inline void conv3x3_forward(const double* in, const double* w, const double* b,
                            double* out, int batch, int h, int wd, int cin,
                            int cout) {
  const std::size_t in_img = static_cast<std::size_t>(cin) * h * wd;
  const std::size_t out_img = static_cast<std::size_t>(cout) * h * wd;
  for (int n = 0; n < batch; ++n)
    for (int co = 0; co < cout; ++co)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x) {
          double acc = b[co];
          for (int ci = 0; ci < cin; ++ci) {
            const double* plane = in + n * in_img +
                                  static_cast<std::size_t>(ci) * h * wd;
            const double* ker =
                w + (static_cast<std::size_t>(co) * cin + ci) * 9;
            for (int dy = -1; dy <= 1; ++dy) {
              const int sy = y + dy;
              if (sy < 0 || sy >= h) continue;
              for (int dx = -1; dx <= 1; ++dx) {
                const int sx = x + dx;
                if (sx < 0 || sx >= wd) continue;
                acc += plane[sy * wd + sx] * ker[(dy + 1) * 3 + (dx + 1)];
              }
            }
          }
          out[n * out_img + (static_cast<std::size_t>(co) * h + y) * wd + x] =
              acc;
        }
}

inline void conv3x3_backward(const double* in, const double* w,
                             const double* dout, double* din, double* dw,
                             double* db, int batch, int h, int wd, int cin,
                             int cout) {
  const std::size_t in_img = static_cast<std::size_t>(cin) * h * wd;
  const std::size_t out_img = static_cast<std::size_t>(cout) * h * wd;
  for (int n = 0; n < batch; ++n)
    for (int co = 0; co < cout; ++co)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x) {
          const double g =
              dout[n * out_img + (static_cast<std::size_t>(co) * h + y) * wd + x];
          db[co] += g;
          for (int ci = 0; ci < cin; ++ci) {
            const double* plane =
                in + n * in_img + static_cast<std::size_t>(ci) * h * wd;
            double* dplane =
                din ? din + n * in_img + static_cast<std::size_t>(ci) * h * wd
                    : nullptr;
            const std::size_t kbase =
                (static_cast<std::size_t>(co) * cin + ci) * 9;
            for (int dy = -1; dy <= 1; ++dy) {
              const int sy = y + dy;
              if (sy < 0 || sy >= h) continue;
              for (int dx = -1; dx <= 1; ++dx) {
                const int sx = x + dx;
                if (sx < 0 || sx >= wd) continue;
                const std::size_t ki = kbase + (dy + 1) * 3 + (dx + 1);
                dw[ki] += g * plane[sy * wd + sx];
                if (dplane) dplane[sy * wd + sx] += g * w[ki];
              }
            }
          }
        }
}

// 2x2 max pooling, stride 2, floor division on odd sizes. `argmax` stores the
// flat index into `in` of each selected element.
inline void maxpool2_forward(const double* in, double* out,
                             std::size_t* argmax, int batch, int h, int wd,
                             int channels) {
  const int oh = h / 2, ow = wd / 2;
  const std::size_t in_img = static_cast<std::size_t>(channels) * h * wd;
  const std::size_t out_img = static_cast<std::size_t>(channels) * oh * ow;
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          std::size_t best = n * in_img +
                             (static_cast<std::size_t>(c) * h + 2 * y) * wd +
                             2 * x;
          double best_v = in[best];
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx =
                  n * in_img +
                  (static_cast<std::size_t>(c) * h + 2 * y + dy) * wd + 2 * x +
                  dx;
              if (in[idx] > best_v) {
                best_v = in[idx];
                best = idx;
              }
            }
          const std::size_t oidx =
              n * out_img + (static_cast<std::size_t>(c) * oh + y) * ow + x;
          out[oidx] = best_v;
          argmax[oidx] = best;
        }
}

inline void maxpool2_backward(const std::size_t* argmax, const double* dout,
                              double* din, std::size_t out_len) {
  for (std::size_t i = 0; i < out_len; ++i) din[argmax[i]] += dout[i];
}

// Mean softmax cross-entropy over the batch. When dscores is non-null it
// receives d(loss)/d(scores).
inline double softmax_cross_entropy(const double* scores, const int* labels,
                                    int batch, int classes, double* dscores) {
  double loss = 0.0;
  for (int n = 0; n < batch; ++n) {
    const double* row = scores + static_cast<std::size_t>(n) * classes;
    double mx = row[0];
    for (int c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (int c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    const double logz = std::log(z) + mx;
    loss += logz - row[labels[n]];
    if (dscores) {
      double* drow = dscores + static_cast<std::size_t>(n) * classes;
      for (int c = 0; c < classes; ++c)
        drow[c] = std::exp(row[c] - logz) / batch;
      drow[labels[n]] -= 1.0 / batch;
    }
  }
  return loss / batch;
}

}  // namespace layers

// --- model construction -------------------------------------------------------

namespace detail {

inline void push_layer(ModelWeights* w, const std::string& name,
                       std::vector<int> shape) {
  LayerSpec spec;
  spec.name = name;
  spec.shape = std::move(shape);
  spec.count = 1;
  for (int d : spec.shape) spec.count *= static_cast<std::size_t>(d);
  spec.offset = w->values.size();
  w->values.resize(spec.offset + spec.count, 0.0);
  w->layout.push_back(std::move(spec));
}

inline void build_layout(ModelWeights* w) {
  const int d = static_cast<int>(w->input_dim());
  if (w->kind == ModelKind::kMlp) {
    push_layer(w, "fc1.weight", {kMlpHidden, d});
    push_layer(w, "fc1.bias", {kMlpHidden});
    push_layer(w, "fc2.weight", {w->num_classes, kMlpHidden});
    push_layer(w, "fc2.bias", {w->num_classes});
  } else {
    const int h2 = w->input_h / 2, w2 = w->input_w / 2;
    const int h4 = h2 / 2, w4 = w2 / 2;
    if (h4 == 0 || w4 == 0)
      throw std::invalid_argument("input too small for smallcnn");
    push_layer(w, "conv1.weight", {kCnnC1, w->input_c, 3, 3});
    push_layer(w, "conv1.bias", {kCnnC1});
    push_layer(w, "conv2.weight", {kCnnC2, kCnnC1, 3, 3});
    push_layer(w, "conv2.bias", {kCnnC2});
    push_layer(w, "fc.weight", {w->num_classes, kCnnC2 * h4 * w4});
    push_layer(w, "fc.bias", {w->num_classes});
  }
}

}  // namespace detail

// Glorot-uniform weight init (biases zero), seeded per layer.
inline ModelWeights init_model(ModelKind kind, int h, int w, int c,
                               int num_classes, std::uint64_t seed) {
  if (h <= 0 || w <= 0 || (c != 1 && c != 3) || num_classes < 2)
    throw std::invalid_argument("bad model dimensions");
  ModelWeights model;
  model.kind = kind;
  model.input_h = h;
  model.input_w = w;
  model.input_c = c;
  model.num_classes = num_classes;
  detail::build_layout(&model);
  for (std::size_t li = 0; li < model.layout.size(); ++li) {
    const LayerSpec& spec = model.layout[li];
    if (spec.shape.size() < 2) continue;  // biases stay zero
    int fan_in, fan_out;
    if (spec.shape.size() == 2) {
      fan_out = spec.shape[0];
      fan_in = spec.shape[1];
    } else {  // conv [Co, Ci, 3, 3]
      fan_out = spec.shape[0] * spec.shape[2] * spec.shape[3];
      fan_in = spec.shape[1] * spec.shape[2] * spec.shape[3];
    }
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    RngStream rng(derive_seed(seed, StreamId::kModelInit, li));
    double* p = model.layer(li);
    for (std::size_t i = 0; i < spec.count; ++i)
      p[i] = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return model;
}

// Intermediate activations cached by forward for the backward pass.
struct ForwardCache {
  std::vector<double> pre1, act1;              // mlp hidden
  std::vector<double> conv1, relu1, pool1;     // cnn stage 1
  std::vector<std::size_t> pool1_arg;
  std::vector<double> conv2, relu2, pool2;     // cnn stage 2
  std::vector<std::size_t> pool2_arg;
};

// Per-class scores, batch-major (count x num_classes).
inline std::vector<double> forward(const ModelWeights& w, const Batch& batch,
                                   ForwardCache* cache = nullptr) {
  if (batch.height != w.input_h || batch.width != w.input_w ||
      batch.channels != w.input_c)
    throw std::invalid_argument("batch shape does not match model input");
  const int b = batch.count;
  const int d = static_cast<int>(w.input_dim());
  std::vector<double> scores(static_cast<std::size_t>(b) * w.num_classes);
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  if (w.kind == ModelKind::kMlp) {
    c.pre1.assign(static_cast<std::size_t>(b) * kMlpHidden, 0.0);
    c.act1.assign(c.pre1.size(), 0.0);
    layers::dense_forward(batch.inputs.data(), w.layer(0), w.layer(1),
                          c.pre1.data(), b, d, kMlpHidden);
    layers::relu_forward(c.pre1.data(), c.act1.data(), c.pre1.size());
    layers::dense_forward(c.act1.data(), w.layer(2), w.layer(3), scores.data(),
                          b, kMlpHidden, w.num_classes);
  } else {
    const int h = w.input_h, wd = w.input_w;
    const int h2 = h / 2, w2 = wd / 2, h4 = h2 / 2, w4 = w2 / 2;
    c.conv1.assign(static_cast<std::size_t>(b) * kCnnC1 * h * wd, 0.0);
    layers::conv3x3_forward(batch.inputs.data(), w.layer(0), w.layer(1),
                            c.conv1.data(), b, h, wd, w.input_c, kCnnC1);
    c.relu1.assign(c.conv1.size(), 0.0);
    layers::relu_forward(c.conv1.data(), c.relu1.data(), c.conv1.size());
    c.pool1.assign(static_cast<std::size_t>(b) * kCnnC1 * h2 * w2, 0.0);
    c.pool1_arg.assign(c.pool1.size(), 0);
    layers::maxpool2_forward(c.relu1.data(), c.pool1.data(), c.pool1_arg.data(),
                             b, h, wd, kCnnC1);
    c.conv2.assign(static_cast<std::size_t>(b) * kCnnC2 * h2 * w2, 0.0);
    layers::conv3x3_forward(c.pool1.data(), w.layer(2), w.layer(3),
                            c.conv2.data(), b, h2, w2, kCnnC1, kCnnC2);
    c.relu2.assign(c.conv2.size(), 0.0);
    layers::relu_forward(c.conv2.data(), c.relu2.data(), c.conv2.size());
    c.pool2.assign(static_cast<std::size_t>(b) * kCnnC2 * h4 * w4, 0.0);
    c.pool2_arg.assign(c.pool2.size(), 0);
    layers::maxpool2_forward(c.relu2.data(), c.pool2.data(), c.pool2_arg.data(),
                             b, h2, w2, kCnnC2);
    layers::dense_forward(c.pool2.data(), w.layer(4), w.layer(5), scores.data(),
                          b, kCnnC2 * h4 * w4, w.num_classes);
  }
  return scores;
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean cross-entropy loss and its gradient with respect to every weight.
inline LossGrad loss_and_grad(const ModelWeights& w, const Batch& batch) {
  ForwardCache cache;
  const std::vector<double> scores = forward(w, batch, &cache);
  const int b = batch.count;
  std::vector<double> dscores(scores.size());
  LossGrad out;
  out.loss = layers::softmax_cross_entropy(scores.data(), batch.labels.data(),
                                           b, w.num_classes, dscores.data());
  if (!std::isfinite(out.loss))
    throw NonFiniteLossError("loss is not finite");
  out.grad.assign(w.values.size(), 0.0);
  auto g = [&](std::size_t i) { return out.grad.data() + w.layout[i].offset; };
  const int d = static_cast<int>(w.input_dim());
  if (w.kind == ModelKind::kMlp) {
    std::vector<double> dact1(cache.act1.size());
    layers::dense_backward(cache.act1.data(), w.layer(2), dscores.data(),
                           dact1.data(), g(2), g(3), b, kMlpHidden,
                           w.num_classes);
    std::vector<double> dpre1(cache.pre1.size());
    layers::relu_backward(cache.pre1.data(), dact1.data(), dpre1.data(),
                          dpre1.size());
    layers::dense_backward(batch.inputs.data(), w.layer(0), dpre1.data(),
                           nullptr, g(0), g(1), b, d, kMlpHidden);
  } else {
    const int h = w.input_h, wd = w.input_w;
    const int h2 = h / 2, w2 = wd / 2, h4 = h2 / 2, w4 = w2 / 2;
    std::vector<double> dpool2(cache.pool2.size());
    layers::dense_backward(cache.pool2.data(), w.layer(4), dscores.data(),
                           dpool2.data(), g(4), g(5), b, kCnnC2 * h4 * w4,
                           w.num_classes);
    std::vector<double> drelu2(cache.relu2.size(), 0.0);
    layers::maxpool2_backward(cache.pool2_arg.data(), dpool2.data(),
                              drelu2.data(), dpool2.size());
    std::vector<double> dconv2(cache.conv2.size());
    layers::relu_backward(cache.conv2.data(), drelu2.data(), dconv2.data(),
                          dconv2.size());
    std::vector<double> dpool1(cache.pool1.size(), 0.0);
    layers::conv3x3_backward(cache.pool1.data(), w.layer(2), dconv2.data(),
                             dpool1.data(), g(2), g(3), b, h2, w2, kCnnC1,
                             kCnnC2);
    std::vector<double> drelu1(cache.relu1.size(), 0.0);
    layers::maxpool2_backward(cache.pool1_arg.data(), dpool1.data(),
                              drelu1.data(), dpool1.size());
    std::vector<double> dconv1(cache.conv1.size());
    layers::relu_backward(cache.conv1.data(), drelu1.data(), dconv1.data(),
                          dconv1.size());
    layers::conv3x3_backward(batch.inputs.data(), w.layer(0), dconv1.data(),
                             nullptr, g(0), g(1), b, h, wd, w.input_c, kCnnC1);
  }
  return out;
}

// Momentum SGD with coupled weight decay:
//   v <- momentum * v + (grad + weight_decay * w);  w <- w - lr * v
inline void sgd_step(ModelWeights& w, const std::vector<double>& grad,
                     std::vector<double>& velocity, double lr,
                     const TrainHyper& hyper) {
  if (grad.size() != w.values.size() || velocity.size() != w.values.size())
    throw std::invalid_argument("gradient/velocity length mismatch");
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    if (!std::isfinite(grad[i]))
      throw NonFiniteLossError("non-finite gradient component");
    velocity[i] = hyper.momentum * velocity[i] +
                  (grad[i] + hyper.weight_decay * w.values[i]);
    w.values[i] -= lr * velocity[i];
  }
}

// Linear warmup from warmup_start to base_lr, then cosine decay to 0 over the
// remaining steps.
inline double cosine_lr(int step, const TrainHyper& hyper) {
  if (step < 0 || step >= hyper.total_steps)
    throw std::invalid_argument("step out of schedule range");
  if (step < hyper.warmup_steps)
    return hyper.warmup_start + (hyper.base_lr - hyper.warmup_start) *
                                    static_cast<double>(step) /
                                    static_cast<double>(hyper.warmup_steps);
  const double progress =
      static_cast<double>(step - hyper.warmup_steps) /
      static_cast<double>(hyper.total_steps - hyper.warmup_steps);
  return hyper.base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

// Fraction of argmax-correct predictions; ties broken toward the lowest class
// index. `subset`, when given, restricts evaluation to those dataset indices.
inline double evaluate_accuracy(const ModelWeights& w, const Dataset& val,
                                const ChannelStats& stats,
                                const std::vector<int>* subset = nullptr,
                                int chunk = 256) {
  const std::size_t n = subset ? subset->size() : val.size();
  if (n == 0) throw std::invalid_argument("empty validation set");
  std::size_t correct = 0;
  Batch batch;
  batch.height = w.input_h;
  batch.width = w.input_w;
  batch.channels = w.input_c;
  for (std::size_t start = 0; start < n; start += chunk) {
    const int b = static_cast<int>(std::min<std::size_t>(chunk, n - start));
    batch.count = b;
    batch.inputs.assign(static_cast<std::size_t>(b) * w.input_dim(), 0.0);
    batch.labels.resize(b);
    for (int j = 0; j < b; ++j) {
      const std::size_t idx = subset ? static_cast<std::size_t>((*subset)[start + j])
                                     : start + j;
      standardize_into(val.images[idx], stats,
                       batch.inputs.data() + j * w.input_dim());
      batch.labels[j] = val.labels[idx];
    }
    const std::vector<double> scores = forward(w, batch);
    for (int j = 0; j < b; ++j) {
      const double* row = scores.data() + static_cast<std::size_t>(j) * w.num_classes;
      int best = 0;
      for (int c = 1; c < w.num_classes; ++c)
        if (row[c] > row[best]) best = c;
      if (best == batch.labels[j]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

// --- checkpoint format --------------------------------------------------------
//
// Text header (model kind, input shape, classes, layer table), a "data" line,
// then the flat weights as little-endian 64-bit floats.

inline void save_checkpoint(const std::string& path, const ModelWeights& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os << "augsearch-checkpoint v1\n";
  os << "model " << model_kind_name(w.kind) << '\n';
  os << "input " << w.input_h << ' ' << w.input_w << ' ' << w.input_c << '\n';
  os << "classes " << w.num_classes << '\n';
  for (const LayerSpec& l : w.layout) {
    os << "layer " << l.name;
    for (int d : l.shape) os << ' ' << d;
    os << '\n';
  }
  os << "data\n";
  static_assert(sizeof(double) == 8);
  for (double v : w.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    char buf[8];
    for (int i = 0; i < 8; ++i)
      buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    os.write(buf, 8);
  }
}

inline ModelWeights load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "augsearch-checkpoint v1")
    throw std::runtime_error("bad checkpoint magic in " + path);
  ModelWeights w;
  std::vector<LayerSpec> declared;
  while (std::getline(is, line)) {
    if (line == "data") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "model") {
      std::string name;
      ls >> name;
      w.kind = model_kind_from_name(name);
    } else if (key == "input") {
      ls >> w.input_h >> w.input_w >> w.input_c;
    } else if (key == "classes") {
      ls >> w.num_classes;
    } else if (key == "layer") {
      LayerSpec spec;
      ls >> spec.name;
      int d;
      while (ls >> d) spec.shape.push_back(d);
      declared.push_back(std::move(spec));
    } else {
      throw std::runtime_error("unknown checkpoint header line: " + line);
    }
  }
  detail::build_layout(&w);
  if (declared.size() != w.layout.size())
    throw std::runtime_error("checkpoint layer table does not match model");
  for (std::size_t i = 0; i < declared.size(); ++i)
    if (declared[i].name != w.layout[i].name ||
        declared[i].shape != w.layout[i].shape)
      throw std::runtime_error("checkpoint layer mismatch at " +
                               declared[i].name);
  for (double& v : w.values) {
    char buf[8];
    is.read(buf, 8);
    if (is.gcount() != 8) throw std::runtime_error("truncated checkpoint data");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i]))
              << (8 * i);
    std::memcpy(&v, &bits, 8);
  }
  validate_weights(w);
  return w;
}

}  // namespace augsearch
