#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "augsearch/policy.hpp"

namespace augsearch {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  double lr = 0.05;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t k = kNumOperations, double lr_ = 0.05,
                     double b1 = 0.5, double b2 = 0.999, double eps_ = 1e-8)
      : m(k, 0.0), v(k, 0.0), lr(lr_), beta1(b1), beta2(b2), eps(eps_) {}
};

// Score-function estimate of the validation-accuracy gradient with respect to
// theta, averaged over N trajectories. With the baseline enabled each
// trajectory's accuracy is shifted to zero mean before weighting, which makes
// the estimate invariant to constant accuracy offsets; with N = 1 the
// baseline absorbs everything and the gradient is exactly zero.
inline std::vector<double> reinforce_gradient(
    const PolicyParams& p, const std::vector<SampleCounts>& counts_per_traj,
    const std::vector<double>& accs, bool use_baseline = true) {
  if (counts_per_traj.empty())
    throw std::invalid_argument("need at least one trajectory");
  if (counts_per_traj.size() != accs.size())
    throw std::invalid_argument("counts/accuracies length mismatch");
  const std::size_t n = accs.size();
  double mean = 0.0;
  if (use_baseline) {
    for (double a : accs) mean += a;
    mean /= static_cast<double>(n);
  }
  std::vector<double> grad(p.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double weight = (accs[i] - mean) / static_cast<double>(n);
    if (weight == 0.0) continue;
    const std::vector<double> g = log_prob_gradient(p, counts_per_traj[i]);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += weight * g[k];
  }
  return grad;
}

// One bias-corrected Adam step in the ascent direction:
//   theta <- theta + lr * m_hat / (sqrt(v_hat) + eps)
inline void adam_ascent_step(PolicyParams& p, const std::vector<double>& grad,
                             AdamState& s) {
  if (grad.size() != p.size() || s.m.size() != p.size())
    throw std::invalid_argument("gradient/state length mismatch");
  for (double g : grad)
    if (!std::isfinite(g))
      throw std::invalid_argument("non-finite policy gradient");
  s.t += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t k = 0; k < p.size(); ++k) {
    s.m[k] = s.beta1 * s.m[k] + (1.0 - s.beta1) * grad[k];
    s.v[k] = s.beta2 * s.v[k] + (1.0 - s.beta2) * grad[k] * grad[k];
    const double m_hat = s.m[k] / bc1;
    const double v_hat = s.v[k] / bc2;
    p.theta[k] += s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace augsearch
