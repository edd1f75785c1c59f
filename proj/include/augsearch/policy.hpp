#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "augsearch/augment.hpp"
#include "augsearch/rng.hpp"

namespace augsearch {

// Parameters of the augmentation distribution: p_k is the sigmoid of theta_k
// normalized over all K components. Unlike a softmax this is not shift
// invariant: adding a constant to theta changes p.
struct PolicyParams {
  std::vector<double> theta;

  static PolicyParams zeros(std::size_t k = kNumOperations) {
    PolicyParams p;
    p.theta.assign(k, 0.0);
    return p;
  }

  std::size_t size() const { return theta.size(); }
};

// Per-operation draw counts accumulated over one trajectory's period.
struct SampleCounts {
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;

  explicit SampleCounts(std::size_t k = kNumOperations) : counts(k, 0) {}

  void add(std::size_t k) {
    counts[k]++;
    total++;
  }
  void reset() {
    std::fill(counts.begin(), counts.end(), 0);
    total = 0;
  }
};

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline void validate_params(const PolicyParams& p) {
  if (p.theta.empty()) throw std::invalid_argument("empty policy parameters");
  for (double t : p.theta)
    if (!std::isfinite(t))
      throw std::invalid_argument("non-finite policy parameter");
}

inline std::vector<double> probabilities(const PolicyParams& p) {
  validate_params(p);
  std::vector<double> out(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = sigmoid(p.theta[i]);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

// Multinomial sampler over a frozen distribution; inverse-CDF with one
// uniform draw per sample.
class PolicySampler {
 public:
  explicit PolicySampler(const PolicyParams& p) : cumulative_(probabilities(p)) {
    for (std::size_t i = 1; i < cumulative_.size(); ++i)
      cumulative_[i] += cumulative_[i - 1];
    cumulative_.back() = 1.0;
  }

  std::size_t sample(RngStream& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

inline std::size_t sample_operation(const PolicyParams& p, RngStream& rng) {
  return PolicySampler(p).sample(rng);
}

// Gradient of sum_k counts_k * log p_k with respect to theta. Component j:
//   counts_j * (1 - sigmoid(theta_j)) - total * sigmoid'(theta_j) / sum_i sigmoid(theta_i)
inline std::vector<double> log_prob_gradient(const PolicyParams& p,
                                             const SampleCounts& c) {
  validate_params(p);
  if (c.counts.size() != p.size())
    throw std::invalid_argument("counts length does not match parameters");
  if (c.total <= 0) throw std::invalid_argument("all-zero sample counts");
  double sum = 0.0;
  std::vector<double> sig(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    sig[i] = sigmoid(p.theta[i]);
    sum += sig[i];
  }
  std::vector<double> grad(p.size());
  const double total = static_cast<double>(c.total);
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double dsig = sig[j] * (1.0 - sig[j]);
    grad[j] = static_cast<double>(c.counts[j]) * (1.0 - sig[j]) -
              total * dsig / sum;
  }
  return grad;
}

// Row sums of the probability vector reshaped to S x S (operation index
// k = S * first + second): the distribution of the first element.
inline std::vector<double> marginal_first_element(const PolicyParams& p) {
  const auto probs = probabilities(p);
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(
      static_cast<double>(probs.size()))));
  if (side * side != probs.size())
    throw std::invalid_argument("parameter count is not a perfect square");
  std::vector<double> marginal(side, 0.0);
  for (std::size_t first = 0; first < side; ++first)
    for (std::size_t second = 0; second < side; ++second)
      marginal[first] += probs[first * side + second];
  return marginal;
}

inline double policy_entropy(const PolicyParams& p) {
  double h = 0.0;
  for (double q : probabilities(p))
    if (q > 0.0) h -= q * std::log(q);
  return h;
}

// --- snapshot / export formats -------------------------------------------
//
// Values are written with %.17g so a round trip through text is exact.

namespace detail {
inline std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_theta_csv(const std::string& path, const PolicyParams& p) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "k,theta\n";
  for (std::size_t k = 0; k < p.size(); ++k)
    os << k << ',' << detail::format_full(p.theta[k]) << '\n';
}

inline PolicyParams read_theta_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open snapshot: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "k,theta")
    throw std::runtime_error("malformed snapshot header in " + path);
  PolicyParams p;
  std::size_t expect = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("malformed snapshot row: " + line);
    if (std::stoull(line.substr(0, comma)) != expect)
      throw std::runtime_error("snapshot rows out of order at k=" +
                               std::to_string(expect));
    p.theta.push_back(std::stod(line.substr(comma + 1)));
    ++expect;
  }
  validate_params(p);
  return p;
}

inline void write_probability_csv(const std::string& path,
                                  const std::vector<double>& probs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "k,p\n";
  for (std::size_t k = 0; k < probs.size(); ++k)
    os << k << ',' << detail::format_full(probs[k]) << '\n';
}

inline std::vector<double> read_probability_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open csv: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "k,p")
    throw std::runtime_error("malformed probability csv header in " + path);
  std::vector<double> probs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    probs.push_back(std::stod(line.substr(comma + 1)));
  }
  return probs;
}

inline void write_marginal_csv(const std::string& path,
                               const std::vector<double>& marginal) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "first_element,p\n";
  for (std::size_t i = 0; i < marginal.size(); ++i)
    os << i << ',' << detail::format_full(marginal[i]) << '\n';
}

}  // namespace augsearch
