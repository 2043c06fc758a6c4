#include "peslab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pes {

void softmax_inplace(std::span<double> row) {
  double max = -std::numeric_limits<double>::infinity();
  for (double v : row) max = std::max(max, v);
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double& v : row) v /= sum;
}

Matrix softmax_rows(const Matrix& logits) {
  check_finite(logits, "softmax_rows input");
  Matrix out = logits;
  for (std::size_t i = 0; i < out.rows; ++i) softmax_inplace(out.row(i));
  return out;
}

double cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
  if (probs.rows != labels.size()) {
    throw std::invalid_argument("cross_entropy: probs rows != label count");
  }
  if (probs.rows == 0) throw std::invalid_argument("cross_entropy: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols) {
      throw std::invalid_argument("cross_entropy: label out of range");
    }
    total += -std::log(std::max(probs.at(i, static_cast<std::size_t>(y)), kLogClamp));
  }
  return total / static_cast<double>(probs.rows);
}

double cross_entropy(const Matrix& probs, const Matrix& soft_targets) {
  if (probs.rows != soft_targets.rows || probs.cols != soft_targets.cols) {
    throw std::invalid_argument("cross_entropy: shape mismatch");
  }
  if (probs.rows == 0) throw std::invalid_argument("cross_entropy: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows; ++i) {
    for (std::size_t k = 0; k < probs.cols; ++k) {
      const double t = soft_targets.at(i, k);
      if (t != 0.0) total += -t * std::log(std::max(probs.at(i, k), kLogClamp));
    }
  }
  return total / static_cast<double>(probs.rows);
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double sample_truncated_normal(double mean, double std, double lo, double hi,
                               SeededRng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("sample_truncated_normal: lo must be < hi");
  if (!(std > 0.0)) throw std::invalid_argument("sample_truncated_normal: std must be positive");
  const double mass = normal_cdf((hi - mean) / std) - normal_cdf((lo - mean) / std);
  if (mass < 1e-12) {
    throw std::invalid_argument(
        "sample_truncated_normal: interval mass below 1e-12; degenerate truncation");
  }
  for (;;) {
    const double x = mean + std * rng.next_normal();
    if (x >= lo && x <= hi) return x;
  }
}

double sample_gamma(double shape, SeededRng& rng) {
  if (!(shape > 0.0)) throw std::invalid_argument("sample_gamma: shape must be positive");
  if (shape < 1.0) {
    const double u = rng.next_double_open();
    return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_double_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta(double alpha, SeededRng& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("sample_beta: alpha must be positive");
  for (;;) {
    const double ga = sample_gamma(alpha, rng);
    const double gb = sample_gamma(alpha, rng);
    const double sum = ga + gb;
    if (sum > 0.0) return ga / sum;
  }
}

int sample_categorical(std::span<const double> probs, SeededRng& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_categorical: empty distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("sample_categorical: negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("sample_categorical: probabilities sum to " +
                                std::to_string(sum) + ", expected 1 within 1e-6");
  }
  const double u = rng.next_double() * sum;
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] > 0.0) last_positive = static_cast<int>(k);
    cum += probs[k];
    if (u < cum) return static_cast<int>(k);
  }
  return last_positive;
}

Matrix one_hot(const std::vector<int>& labels, int num_classes) {
  Matrix out(labels.size(), static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::invalid_argument("one_hot: label out of range");
    }
    out.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return out;
}

}  // namespace pes
