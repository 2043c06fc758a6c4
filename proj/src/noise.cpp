#include "peslab/noise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "peslab/numerics.hpp"

namespace pes {

void TransitionMatrix::validate() const {
  if (entries.rows != k || entries.cols != k || k < 2) {
    throw std::invalid_argument("transition matrix must be k x k with k >= 2");
  }
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = entries.at(i, j);
      if (v < 0.0 || v > 1.0) {
        throw std::invalid_argument("transition entry outside [0,1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("transition row " + std::to_string(i) +
                                  " sums to " + std::to_string(sum));
    }
  }
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "symmetric_incl") return NoiseKind::kSymmetricIncl;
  if (name == "symmetric_excl") return NoiseKind::kSymmetricExcl;
  if (name == "pairflip") return NoiseKind::kPairflip;
  if (name == "instance") return NoiseKind::kInstance;
  throw std::invalid_argument("unknown noise kind: " + name);
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kSymmetricIncl: return "symmetric_incl";
    case NoiseKind::kSymmetricExcl: return "symmetric_excl";
    case NoiseKind::kPairflip: return "pairflip";
    case NoiseKind::kInstance: return "instance";
  }
  throw std::logic_error("invalid noise kind");
}

void validate_noise_spec(const NoiseSpec& spec, std::size_t k) {
  if (k < 2) throw std::invalid_argument("noise: need at least 2 classes");
  if (spec.rate < 0.0 || spec.rate >= 1.0) {
    throw std::invalid_argument("noise rate must lie in [0,1)");
  }
  const double kd = static_cast<double>(k);
  if (spec.kind == NoiseKind::kSymmetricExcl && spec.rate >= (kd - 1.0) / kd) {
    throw std::invalid_argument("symmetric_excl rate must be below (k-1)/k");
  }
  if (spec.kind == NoiseKind::kPairflip && spec.rate >= 0.5) {
    throw std::invalid_argument("pairflip rate must be below 0.5");
  }
}

TransitionMatrix symmetric_matrix(std::size_t k, double alpha, bool include_true) {
  if (k < 2) throw std::invalid_argument("symmetric_matrix: k must be >= 2");
  NoiseSpec spec{include_true ? NoiseKind::kSymmetricIncl : NoiseKind::kSymmetricExcl,
                 alpha, 0};
  validate_noise_spec(spec, k);
  const double kd = static_cast<double>(k);
  TransitionMatrix t;
  t.k = k;
  t.entries = Matrix(k, k);
  const double off = include_true ? alpha / kd : alpha / (kd - 1.0);
  const double diag = include_true ? 1.0 - alpha * (kd - 1.0) / kd : 1.0 - alpha;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) t.entries.at(i, j) = i == j ? diag : off;
  }
  t.validate();
  return t;
}

TransitionMatrix pairflip_matrix(std::size_t k, double alpha) {
  if (k < 2) throw std::invalid_argument("pairflip_matrix: k must be >= 2");
  NoiseSpec spec{NoiseKind::kPairflip, alpha, 0};
  validate_noise_spec(spec, k);
  TransitionMatrix t;
  t.k = k;
  t.entries = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    t.entries.at(i, i) = 1.0 - alpha;
    t.entries.at(i, (i + 1) % k) += alpha;  // += so k=2 stays row-stochastic
  }
  t.validate();
  return t;
}

std::vector<int> apply_class_noise(const std::vector<int>& labels,
                                   const TransitionMatrix& t, SeededRng& rng) {
  t.validate();
  std::vector<int> noisy(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= t.k) {
      throw std::invalid_argument("apply_class_noise: label out of range at row " +
                                  std::to_string(i));
    }
    noisy[i] = sample_categorical(t.entries.row(static_cast<std::size_t>(y)), rng);
  }
  return noisy;
}

std::vector<double> instance_flip_distribution(std::span<const double> x, int label,
                                               double flip_rate,
                                               const std::vector<Matrix>& projections) {
  const std::size_t k = projections.size();
  const Matrix& w = projections[static_cast<std::size_t>(label)];
  if (w.rows != x.size() || w.cols != k) {
    throw std::invalid_argument("instance noise: projection shape mismatch");
  }
  // p = x * w_{y}; true class dropped from the softmax (the -inf convention),
  // its mass set to 1 - q afterwards.
  std::vector<double> p(k, 0.0);
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double xv = x[d];
    if (xv == 0.0) continue;
    const double* wrow = w.data.data() + d * k;
    for (std::size_t j = 0; j < k; ++j) p[j] += xv * wrow[j];
  }
  double max = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    if (static_cast<int>(j) != label) max = std::max(max, p[j]);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (static_cast<int>(j) == label) continue;
    p[j] = std::exp(p[j] - max);
    sum += p[j];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (static_cast<int>(j) == label) {
      p[j] = 1.0 - flip_rate;
    } else {
      p[j] = flip_rate * p[j] / sum;
    }
  }
  return p;
}

std::vector<int> instance_noise_with_rates(const Matrix& features,
                                           const std::vector<int>& labels,
                                           const std::vector<double>& flip_rates,
                                           std::size_t num_classes, SeededRng& rng) {
  if (features.cols == 0) {
    throw std::invalid_argument("instance noise: zero-dimensional features");
  }
  if (labels.size() != features.rows || flip_rates.size() != features.rows) {
    throw std::invalid_argument("instance noise: size mismatch");
  }
  // One d x k standard-normal projection per class, drawn up front.
  std::vector<Matrix> projections(num_classes);
  for (auto& w : projections) {
    w = Matrix(features.cols, num_classes);
    for (double& v : w.data) v = rng.next_normal();
  }
  std::vector<int> noisy(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::vector<double> p = instance_flip_distribution(
        features.row(i), labels[i], flip_rates[i], projections);
    noisy[i] = sample_categorical(p, rng);
  }
  return noisy;
}

std::vector<int> instance_noise(const Matrix& features, const std::vector<int>& labels,
                                double tau, SeededRng& rng, std::size_t num_classes) {
  NoiseSpec spec{NoiseKind::kInstance, tau, 0};
  std::size_t inferred = 0;
  for (int y : labels) {
    if (y < 0) throw std::invalid_argument("instance noise: negative label");
    inferred = std::max(inferred, static_cast<std::size_t>(y) + 1);
  }
  if (num_classes == 0) num_classes = inferred;
  if (num_classes < inferred) {
    throw std::invalid_argument("instance noise: label exceeds declared class count");
  }
  validate_noise_spec(spec, std::max<std::size_t>(num_classes, 2));
  std::vector<double> q(labels.size());
  for (double& v : q) v = sample_truncated_normal(tau, 0.1, 0.0, 1.0, rng);
  return instance_noise_with_rates(features, labels, q, num_classes, rng);
}

void apply_noise(Dataset& data, const NoiseSpec& spec) {
  validate_dataset(data);
  validate_noise_spec(spec, static_cast<std::size_t>(data.num_classes));
  SeededRng rng(spec.seed);
  switch (spec.kind) {
    case NoiseKind::kSymmetricIncl:
    case NoiseKind::kSymmetricExcl: {
      const TransitionMatrix t =
          symmetric_matrix(static_cast<std::size_t>(data.num_classes), spec.rate,
                           spec.kind == NoiseKind::kSymmetricIncl);
      data.noisy_labels = apply_class_noise(data.clean_labels, t, rng);
      break;
    }
    case NoiseKind::kPairflip: {
      const TransitionMatrix t =
          pairflip_matrix(static_cast<std::size_t>(data.num_classes), spec.rate);
      data.noisy_labels = apply_class_noise(data.clean_labels, t, rng);
      break;
    }
    case NoiseKind::kInstance: {
      data.noisy_labels =
          instance_noise(data.features, data.clean_labels, spec.rate, rng,
                         static_cast<std::size_t>(data.num_classes));
      break;
    }
  }
}

}  // namespace pes
