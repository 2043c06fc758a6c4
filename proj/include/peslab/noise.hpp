#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peslab/dataset.hpp"
#include "peslab/matrix.hpp"
#include "peslab/rng.hpp"

namespace pes {

// Row-stochastic flip-probability matrix: entry (i, j) is the probability
// that clean label i is observed as noisy label j.
struct TransitionMatrix {
  std::size_t k = 0;
  Matrix entries;  // k x k

  void validate() const;  // rows sum to 1 within 1e-9, entries in [0, 1]
};

enum class NoiseKind { kSymmetricIncl, kSymmetricExcl, kPairflip, kInstance };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSymmetricExcl;
  double rate = 0.0;  // alpha for class noise, tau for instance noise
  std::uint64_t seed = 0;
};

NoiseKind noise_kind_from_string(const std::string& name);
std::string to_string(NoiseKind kind);

// Rejects rates at or beyond the identifiability threshold for the kind
// (symmetric_excl: alpha < (k-1)/k; pairflip: alpha < 0.5; all: rate in [0,1)).
void validate_noise_spec(const NoiseSpec& spec, std::size_t k);

// exclude variant: diag 1-alpha, off-diag alpha/(k-1).
// include variant: diag 1-alpha*(k-1)/k, off-diag alpha/k.
TransitionMatrix symmetric_matrix(std::size_t k, double alpha, bool include_true);

// diag 1-alpha, entry (i, (i+1) mod k) = alpha, all else 0. Requires alpha < 0.5.
TransitionMatrix pairflip_matrix(std::size_t k, double alpha);

// Resamples each label independently from its row of T.
std::vector<int> apply_class_noise(const std::vector<int>& labels,
                                   const TransitionMatrix& t, SeededRng& rng);

// Feature-dependent noise: per-example flip rate q_i from a truncated normal
// around tau, per-class random projections, true class excluded from the
// softmax and given mass 1-q_i, noisy label drawn categorically.
std::vector<int> instance_noise(const Matrix& features, const std::vector<int>& labels,
                                double tau, SeededRng& rng,
                                std::size_t num_classes = 0);

// Same generator with flip rates supplied explicitly (q_i = 0 keeps label i
// unchanged); instance_noise samples q and delegates here.
std::vector<int> instance_noise_with_rates(const Matrix& features,
                                           const std::vector<int>& labels,
                                           const std::vector<double>& flip_rates,
                                           std::size_t num_classes, SeededRng& rng);

// The categorical flip distribution instance noise assigns to one example;
// exposed so feature dependence can be inspected directly.
std::vector<double> instance_flip_distribution(std::span<const double> x, int label,
                                               double flip_rate,
                                               const std::vector<Matrix>& projections);

// Applies a NoiseSpec to a dataset's noisy_labels in place (clean labels kept).
void apply_noise(Dataset& data, const NoiseSpec& spec);

}  // namespace pes
