#pragma once

#include <span>
#include <vector>

#include "peslab/matrix.hpp"
#include "peslab/rng.hpp"

namespace pes {

// Probabilities are clamped at this floor inside log() to keep the loss
// finite on confidently wrong predictions.
inline constexpr double kLogClamp = 1e-12;

// Row-wise softmax, stabilized by per-row max subtraction.
Matrix softmax_rows(const Matrix& logits);

// In-place softmax of a single row.
void softmax_inplace(std::span<double> row);

// Mean cross-entropy against hard class labels.
double cross_entropy(const Matrix& probs, const std::vector<int>& labels);

// Mean cross-entropy against soft target rows (each on the simplex).
double cross_entropy(const Matrix& probs, const Matrix& soft_targets);

// Draw from N(mean, std^2) conditioned on [lo, hi] by rejection.
// Rejects intervals whose normal mass is below 1e-12.
double sample_truncated_normal(double mean, double std, double lo, double hi,
                               SeededRng& rng);

// Draw from the symmetric Beta(alpha, alpha); alpha must be positive.
double sample_beta(double alpha, SeededRng& rng);

// Gamma(shape, 1) via Marsaglia-Tsang; building block for sample_beta.
double sample_gamma(double shape, SeededRng& rng);

// Index k with probability probs[k]. The vector must be nonnegative and
// sum to 1 within 1e-6; it is renormalized internally.
int sample_categorical(std::span<const double> probs, SeededRng& rng);

// One-hot rows for hard labels.
Matrix one_hot(const std::vector<int>& labels, int num_classes);

}  // namespace pes
