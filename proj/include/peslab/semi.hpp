#pragma once

#include <optional>
#include <span>
#include <vector>

#include "peslab/confident.hpp"
#include "peslab/dataset.hpp"
#include "peslab/network.hpp"
#include "peslab/optimizer.hpp"

namespace pes {

struct SemiConfig {
  double lambda_u = 15.0;      // unlabeled loss weight
  double temperature = 0.5;    // sharpening temperature
  std::size_t k_aug = 2;       // augmentations per unlabeled guess
  double mix_alpha = 4.0;      // Beta parameter early in training
  double mix_alpha_late = 0.75;
  // Epoch at which mix_alpha switches to mix_alpha_late; defaults to half
  // the total budget when unset.
  std::optional<std::size_t> alpha_switch_epoch;
  std::size_t ramp_epochs = 16;  // linear lambda_u ramp; 0 disables the ramp
  std::size_t total_epochs = 10;
  std::size_t batch_size = 128;
  OptimizerState optimizer = make_adam(1e-3);

  void validate() const;
  double mix_alpha_for_epoch(std::size_t epoch) const;
  // lambda_u * min(1, epoch_number / ramp_epochs), epoch_number 1-based.
  double lambda_u_for_epoch(std::size_t epoch) const;
};

// p'_k = p_k^(1/T) / sum_j p_j^(1/T). Preserves the argmax for any T > 0.
std::vector<double> sharpen(std::span<const double> p, double temperature);

// Sharpened mean prediction over k_aug augmentations; no gradients involved.
std::vector<double> guess_labels(const PartitionedNetwork& net,
                                 std::span<const double> x, const Augmenter& aug,
                                 std::size_t k_aug, double temperature,
                                 SeededRng& rng);

// lambda' = max(lambda, 1 - lambda) with lambda ~ Beta(alpha, alpha), so the
// mix always leans toward the first argument.
double mixup_lambda(double alpha, SeededRng& rng);

// Convex combination with an explicit coefficient (the max convention is
// applied to it): out = lambda' * first + (1 - lambda') * second.
void mixup_pair_with_lambda(std::span<const double> x1, std::span<const double> t1,
                            std::span<const double> x2, std::span<const double> t2,
                            double lambda, std::vector<double>& x_out,
                            std::vector<double>& t_out, double* lambda_prime = nullptr);

void mixup_pair(std::span<const double> x1, std::span<const double> t1,
                std::span<const double> x2, std::span<const double> t2,
                double mix_alpha, SeededRng& rng, std::vector<double>& x_out,
                std::vector<double>& t_out, double* lambda_prime = nullptr);

// One mixed batch: labeled-mixed rows carry one-hot-derived targets,
// unlabeled-mixed rows carry guessed targets. lambdas records the mixing
// coefficient of each row (always >= 0.5).
struct MixedBatch {
  Matrix inputs;
  Matrix targets;
  std::vector<bool> is_labeled;
  std::vector<double> lambdas;
};

// Throws unless every target row is on the simplex and every lambda >= 0.5.
void validate_mixed_batch(const MixedBatch& batch);

// L = CE(labeled rows) + lambda_u_eff * MSE(unlabeled rows), both terms
// means over their own rows; MSE is (1/K)*||p - t||^2 at probability level.
// Fills `grads` with the exact gradient when non-null.
double mixmatch_loss(const PartitionedNetwork& net, const MixedBatch& batch,
                     double lambda_u_effective, Gradients* grads = nullptr);

struct SemiEpochStats {
  std::size_t epoch = 0;
  std::size_t labeled_count = 0;
  std::size_t unlabeled_count = 0;
  double mean_loss = 0.0;
  double lambda_u_effective = 0.0;
  std::optional<double> eval_accuracy;
};

// MixMatch-style refinement: each epoch re-extracts the confident split with
// the current network, then trains on mixed labeled/unlabeled batches.
// `initial_split` must have a nonempty labeled set; eval_data, when given,
// is scored after every epoch for reporting only.
std::vector<SemiEpochStats> train_semi(PartitionedNetwork& net,
                                       const ConfidentSplit& initial_split,
                                       const Dataset& data, const SemiConfig& config,
                                       const Augmenter& aug, const SeededRng& rng,
                                       const Dataset* eval_data = nullptr);

}  // namespace pes
