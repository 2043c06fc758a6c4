#include "peslab/semi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "peslab/numerics.hpp"

namespace pes {

void SemiConfig::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("semi: temperature must be positive");
  if (k_aug < 1) throw std::invalid_argument("semi: k_aug must be at least 1");
  if (lambda_u < 0.0) throw std::invalid_argument("semi: lambda_u must be nonnegative");
  if (!(mix_alpha > 0.0) || !(mix_alpha_late > 0.0)) {
    throw std::invalid_argument("semi: mix alpha values must be positive");
  }
  if (batch_size == 0) throw std::invalid_argument("semi: batch size must be positive");
}

double SemiConfig::mix_alpha_for_epoch(std::size_t epoch) const {
  const std::size_t sw = alpha_switch_epoch.value_or(total_epochs / 2);
  return epoch < sw ? mix_alpha : mix_alpha_late;
}

double SemiConfig::lambda_u_for_epoch(std::size_t epoch) const {
  if (ramp_epochs == 0) return lambda_u;
  const double frac =
      static_cast<double>(epoch + 1) / static_cast<double>(ramp_epochs);
  return lambda_u * std::min(1.0, frac);
}

std::vector<double> sharpen(std::span<const double> p, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("sharpen: temperature must be positive");
  std::vector<double> out(p.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < 0.0) throw std::invalid_argument("sharpen: negative probability");
    out[k] = std::pow(p[k], 1.0 / temperature);
    sum += out[k];
  }
  if (!(sum > 0.0)) {
    throw std::invalid_argument("sharpen: all probabilities vanish after exponentiation");
  }
  for (double& v : out) v /= sum;
  return out;
}

namespace {

// Shared by guess_labels and the training loop, which also needs one of the
// augmented views as the training input.
std::vector<double> guess_labels_impl(const PartitionedNetwork& net,
                                      std::span<const double> x, const Augmenter& aug,
                                      std::size_t k_aug, double temperature,
                                      SeededRng& rng,
                                      std::vector<double>* first_view) {
  if (k_aug < 1) throw std::invalid_argument("guess_labels: k_aug must be at least 1");
  const std::size_t k = net.output_dim();
  std::vector<double> mean(k, 0.0);
  for (std::size_t pass = 0; pass < k_aug; ++pass) {
    std::vector<double> xa = augment(x, aug, rng);
    Matrix row(1, xa.size());
    row.data = xa;
    Matrix logits = forward(net, row);
    softmax_inplace(logits.row(0));
    for (std::size_t j = 0; j < k; ++j) mean[j] += logits.at(0, j);
    if (pass == 0 && first_view) *first_view = std::move(xa);
  }
  for (double& v : mean) v /= static_cast<double>(k_aug);
  return sharpen(mean, temperature);
}

}  // namespace

std::vector<double> guess_labels(const PartitionedNetwork& net,
                                 std::span<const double> x, const Augmenter& aug,
                                 std::size_t k_aug, double temperature,
                                 SeededRng& rng) {
  return guess_labels_impl(net, x, aug, k_aug, temperature, rng, nullptr);
}

double mixup_lambda(double alpha, SeededRng& rng) {
  const double lambda = sample_beta(alpha, rng);
  return std::max(lambda, 1.0 - lambda);
}

void mixup_pair_with_lambda(std::span<const double> x1, std::span<const double> t1,
                            std::span<const double> x2, std::span<const double> t2,
                            double lambda, std::vector<double>& x_out,
                            std::vector<double>& t_out, double* lambda_prime) {
  if (x1.size() != x2.size() || t1.size() != t2.size()) {
    throw std::invalid_argument("mixup: shape mismatch");
  }
  const double lp = std::max(lambda, 1.0 - lambda);
  if (lambda_prime) *lambda_prime = lp;
  x_out.resize(x1.size());
  for (std::size_t j = 0; j < x1.size(); ++j) {
    x_out[j] = lp * x1[j] + (1.0 - lp) * x2[j];
  }
  t_out.resize(t1.size());
  for (std::size_t j = 0; j < t1.size(); ++j) {
    t_out[j] = lp * t1[j] + (1.0 - lp) * t2[j];
  }
}

void mixup_pair(std::span<const double> x1, std::span<const double> t1,
                std::span<const double> x2, std::span<const double> t2,
                double mix_alpha, SeededRng& rng, std::vector<double>& x_out,
                std::vector<double>& t_out, double* lambda_prime) {
  const double lambda = sample_beta(mix_alpha, rng);
  mixup_pair_with_lambda(x1, t1, x2, t2, lambda, x_out, t_out, lambda_prime);
}

void validate_mixed_batch(const MixedBatch& batch) {
  if (batch.inputs.rows != batch.targets.rows ||
      batch.inputs.rows != batch.is_labeled.size() ||
      batch.inputs.rows != batch.lambdas.size()) {
    throw std::invalid_argument("mixed batch: inconsistent row counts");
  }
  for (std::size_t i = 0; i < batch.targets.rows; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < batch.targets.cols; ++k) {
      const double t = batch.targets.at(i, k);
      if (t < -1e-12) throw std::invalid_argument("mixed batch: negative target");
      sum += t;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("mixed batch: target row off the simplex");
    }
    if (batch.lambdas[i] < 0.5) {
      throw std::invalid_argument("mixed batch: mixing coefficient below 0.5");
    }
  }
}

double mixmatch_loss(const PartitionedNetwork& net, const MixedBatch& batch,
                     double lambda_u_effective, Gradients* grads) {
  if (batch.inputs.rows == 0) throw std::invalid_argument("mixmatch_loss: empty batch");
  if (batch.inputs.rows != batch.targets.rows ||
      batch.is_labeled.size() != batch.inputs.rows) {
    throw std::invalid_argument("mixmatch_loss: inconsistent batch");
  }
  ForwardCache cache;
  const Matrix logits = forward(net, batch.inputs, &cache);
  if (logits.cols != batch.targets.cols) {
    throw std::invalid_argument("mixmatch_loss: target class count mismatch");
  }
  const Matrix probs = softmax_rows(logits);
  const std::size_t k = logits.cols;

  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  for (bool lab : batch.is_labeled) (lab ? n_labeled : n_unlabeled) += 1;

  double ce_sum = 0.0;
  double mse_sum = 0.0;
  for (std::size_t i = 0; i < probs.rows; ++i) {
    if (batch.is_labeled[i]) {
      for (std::size_t j = 0; j < k; ++j) {
        const double t = batch.targets.at(i, j);
        if (t != 0.0) ce_sum += -t * std::log(std::max(probs.at(i, j), kLogClamp));
      }
    } else {
      for (std::size_t j = 0; j < k; ++j) {
        const double d = probs.at(i, j) - batch.targets.at(i, j);
        mse_sum += d * d;
      }
    }
  }
  const double ce_mean = n_labeled ? ce_sum / static_cast<double>(n_labeled) : 0.0;
  const double mse_mean =
      n_unlabeled ? mse_sum / (static_cast<double>(n_unlabeled) * static_cast<double>(k))
                  : 0.0;
  const double loss = ce_mean + lambda_u_effective * mse_mean;

  if (grads) {
    Matrix dlogits(logits.rows, k);
    for (std::size_t i = 0; i < probs.rows; ++i) {
      if (batch.is_labeled[i]) {
        const double scale = 1.0 / static_cast<double>(n_labeled);
        for (std::size_t j = 0; j < k; ++j) {
          dlogits.at(i, j) =
              scale * (probs.at(i, j) - batch.targets.at(i, j));
        }
      } else if (lambda_u_effective != 0.0) {
        const double scale =
            lambda_u_effective / static_cast<double>(n_unlabeled);
        double dot = 0.0;
        std::vector<double> dp(k);
        for (std::size_t j = 0; j < k; ++j) {
          dp[j] = 2.0 / static_cast<double>(k) *
                  (probs.at(i, j) - batch.targets.at(i, j));
          dot += dp[j] * probs.at(i, j);
        }
        for (std::size_t j = 0; j < k; ++j) {
          dlogits.at(i, j) = scale * probs.at(i, j) * (dp[j] - dot);
        }
      }
    }
    *grads = backward_from_logit_grad(net, cache, dlogits);
  }
  return loss;
}

std::vector<SemiEpochStats> train_semi(PartitionedNetwork& net,
                                       const ConfidentSplit& initial_split,
                                       const Dataset& data, const SemiConfig& config,
                                       const Augmenter& aug, const SeededRng& rng,
                                       const Dataset* eval_data) {
  config.validate();
  validate_dataset(data);
  if (initial_split.labeled.empty()) {
    throw std::invalid_argument("train_semi: initial labeled set is empty");
  }
  const std::size_t k = net.output_dim();

  std::vector<SemiEpochStats> stats;
  OptimizerState opt = config.optimizer;
  for (std::size_t epoch = 0; epoch < config.total_epochs; ++epoch) {
    set_epoch(opt, epoch);
    SeededRng extract_rng = rng.split(2 * epoch);
    SeededRng batch_rng = rng.split(2 * epoch + 1);

    const ConfidentSplit split = extract_confident(net, data, aug, extract_rng);
    if (split.labeled.empty()) {
      throw std::runtime_error("train_semi: confident set became empty at epoch " +
                               std::to_string(epoch));
    }
    const double lambda_eff = config.lambda_u_for_epoch(epoch);
    const double alpha = config.mix_alpha_for_epoch(epoch);

    std::vector<std::size_t> labeled = split.labeled;
    shuffle(labeled, batch_rng);
    std::vector<std::size_t> unlabeled = split.unlabeled;
    shuffle(unlabeled, batch_rng);
    std::size_t unlabeled_cursor = 0;
    auto next_unlabeled = [&]() {
      if (unlabeled_cursor == unlabeled.size()) {
        shuffle(unlabeled, batch_rng);  // cycle with reshuffle
        unlabeled_cursor = 0;
      }
      return unlabeled[unlabeled_cursor++];
    };

    double loss_sum = 0.0;
    std::size_t batch_count = 0;
    for (std::size_t start = 0; start < labeled.size(); start += config.batch_size) {
      const std::size_t end = std::min(labeled.size(), start + config.batch_size);
      const std::size_t bsize = end - start;
      const std::size_t usize = unlabeled.empty() ? 0 : bsize;

      // Augmented labeled views with one-hot targets, then unlabeled views
      // with guessed targets.
      Matrix views(bsize + usize, data.dim());
      Matrix targets(bsize + usize, k);
      for (std::size_t b = 0; b < bsize; ++b) {
        const std::size_t idx = labeled[start + b];
        const std::vector<double> xa = augment(data.features.row(idx), aug, batch_rng);
        std::copy(xa.begin(), xa.end(), views.row(b).begin());
        targets.at(b, static_cast<std::size_t>(data.noisy_labels[idx])) = 1.0;
      }
      for (std::size_t u = 0; u < usize; ++u) {
        const std::size_t idx = next_unlabeled();
        std::vector<double> view;
        const std::vector<double> guess =
            guess_labels_impl(net, data.features.row(idx), aug, config.k_aug,
                              config.temperature, batch_rng, &view);
        std::copy(view.begin(), view.end(), views.row(bsize + u).begin());
        std::copy(guess.begin(), guess.end(), targets.row(bsize + u).begin());
      }

      // Mix every view against a shuffled draw from the concatenation.
      std::vector<std::size_t> perm(bsize + usize);
      std::iota(perm.begin(), perm.end(), 0);
      shuffle(perm, batch_rng);

      MixedBatch mixed;
      mixed.inputs = Matrix(bsize + usize, data.dim());
      mixed.targets = Matrix(bsize + usize, k);
      mixed.is_labeled.assign(bsize + usize, false);
      mixed.lambdas.assign(bsize + usize, 1.0);
      std::vector<double> x_mix;
      std::vector<double> t_mix;
      for (std::size_t i = 0; i < bsize + usize; ++i) {
        double lp = 1.0;
        mixup_pair(views.row(i), targets.row(i), views.row(perm[i]),
                   targets.row(perm[i]), alpha, batch_rng, x_mix, t_mix, &lp);
        std::copy(x_mix.begin(), x_mix.end(), mixed.inputs.row(i).begin());
        std::copy(t_mix.begin(), t_mix.end(), mixed.targets.row(i).begin());
        mixed.is_labeled[i] = i < bsize;
        mixed.lambdas[i] = lp;
      }

      Gradients grads;
      loss_sum += mixmatch_loss(net, mixed, lambda_eff, &grads);
      optimizer_step(net, opt, grads);
      ++batch_count;
    }

    SemiEpochStats s;
    s.epoch = epoch;
    s.labeled_count = split.labeled.size();
    s.unlabeled_count = split.unlabeled.size();
    s.mean_loss = batch_count ? loss_sum / static_cast<double>(batch_count) : 0.0;
    s.lambda_u_effective = lambda_eff;
    if (eval_data) {
      s.eval_accuracy =
          evaluate_accuracy(net, eval_data->features, eval_data->clean_labels);
    }
    stats.push_back(std::move(s));
  }
  return stats;
}

}  // namespace pes
