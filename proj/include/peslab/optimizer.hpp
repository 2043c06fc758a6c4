#pragma once

#include <optional>
#include <vector>

#include "peslab/network.hpp"

namespace pes {

enum class OptimizerKind { kSgd, kAdam };

// Single-cycle cosine annealing between two learning rates, indexed by epoch.
struct CosineSchedule {
  double lr_start = 0.0;
  double lr_end = 0.0;
  std::size_t total_epochs = 1;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 0.01;
  double momentum = 0.0;      // SGD only
  double weight_decay = 0.0;  // coupled: added to the gradient
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::optional<CosineSchedule> cosine;
  std::size_t step_count = 0;

  // Moment buffers, allocated lazily to mirror the network. SGD uses m_* as
  // the velocity; Adam uses both m_* and v_*.
  std::vector<Matrix> m_weights, v_weights;
  std::vector<std::vector<double>> m_bias, v_bias;

  bool buffers_allocated() const { return !m_weights.empty(); }
};

OptimizerState make_sgd(double lr, double momentum = 0.9, double weight_decay = 0.0);
OptimizerState make_adam(double lr, double weight_decay = 0.0);

// Effective learning rate for an epoch under the cosine schedule (the plain
// learning_rate when no schedule is configured).
double lr_for_epoch(const OptimizerState& opt, std::size_t epoch);
void set_epoch(OptimizerState& opt, std::size_t epoch);

// Applies one update. Layers with empty gradient entries (frozen parts) are
// skipped entirely; their parameters and moments stay bitwise unchanged.
// Aborts with a diagnostic if any gradient entry is NaN.
void optimizer_step(PartitionedNetwork& net, OptimizerState& opt,
                    const Gradients& grads);

// Zeroes moment buffers for all layers of parts [from_part, L); reinitialized
// parameters must not inherit moments from the parameters they replaced.
void clear_moments_from_part(OptimizerState& opt, const PartitionedNetwork& net,
                             std::size_t from_part);

}  // namespace pes
