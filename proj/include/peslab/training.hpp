#pragma once

#include <vector>

#include "peslab/dataset.hpp"
#include "peslab/network.hpp"
#include "peslab/optimizer.hpp"
#include "peslab/rng.hpp"

namespace pes {

// Mini-batch cross-entropy trainer over a fixed index subset of a dataset.
// Built once per training stage: while the net's frozen prefix is constant,
// prefix activations are precomputed so only the trainable suffix runs per
// batch. Numerically identical to forwarding the whole network every batch.
class EpochTrainer {
 public:
  // row_weights, when non-null, is indexed by dataset row (not subset
  // position) and must outlive the trainer.
  EpochTrainer(PartitionedNetwork& net, const Dataset& data,
               std::vector<std::size_t> indices, std::size_t batch_size,
               const std::vector<double>* row_weights = nullptr);

  // One full shuffled pass; returns the mean weighted loss over examples.
  double run_epoch(OptimizerState& opt, SeededRng& shuffle_rng);

  std::size_t example_count() const { return indices_.size(); }

 private:
  PartitionedNetwork& net_;
  const Dataset& data_;
  std::vector<std::size_t> indices_;
  std::size_t batch_size_;
  const std::vector<double>* row_weights_;
  std::size_t first_trainable_;
  Matrix prefix_activations_;  // rows follow indices_; empty when unused
};

// Activations after layers [0, layer_end); layer_end == 0 returns x.
Matrix forward_prefix(const PartitionedNetwork& net, const Matrix& x,
                      std::size_t layer_end);

}  // namespace pes
