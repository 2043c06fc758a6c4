#include "peslab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "peslab/numerics.hpp"

namespace pes {

Matrix forward_prefix(const PartitionedNetwork& net, const Matrix& x,
                      std::size_t layer_end) {
  if (layer_end > net.layer_count()) {
    throw std::invalid_argument("forward_prefix: layer_end out of range");
  }
  Matrix current = x;
  for (std::size_t l = 0; l < layer_end; ++l) {
    const Layer& layer = net.layers[l];
    Matrix z = matmul(current, layer.weights);
    for (std::size_t i = 0; i < z.rows; ++i) {
      double* row = z.data.data() + i * z.cols;
      for (std::size_t j = 0; j < z.cols; ++j) row[j] += layer.bias[j];
    }
    if (layer.spec.activation == Activation::kRelu) {
      for (double& v : z.data) v = std::max(v, 0.0);
    }
    current = std::move(z);
  }
  return current;
}

EpochTrainer::EpochTrainer(PartitionedNetwork& net, const Dataset& data,
                           std::vector<std::size_t> indices,
                           std::size_t batch_size,
                           const std::vector<double>* row_weights)
    : net_(net),
      data_(data),
      indices_(std::move(indices)),
      batch_size_(batch_size),
      row_weights_(row_weights),
      first_trainable_(net.first_trainable_layer()) {
  if (indices_.empty()) throw std::invalid_argument("training on an empty example set");
  if (batch_size_ == 0) throw std::invalid_argument("batch size must be positive");
  for (std::size_t idx : indices_) {
    if (idx >= data_.size()) throw std::out_of_range("training index out of range");
  }
  if (first_trainable_ >= net_.layer_count()) return;  // fully frozen: no-op epochs
  if (first_trainable_ > 0) {
    const Matrix subset_features = gather_rows(data_.features, indices_);
    prefix_activations_ = forward_prefix(net_, subset_features, first_trainable_);
  }
}

double EpochTrainer::run_epoch(OptimizerState& opt, SeededRng& shuffle_rng) {
  const std::size_t n = indices_.size();
  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), 0);
  shuffle(positions, shuffle_rng);

  if (first_trainable_ >= net_.layer_count()) return 0.0;

  const Matrix& input_source =
      first_trainable_ > 0 ? prefix_activations_ : data_.features;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < n; start += batch_size_) {
    const std::size_t end = std::min(n, start + batch_size_);
    const std::size_t bsize = end - start;
    std::vector<std::size_t> input_rows(bsize);
    std::vector<int> labels(bsize);
    std::vector<double> weights;
    if (row_weights_) weights.resize(bsize);
    for (std::size_t b = 0; b < bsize; ++b) {
      const std::size_t pos = positions[start + b];
      input_rows[b] = first_trainable_ > 0 ? pos : indices_[pos];
      labels[b] = data_.noisy_labels[indices_[pos]];
      if (row_weights_) weights[b] = (*row_weights_)[indices_[pos]];
    }
    const Matrix batch = gather_rows(input_source, input_rows);
    ForwardCache cache;
    const Matrix logits = forward_from(net_, first_trainable_, batch, &cache);
    const Matrix probs = softmax_rows(logits);
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < bsize; ++b) {
      const double w = row_weights_ ? weights[b] : 1.0;
      batch_loss += w * -std::log(std::max(
                            probs.at(b, static_cast<std::size_t>(labels[b])), kLogClamp));
    }
    batch_loss /= static_cast<double>(bsize);
    loss_sum += batch_loss * static_cast<double>(bsize);

    const Gradients grads = backward(
        net_, cache, labels,
        row_weights_ ? std::span<const double>(weights) : std::span<const double>{});
    optimizer_step(net_, opt, grads);
  }
  return loss_sum / static_cast<double>(n);
}

}  // namespace pes
