#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peslab/matrix.hpp"
#include "peslab/numerics.hpp"
#include "peslab/rng.hpp"

namespace pes {

enum class Activation { kRelu, kIdentity };

struct LayerSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::kRelu;
};

struct Layer {
  LayerSpec spec;
  Matrix weights;            // input_dim x output_dim
  std::vector<double> bias;  // output_dim
};

// A feed-forward network split into L contiguous parts. part_boundaries are
// strictly increasing, one-past-the-end layer indices; the last boundary
// equals the layer count. frozen flags are per part; a frozen part's
// parameters are never touched by training steps.
struct PartitionedNetwork {
  std::vector<Layer> layers;
  std::vector<std::size_t> part_boundaries;
  std::vector<bool> frozen;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t part_count() const { return part_boundaries.size(); }
  std::size_t input_dim() const { return layers.front().spec.input_dim; }
  std::size_t output_dim() const { return layers.back().spec.output_dim; }

  // [begin, end) layer range of a part (0-based part index).
  std::pair<std::size_t, std::size_t> part_layer_range(std::size_t part) const;
  std::size_t part_of_layer(std::size_t layer) const;
  bool layer_frozen(std::size_t layer) const { return frozen[part_of_layer(layer)]; }

  // Number of leading frozen parts; freezing is always a prefix.
  std::size_t frozen_prefix_len() const;
  // First layer belonging to an unfrozen part (layer_count() if all frozen).
  std::size_t first_trainable_layer() const;
};

// Layer specs for an MLP: input -> hidden dims (ReLU) -> classes (identity).
std::vector<LayerSpec> mlp_specs(std::size_t input_dim,
                                 const std::vector<std::size_t>& hidden_dims,
                                 std::size_t num_classes);

// He-style init: weights ~ N(0, 2/input_dim), biases zero, nothing frozen.
PartitionedNetwork init_network(const std::vector<LayerSpec>& specs,
                                const std::vector<std::size_t>& boundaries,
                                SeededRng& rng);

struct ForwardCache {
  Matrix input;                         // batch input fed to first cached layer
  std::size_t layer_begin = 0;          // first layer covered by this cache
  std::vector<Matrix> post_activations; // one per cached layer
  const Matrix& output() const { return post_activations.back(); }
};

// Full forward pass; optionally fills a cache sufficient for backward().
Matrix forward(const PartitionedNetwork& net, const Matrix& x_batch,
               ForwardCache* cache = nullptr);

// Forward through layers [layer_begin, layer_count). `x` must match the
// input dim of layer_begin. Used to train a suffix on top of frozen-prefix
// activations; numerically identical to the full pass.
Matrix forward_from(const PartitionedNetwork& net, std::size_t layer_begin,
                    const Matrix& x, ForwardCache* cache = nullptr);

// Per-layer parameter gradients. Entries for layers outside the trained
// range (frozen parts, or layers before the cache begin) are empty.
struct Gradients {
  std::vector<Matrix> d_weights;
  std::vector<std::vector<double>> d_bias;
};

enum class LossKind { kCrossEntropy, kMeanSquaredError };

// Gradients of the mean weighted loss:
//   L = (1/B) * sum_i w_i * loss_i(softmax(logits_i), target_i)
// with loss_i cross-entropy or mean-squared-error over probabilities.
// `example_weights` may be empty (all ones). Frozen parts receive no
// gradient entries. Throws if the cache does not match the targets.
Gradients backward(const PartitionedNetwork& net, const ForwardCache& cache,
                   const Matrix& soft_targets,
                   std::span<const double> example_weights,
                   LossKind loss = LossKind::kCrossEntropy);
Gradients backward(const PartitionedNetwork& net, const ForwardCache& cache,
                   const std::vector<int>& labels,
                   std::span<const double> example_weights,
                   LossKind loss = LossKind::kCrossEntropy);

// Backpropagates an arbitrary dL/dlogits through the cached layers; used by
// composite losses (labeled + unlabeled terms in one batch).
Gradients backward_from_logit_grad(const PartitionedNetwork& net,
                                   const ForwardCache& cache,
                                   const Matrix& dlogits);

// Redraws parameters of parts [from_part, L) with the init scheme; earlier
// parts untouched. from_part is 0-based; 0 means full re-initialization.
void reinit_parts(PartitionedNetwork& net, std::size_t from_part, SeededRng& rng);

// Freezes exactly the first `parts_prefix_len` parts; 0 unfreezes all.
void set_frozen(PartitionedNetwork& net, std::size_t parts_prefix_len);

// FNV-1a checksum over a part's (or the whole net's) parameters.
std::uint64_t part_checksum(const PartitionedNetwork& net, std::size_t part);
std::uint64_t network_checksum(const PartitionedNetwork& net);
std::vector<std::uint64_t> all_part_checksums(const PartitionedNetwork& net);

// JSON checkpoint carrying specs, boundaries and parameters; parameter
// round-trip is bit-exact.
std::string checkpoint_to_json(const PartitionedNetwork& net);
PartitionedNetwork checkpoint_from_json(const std::string& text);

// Fraction of rows whose argmax logit matches the label.
double evaluate_accuracy(const PartitionedNetwork& net, const Matrix& features,
                         const std::vector<int>& labels);

}  // namespace pes
