#include "peslab/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace pes {

std::pair<std::size_t, std::size_t> PartitionedNetwork::part_layer_range(
    std::size_t part) const {
  if (part >= part_boundaries.size()) {
    throw std::out_of_range("part index out of range");
  }
  const std::size_t begin = part == 0 ? 0 : part_boundaries[part - 1];
  return {begin, part_boundaries[part]};
}

std::size_t PartitionedNetwork::part_of_layer(std::size_t layer) const {
  for (std::size_t p = 0; p < part_boundaries.size(); ++p) {
    if (layer < part_boundaries[p]) return p;
  }
  throw std::out_of_range("layer index out of range");
}

std::size_t PartitionedNetwork::frozen_prefix_len() const {
  std::size_t n = 0;
  while (n < frozen.size() && frozen[n]) ++n;
  for (std::size_t p = n; p < frozen.size(); ++p) {
    if (frozen[p]) throw std::logic_error("frozen parts are not a prefix");
  }
  return n;
}

std::size_t PartitionedNetwork::first_trainable_layer() const {
  const std::size_t prefix = frozen_prefix_len();
  return prefix == 0 ? 0 : part_boundaries[prefix - 1];
}

std::vector<LayerSpec> mlp_specs(std::size_t input_dim,
                                 const std::vector<std::size_t>& hidden_dims,
                                 std::size_t num_classes) {
  std::vector<LayerSpec> specs;
  std::size_t in = input_dim;
  for (std::size_t h : hidden_dims) {
    specs.push_back({in, h, Activation::kRelu});
    in = h;
  }
  specs.push_back({in, num_classes, Activation::kIdentity});
  return specs;
}

namespace {

void validate_specs_and_boundaries(const std::vector<LayerSpec>& specs,
                                   const std::vector<std::size_t>& boundaries) {
  if (specs.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].input_dim == 0 || specs[i].output_dim == 0) {
      throw std::invalid_argument("layer dims must be positive");
    }
    if (i + 1 < specs.size() && specs[i].output_dim != specs[i + 1].input_dim) {
      throw std::invalid_argument("adjacent layer dims incompatible at layer " +
                                  std::to_string(i));
    }
  }
  if (specs.back().activation != Activation::kIdentity) {
    throw std::invalid_argument("final layer must be identity (logits)");
  }
  if (boundaries.empty() || boundaries.back() != specs.size()) {
    throw std::invalid_argument("last part boundary must equal layer count");
  }
  std::size_t prev = 0;
  for (std::size_t b : boundaries) {
    if (b <= prev) throw std::invalid_argument("part boundaries must be strictly increasing");
    prev = b;
  }
}

void init_layer(Layer& layer, SeededRng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(layer.spec.input_dim));
  layer.weights = Matrix(layer.spec.input_dim, layer.spec.output_dim);
  for (double& w : layer.weights.data) w = stddev * rng.next_normal();
  layer.bias.assign(layer.spec.output_dim, 0.0);
}

}  // namespace

PartitionedNetwork init_network(const std::vector<LayerSpec>& specs,
                                const std::vector<std::size_t>& boundaries,
                                SeededRng& rng) {
  validate_specs_and_boundaries(specs, boundaries);
  PartitionedNetwork net;
  net.part_boundaries = boundaries;
  net.frozen.assign(boundaries.size(), false);
  net.layers.resize(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    net.layers[i].spec = specs[i];
    init_layer(net.layers[i], rng);
  }
  return net;
}

Matrix forward_from(const PartitionedNetwork& net, std::size_t layer_begin,
                    const Matrix& x, ForwardCache* cache) {
  if (layer_begin >= net.layer_count()) {
    throw std::invalid_argument("forward_from: layer_begin out of range");
  }
  if (x.cols != net.layers[layer_begin].spec.input_dim) {
    throw std::invalid_argument("forward_from: input dim mismatch (got " +
                                std::to_string(x.cols) + ", expected " +
                                std::to_string(net.layers[layer_begin].spec.input_dim) +
                                ")");
  }
  if (cache) {
    cache->input = x;
    cache->layer_begin = layer_begin;
    cache->post_activations.clear();
  }
  Matrix current = x;
  for (std::size_t l = layer_begin; l < net.layer_count(); ++l) {
    const Layer& layer = net.layers[l];
    Matrix z = matmul(current, layer.weights);
    for (std::size_t i = 0; i < z.rows; ++i) {
      double* row = z.data.data() + i * z.cols;
      for (std::size_t j = 0; j < z.cols; ++j) row[j] += layer.bias[j];
    }
    if (layer.spec.activation == Activation::kRelu) {
      for (double& v : z.data) v = std::max(v, 0.0);
    }
    if (cache) cache->post_activations.push_back(z);
    current = std::move(z);
  }
  return current;
}

Matrix forward(const PartitionedNetwork& net, const Matrix& x_batch,
               ForwardCache* cache) {
  return forward_from(net, 0, x_batch, cache);
}

Gradients backward_from_logit_grad(const PartitionedNetwork& net,
                                   const ForwardCache& cache,
                                   const Matrix& dlogits) {
  const std::size_t n_layers = net.layer_count();
  const std::size_t begin = cache.layer_begin;
  if (cache.post_activations.size() != n_layers - begin) {
    throw std::invalid_argument("backward: cache does not cover the network suffix");
  }
  if (dlogits.rows != cache.input.rows || dlogits.cols != net.output_dim()) {
    throw std::invalid_argument("backward: logit gradient shape mismatch");
  }
  // Layers below this bound need no parameter gradients: frozen parts form a
  // prefix, so propagation stops at the first trainable cached layer.
  const std::size_t stop = std::max(begin, net.first_trainable_layer());

  Gradients grads;
  grads.d_weights.resize(n_layers);
  grads.d_bias.resize(n_layers);

  Matrix delta = dlogits;  // dL/dz for the layer being processed
  for (std::size_t l = n_layers; l-- > stop;) {
    const Layer& layer = net.layers[l];
    const Matrix& input =
        l == begin ? cache.input : cache.post_activations[l - 1 - begin];
    if (!net.layer_frozen(l)) {
      grads.d_weights[l] = matmul_transpose_a(input, delta);
      auto& db = grads.d_bias[l];
      db.assign(layer.spec.output_dim, 0.0);
      for (std::size_t i = 0; i < delta.rows; ++i) {
        const double* row = delta.data.data() + i * delta.cols;
        for (std::size_t j = 0; j < delta.cols; ++j) db[j] += row[j];
      }
    }
    if (l > stop) {
      Matrix prev_delta = matmul_transpose_b(delta, layer.weights);
      const Layer& prev = net.layers[l - 1];
      if (prev.spec.activation == Activation::kRelu) {
        const Matrix& prev_out = cache.post_activations[l - 1 - begin];
        for (std::size_t i = 0; i < prev_delta.data.size(); ++i) {
          if (prev_out.data[i] <= 0.0) prev_delta.data[i] = 0.0;
        }
      }
      delta = std::move(prev_delta);
    }
  }
  return grads;
}

namespace {

Matrix loss_logit_grad(const Matrix& logits, const Matrix& soft_targets,
                       std::span<const double> example_weights, LossKind loss) {
  if (soft_targets.rows != logits.rows || soft_targets.cols != logits.cols) {
    throw std::invalid_argument("backward: target shape mismatch with cache");
  }
  if (!example_weights.empty() && example_weights.size() != logits.rows) {
    throw std::invalid_argument("backward: weight count mismatch");
  }
  for (double w : example_weights) {
    if (w < 0.0) throw std::invalid_argument("backward: negative example weight");
  }
  const double inv_batch = 1.0 / static_cast<double>(logits.rows);
  Matrix probs = softmax_rows(logits);
  Matrix dlogits(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double w = example_weights.empty() ? 1.0 : example_weights[i];
    const double scale = w * inv_batch;
    if (loss == LossKind::kCrossEntropy) {
      for (std::size_t k = 0; k < logits.cols; ++k) {
        dlogits.at(i, k) = scale * (probs.at(i, k) - soft_targets.at(i, k));
      }
    } else {
      // loss_i = (1/K) * sum_k (p_k - t_k)^2, through the softmax Jacobian.
      const double inv_k = 1.0 / static_cast<double>(logits.cols);
      double dot = 0.0;  // sum_k dL/dp_k * p_k
      std::vector<double> dp(logits.cols);
      for (std::size_t k = 0; k < logits.cols; ++k) {
        dp[k] = 2.0 * inv_k * (probs.at(i, k) - soft_targets.at(i, k));
        dot += dp[k] * probs.at(i, k);
      }
      for (std::size_t j = 0; j < logits.cols; ++j) {
        dlogits.at(i, j) = scale * probs.at(i, j) * (dp[j] - dot);
      }
    }
  }
  return dlogits;
}

}  // namespace

Gradients backward(const PartitionedNetwork& net, const ForwardCache& cache,
                   const Matrix& soft_targets,
                   std::span<const double> example_weights, LossKind loss) {
  if (cache.post_activations.empty()) {
    throw std::invalid_argument("backward: empty cache");
  }
  Matrix dlogits =
      loss_logit_grad(cache.output(), soft_targets, example_weights, loss);
  return backward_from_logit_grad(net, cache, dlogits);
}

Gradients backward(const PartitionedNetwork& net, const ForwardCache& cache,
                   const std::vector<int>& labels,
                   std::span<const double> example_weights, LossKind loss) {
  const std::size_t k = net.output_dim();
  return backward(net, cache, one_hot(labels, static_cast<int>(k)),
                  example_weights, loss);
}

void reinit_parts(PartitionedNetwork& net, std::size_t from_part, SeededRng& rng) {
  if (from_part >= net.part_count()) {
    throw std::invalid_argument("reinit_parts: part index out of range");
  }
  const auto [begin, _] = net.part_layer_range(from_part);
  for (std::size_t l = begin; l < net.layer_count(); ++l) {
    init_layer(net.layers[l], rng);
  }
}

void set_frozen(PartitionedNetwork& net, std::size_t parts_prefix_len) {
  if (parts_prefix_len > net.part_count()) {
    throw std::invalid_argument("set_frozen: prefix longer than part count");
  }
  for (std::size_t p = 0; p < net.part_count(); ++p) {
    net.frozen[p] = p < parts_prefix_len;
  }
}

std::uint64_t part_checksum(const PartitionedNetwork& net, std::size_t part) {
  const auto [begin, end] = net.part_layer_range(part);
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t l = begin; l < end; ++l) {
    h = checksum_doubles(net.layers[l].weights.data, h);
    h = checksum_doubles(net.layers[l].bias, h);
  }
  return h;
}

std::uint64_t network_checksum(const PartitionedNetwork& net) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const Layer& layer : net.layers) {
    h = checksum_doubles(layer.weights.data, h);
    h = checksum_doubles(layer.bias, h);
  }
  return h;
}

std::vector<std::uint64_t> all_part_checksums(const PartitionedNetwork& net) {
  std::vector<std::uint64_t> sums(net.part_count());
  for (std::size_t p = 0; p < net.part_count(); ++p) sums[p] = part_checksum(net, p);
  return sums;
}

std::string checkpoint_to_json(const PartitionedNetwork& net) {
  nlohmann::json doc;
  doc["format"] = "peslab-checkpoint-v1";
  doc["part_boundaries"] = net.part_boundaries;
  auto& layers = doc["layers"];
  layers = nlohmann::json::array();
  for (const Layer& layer : net.layers) {
    nlohmann::json entry;
    entry["input_dim"] = layer.spec.input_dim;
    entry["output_dim"] = layer.spec.output_dim;
    entry["activation"] =
        layer.spec.activation == Activation::kRelu ? "relu" : "identity";
    entry["weights"] = layer.weights.data;
    entry["bias"] = layer.bias;
    layers.push_back(std::move(entry));
  }
  return doc.dump(2);
}

PartitionedNetwork checkpoint_from_json(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  if (doc.value("format", "") != "peslab-checkpoint-v1") {
    throw std::invalid_argument("not a peslab checkpoint document");
  }
  PartitionedNetwork net;
  net.part_boundaries = doc.at("part_boundaries").get<std::vector<std::size_t>>();
  for (const auto& entry : doc.at("layers")) {
    Layer layer;
    layer.spec.input_dim = entry.at("input_dim").get<std::size_t>();
    layer.spec.output_dim = entry.at("output_dim").get<std::size_t>();
    const std::string act = entry.at("activation").get<std::string>();
    if (act == "relu") {
      layer.spec.activation = Activation::kRelu;
    } else if (act == "identity") {
      layer.spec.activation = Activation::kIdentity;
    } else {
      throw std::invalid_argument("unknown activation: " + act);
    }
    layer.weights.rows = layer.spec.input_dim;
    layer.weights.cols = layer.spec.output_dim;
    layer.weights.data = entry.at("weights").get<std::vector<double>>();
    if (layer.weights.data.size() != layer.weights.rows * layer.weights.cols) {
      throw std::invalid_argument("checkpoint weight size mismatch");
    }
    layer.bias = entry.at("bias").get<std::vector<double>>();
    if (layer.bias.size() != layer.spec.output_dim) {
      throw std::invalid_argument("checkpoint bias size mismatch");
    }
    net.layers.push_back(std::move(layer));
  }
  net.frozen.assign(net.part_boundaries.size(), false);
  std::vector<LayerSpec> specs;
  for (const Layer& l : net.layers) specs.push_back(l.spec);
  validate_specs_and_boundaries(specs, net.part_boundaries);
  return net;
}

double evaluate_accuracy(const PartitionedNetwork& net, const Matrix& features,
                         const std::vector<int>& labels) {
  if (features.rows != labels.size()) {
    throw std::invalid_argument("evaluate_accuracy: size mismatch");
  }
  if (features.rows == 0) throw std::invalid_argument("evaluate_accuracy: empty set");
  const Matrix logits = forward(net, features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.cols; ++k) {
      if (logits.at(i, k) > logits.at(i, best)) best = k;
    }
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

}  // namespace pes
