#include "peslab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pes {

OptimizerState make_sgd(double lr, double momentum, double weight_decay) {
  OptimizerState opt;
  opt.kind = OptimizerKind::kSgd;
  opt.learning_rate = lr;
  opt.momentum = momentum;
  opt.weight_decay = weight_decay;
  return opt;
}

OptimizerState make_adam(double lr, double weight_decay) {
  OptimizerState opt;
  opt.kind = OptimizerKind::kAdam;
  opt.learning_rate = lr;
  opt.weight_decay = weight_decay;
  return opt;
}

double lr_for_epoch(const OptimizerState& opt, std::size_t epoch) {
  if (!opt.cosine) return opt.learning_rate;
  const CosineSchedule& c = *opt.cosine;
  if (c.total_epochs == 0) return c.lr_end;
  const double frac =
      std::min(1.0, static_cast<double>(epoch) / static_cast<double>(c.total_epochs));
  return c.lr_end + (c.lr_start - c.lr_end) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void set_epoch(OptimizerState& opt, std::size_t epoch) {
  if (opt.cosine) opt.learning_rate = lr_for_epoch(opt, epoch);
}

namespace {

void allocate_buffers(OptimizerState& opt, const PartitionedNetwork& net) {
  const std::size_t n = net.layer_count();
  opt.m_weights.resize(n);
  opt.v_weights.resize(n);
  opt.m_bias.resize(n);
  opt.v_bias.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    const Layer& layer = net.layers[l];
    opt.m_weights[l] = Matrix(layer.weights.rows, layer.weights.cols);
    opt.m_bias[l].assign(layer.bias.size(), 0.0);
    if (opt.kind == OptimizerKind::kAdam) {
      opt.v_weights[l] = Matrix(layer.weights.rows, layer.weights.cols);
      opt.v_bias[l].assign(layer.bias.size(), 0.0);
    }
  }
}

void check_grad_finite(const Matrix& g, const std::vector<double>& gb,
                       std::size_t layer) {
  for (double v : g.data) {
    if (std::isnan(v)) {
      throw std::runtime_error("optimizer_step: NaN gradient in layer " +
                               std::to_string(layer) + " weights; aborting run");
    }
  }
  for (double v : gb) {
    if (std::isnan(v)) {
      throw std::runtime_error("optimizer_step: NaN gradient in layer " +
                               std::to_string(layer) + " bias; aborting run");
    }
  }
}

void sgd_update(std::span<double> theta, std::span<const double> grad,
                std::span<double> velocity, const OptimizerState& opt) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i] + opt.weight_decay * theta[i];
    velocity[i] = opt.momentum * velocity[i] + g;
    theta[i] -= opt.learning_rate * velocity[i];
  }
}

void adam_update(std::span<double> theta, std::span<const double> grad,
                 std::span<double> m, std::span<double> v,
                 const OptimizerState& opt, double bias1, double bias2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i] + opt.weight_decay * theta[i];
    m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g;
    v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g * g;
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    theta[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
}

}  // namespace

void optimizer_step(PartitionedNetwork& net, OptimizerState& opt,
                    const Gradients& grads) {
  if (grads.d_weights.size() != net.layer_count() ||
      grads.d_bias.size() != net.layer_count()) {
    throw std::invalid_argument("optimizer_step: gradient layer count mismatch");
  }
  if (!opt.buffers_allocated()) allocate_buffers(opt, net);

  opt.step_count += 1;
  const double bias1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
  const double bias2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));

  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Matrix& gw = grads.d_weights[l];
    const std::vector<double>& gb = grads.d_bias[l];
    if (gw.empty() && gb.empty()) continue;  // frozen or untrained layer
    if (net.layer_frozen(l)) {
      throw std::invalid_argument("optimizer_step: gradient entry for frozen layer " +
                                  std::to_string(l));
    }
    Layer& layer = net.layers[l];
    if (gw.rows != layer.weights.rows || gw.cols != layer.weights.cols ||
        gb.size() != layer.bias.size()) {
      throw std::invalid_argument("optimizer_step: gradient shape mismatch at layer " +
                                  std::to_string(l));
    }
    check_grad_finite(gw, gb, l);
    if (opt.kind == OptimizerKind::kSgd) {
      sgd_update(layer.weights.data, gw.data, opt.m_weights[l].data, opt);
      sgd_update(layer.bias, gb, opt.m_bias[l], opt);
    } else {
      adam_update(layer.weights.data, gw.data, opt.m_weights[l].data,
                  opt.v_weights[l].data, opt, bias1, bias2);
      adam_update(layer.bias, gb, opt.m_bias[l], opt.v_bias[l], opt, bias1, bias2);
    }
  }
}

void clear_moments_from_part(OptimizerState& opt, const PartitionedNetwork& net,
                             std::size_t from_part) {
  if (!opt.buffers_allocated()) return;
  const auto [begin, _] = net.part_layer_range(from_part);
  for (std::size_t l = begin; l < net.layer_count(); ++l) {
    std::fill(opt.m_weights[l].data.begin(), opt.m_weights[l].data.end(), 0.0);
    std::fill(opt.m_bias[l].begin(), opt.m_bias[l].end(), 0.0);
    if (opt.kind == OptimizerKind::kAdam) {
      std::fill(opt.v_weights[l].data.begin(), opt.v_weights[l].data.end(), 0.0);
      std::fill(opt.v_bias[l].begin(), opt.v_bias[l].end(), 0.0);
    }
  }
}

}  // namespace pes
