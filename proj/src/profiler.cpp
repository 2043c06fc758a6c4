#include "peslab/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "peslab/training.hpp"

namespace pes {

namespace {

constexpr std::uint64_t kInitStream = 0x696E6974ULL;
constexpr std::uint64_t kRetrainStream = 0x70726F62ULL;

// Every layer is its own part so freeze/reinit operate at layer granularity.
std::vector<std::size_t> per_layer_boundaries(std::size_t layer_count) {
  std::vector<std::size_t> b(layer_count);
  std::iota(b.begin(), b.end(), 1);
  return b;
}

void train_noisy_epochs(PartitionedNetwork& net, const Dataset& noisy_data,
                        const ProbeConfig& config, std::uint64_t seed,
                        std::size_t epoch_begin, std::size_t epoch_end,
                        OptimizerState& opt) {
  if (epoch_begin == epoch_end) return;
  EpochTrainer trainer(net, noisy_data, [&] {
    std::vector<std::size_t> idx(noisy_data.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }(), config.batch_size);
  for (std::size_t epoch = epoch_begin; epoch < epoch_end; ++epoch) {
    set_epoch(opt, epoch);
    SeededRng rng(mix_seeds(seed, epoch));
    trainer.run_epoch(opt, rng);
  }
}

// Clean-retrain phase shared by probe_layer and the profile sweep.
double retrain_and_score(PartitionedNetwork net, std::size_t layer,
                         const Dataset& clean_data, const Dataset& test_data,
                         const ProbeConfig& config, std::uint64_t probe_seed) {
  const std::size_t last_layer = net.layer_count() - 1;
  if (layer == last_layer) {
    return evaluate_accuracy(net, test_data.features, test_data.clean_labels);
  }
  set_frozen(net, layer + 1);
  SeededRng reinit_rng(mix_seeds(probe_seed, kInitStream));
  reinit_parts(net, layer + 1, reinit_rng);

  OptimizerState opt = config.retrain_optimizer;
  EpochTrainer trainer(net, clean_data, [&] {
    std::vector<std::size_t> idx(clean_data.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }(), config.batch_size);
  for (std::size_t epoch = 0; epoch < config.clean_retrain_epochs; ++epoch) {
    set_epoch(opt, epoch);
    SeededRng rng(mix_seeds(mix_seeds(probe_seed, kRetrainStream), epoch));
    trainer.run_epoch(opt, rng);
  }
  return evaluate_accuracy(net, test_data.features, test_data.clean_labels);
}

}  // namespace

void ProbeConfig::validate(std::size_t layer_count) const {
  if (probe_layers.empty()) throw std::invalid_argument("probe: no layers requested");
  for (std::size_t l : probe_layers) {
    if (l >= layer_count) {
      throw std::invalid_argument("probe: layer index out of range");
    }
  }
  if (epoch_grid.empty()) throw std::invalid_argument("probe: empty epoch grid");
  for (std::size_t i = 0; i + 1 < epoch_grid.size(); ++i) {
    if (epoch_grid[i] >= epoch_grid[i + 1]) {
      throw std::invalid_argument("probe: epoch grid must be strictly increasing");
    }
  }
  if (seeds.empty()) throw std::invalid_argument("probe: need at least one seed");
  if (batch_size == 0) throw std::invalid_argument("probe: batch size must be positive");
}

double probe_layer(const std::vector<LayerSpec>& arch, const Dataset& noisy_data,
                   const Dataset& clean_data, const Dataset& test_data,
                   std::size_t layer, std::size_t epochs_noisy,
                   const ProbeConfig& config, std::uint64_t seed) {
  if (layer >= arch.size()) {
    throw std::invalid_argument("probe_layer: layer index out of range");
  }
  SeededRng init_rng(mix_seeds(seed, kInitStream));
  PartitionedNetwork net =
      init_network(arch, per_layer_boundaries(arch.size()), init_rng);
  OptimizerState opt = config.noisy_optimizer;
  train_noisy_epochs(net, noisy_data, config, seed, 0, epochs_noisy, opt);
  const std::uint64_t probe_seed =
      mix_seeds(mix_seeds(seed, layer), epochs_noisy);
  return retrain_and_score(std::move(net), layer, clean_data, test_data, config,
                           probe_seed);
}

SensitivityProfile sensitivity_profile(const std::vector<LayerSpec>& arch,
                                       const Dataset& noisy_data,
                                       const Dataset& clean_data,
                                       const Dataset& test_data,
                                       const ProbeConfig& config) {
  config.validate(arch.size());
  SensitivityProfile profile;
  const std::size_t n_grid = config.epoch_grid.size();
  const std::size_t n_seeds = config.seeds.size();

  // accuracy[layer position][grid position][seed position]
  std::vector<std::vector<std::vector<double>>> acc(
      config.probe_layers.size(),
      std::vector<std::vector<double>>(n_grid, std::vector<double>(n_seeds)));

  for (std::size_t s = 0; s < n_seeds; ++s) {
    const std::uint64_t seed = config.seeds[s];
    SeededRng init_rng(mix_seeds(seed, kInitStream));
    PartitionedNetwork net =
        init_network(arch, per_layer_boundaries(arch.size()), init_rng);
    OptimizerState opt = config.noisy_optimizer;
    std::size_t trained = 0;
    for (std::size_t g = 0; g < n_grid; ++g) {
      train_noisy_epochs(net, noisy_data, config, seed, trained,
                         config.epoch_grid[g], opt);
      trained = config.epoch_grid[g];
      for (std::size_t li = 0; li < config.probe_layers.size(); ++li) {
        const std::size_t layer = config.probe_layers[li];
        const std::uint64_t probe_seed = mix_seeds(mix_seeds(seed, layer), trained);
        acc[li][g][s] = retrain_and_score(net, layer, clean_data, test_data,
                                          config, probe_seed);
        profile.samples.push_back({layer, trained, seed, acc[li][g][s]});
      }
    }
  }

  for (std::size_t li = 0; li < config.probe_layers.size(); ++li) {
    SensitivityCurve curve;
    curve.layer = config.probe_layers[li];
    for (std::size_t g = 0; g < n_grid; ++g) {
      double mean = 0.0;
      for (double a : acc[li][g]) mean += a;
      mean /= static_cast<double>(n_seeds);
      double ss = 0.0;
      for (double a : acc[li][g]) ss += (a - mean) * (a - mean);
      const double sd =
          n_seeds > 1 ? std::sqrt(ss / static_cast<double>(n_seeds - 1)) : 0.0;
      curve.mean_accuracy.push_back(mean);
      curve.std_accuracy.push_back(sd);
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < n_grid; ++g) {
      if (curve.mean_accuracy[g] > curve.mean_accuracy[best]) best = g;
    }
    curve.peak_epoch = config.epoch_grid[best];
    profile.curves.push_back(std::move(curve));
  }
  return profile;
}

}  // namespace pes
