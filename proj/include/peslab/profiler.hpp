#pragma once

#include <cstdint>
#include <vector>

#include "peslab/dataset.hpp"
#include "peslab/network.hpp"
#include "peslab/optimizer.hpp"
#include "peslab/pes.hpp"

namespace pes {

// Layer-wise noise-sensitivity probe: train on noisy labels for a grid of
// epoch counts, then measure how much a frozen prefix limits clean-data
// performance by reinitializing and retraining everything above it on clean
// labels.
struct ProbeConfig {
  std::vector<std::size_t> probe_layers;  // 0-based layer indices
  std::vector<std::size_t> epoch_grid;    // strictly increasing epoch counts
  std::size_t clean_retrain_epochs = 30;
  std::vector<std::uint64_t> seeds;
  OptimizerState noisy_optimizer = make_adam(1e-3, 1e-4);
  OptimizerState retrain_optimizer = make_adam(1e-3);
  std::size_t batch_size = 128;

  void validate(std::size_t layer_count) const;
};

// Test accuracy after: noisy training for epochs_noisy, freeze layers
// [0, layer], reinitialize layers (layer, end) and retrain them on clean
// data. Probing the final layer skips the retrain and scores the
// noisy-trained network directly.
double probe_layer(const std::vector<LayerSpec>& arch, const Dataset& noisy_data,
                   const Dataset& clean_data, const Dataset& test_data,
                   std::size_t layer, std::size_t epochs_noisy,
                   const ProbeConfig& config, std::uint64_t seed);

struct SensitivityCurve {
  std::size_t layer = 0;
  std::vector<double> mean_accuracy;  // one per grid point
  std::vector<double> std_accuracy;   // sample std over seeds
  std::size_t peak_epoch = 0;         // grid value with the highest mean
};

struct ProbeSample {
  std::size_t layer = 0;
  std::size_t epochs_noisy = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

struct SensitivityProfile {
  std::vector<SensitivityCurve> curves;   // one per probed layer
  std::vector<ProbeSample> samples;       // raw grid x layer x seed results
};

// Full grid x layers x seeds sweep. Noisy training is run incrementally per
// seed with snapshots at each grid point, which matches fresh runs exactly
// because epoch shuffles are derived from (seed, epoch).
SensitivityProfile sensitivity_profile(const std::vector<LayerSpec>& arch,
                                       const Dataset& noisy_data,
                                       const Dataset& clean_data,
                                       const Dataset& test_data,
                                       const ProbeConfig& config);

}  // namespace pes
