#pragma once

#include <optional>
#include <span>
#include <vector>

#include "peslab/dataset.hpp"
#include "peslab/network.hpp"
#include "peslab/optimizer.hpp"
#include "peslab/rng.hpp"

namespace pes {

enum class AugmenterKind { kGaussianJitter, kImageFlipCrop };

// Stochastic input transformation. Vector data gets Gaussian jitter scaled
// by per-feature standard deviations; image data gets horizontal flip plus
// pad-and-random-crop.
struct Augmenter {
  AugmenterKind kind = AugmenterKind::kGaussianJitter;
  double jitter_sigma = 0.1;        // multiplies per-feature std
  std::vector<double> feature_std;  // fitted on training features
  std::size_t image_height = 0;
  std::size_t image_width = 0;
  std::size_t crop_pad = 2;
  std::uint64_t seed = 0;
};

// Jitter augmenter with noise scale sigma * std(feature j), fitted on the
// given training features.
Augmenter make_jitter_augmenter(const Matrix& features, double sigma,
                                std::uint64_t seed);
Augmenter make_image_augmenter(std::size_t height, std::size_t width,
                               std::size_t pad, std::uint64_t seed);

std::vector<double> augment(std::span<const double> x, const Augmenter& aug,
                            SeededRng& rng);

// Horizontal mirror of a row-major height x width image; its own involution.
std::vector<double> flip_horizontal(std::span<const double> image,
                                    std::size_t height, std::size_t width);

// Zero-pad by `pad` on all sides, then crop height x width at the given
// offsets in [0, 2*pad].
std::vector<double> pad_and_crop(std::span<const double> image, std::size_t height,
                                 std::size_t width, std::size_t pad,
                                 std::size_t offset_row, std::size_t offset_col);

// Mean probability over exactly two independent augmentations of x.
std::vector<double> predict_averaged(const PartitionedNetwork& net,
                                     std::span<const double> x,
                                     const Augmenter& aug, SeededRng& rng);

// Partition of the training indices into confident (labeled) and
// unconfident (unlabeled) examples, with per-class confident counts.
struct ConfidentSplit {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
  std::vector<std::size_t> class_counts;  // confident examples per noisy class
};

// Example i is confident iff the argmax of its augmentation-averaged
// prediction equals its noisy label; argmax ties break to the lowest class.
// Per-example randomness comes from rng.split(i), so the result does not
// depend on evaluation order.
ConfidentSplit extract_confident(const PartitionedNetwork& net, const Dataset& data,
                                 const Augmenter& aug, const SeededRng& rng);

enum class WeightMode { kProportional, kInverse };

// Class weights from confident counts. Proportional: w_k = count_k / total
// (the written-out definition). Inverse: w_k proportional to 1/count_k over
// nonempty classes, normalized to sum 1.
std::vector<double> class_weights(const ConfidentSplit& split,
                                  WeightMode mode = WeightMode::kProportional);

// Mini-batch training on the labeled subset with fixed per-class weights
// applied per example.
void train_weighted(PartitionedNetwork& net, const Dataset& data,
                    const ConfidentSplit& split, const std::vector<double>& weights,
                    std::size_t epochs, const OptimizerState& opt_template,
                    std::size_t batch_size, std::uint64_t shuffle_seed);

struct LabelMetrics {
  std::optional<double> precision;  // unset when the labeled set is empty
  std::optional<double> recall;     // unset when no example has a correct label
};

// Precision: fraction of the labeled set whose noisy label is correct.
// Recall: fraction of all correctly-labeled examples captured by it.
LabelMetrics label_metrics(const ConfidentSplit& split, const Dataset& data);

}  // namespace pes
