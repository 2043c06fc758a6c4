#include "peslab/confident.hpp"

#include <cmath>
#include <stdexcept>

#include "peslab/numerics.hpp"
#include "peslab/training.hpp"

namespace pes {

Augmenter make_jitter_augmenter(const Matrix& features, double sigma,
                                std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("jitter sigma must be nonnegative");
  Augmenter aug;
  aug.kind = AugmenterKind::kGaussianJitter;
  aug.jitter_sigma = sigma;
  aug.seed = seed;
  aug.feature_std.assign(features.cols, 0.0);
  if (features.rows < 2) {
    aug.feature_std.assign(features.cols, 1.0);
    return aug;
  }
  for (std::size_t j = 0; j < features.cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) mean += features.at(i, j);
    mean /= static_cast<double>(features.rows);
    double ss = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) {
      const double d = features.at(i, j) - mean;
      ss += d * d;
    }
    aug.feature_std[j] = std::sqrt(ss / static_cast<double>(features.rows - 1));
  }
  return aug;
}

Augmenter make_image_augmenter(std::size_t height, std::size_t width,
                               std::size_t pad, std::uint64_t seed) {
  if (height == 0 || width == 0) {
    throw std::invalid_argument("image augmenter needs positive dimensions");
  }
  Augmenter aug;
  aug.kind = AugmenterKind::kImageFlipCrop;
  aug.image_height = height;
  aug.image_width = width;
  aug.crop_pad = pad;
  aug.seed = seed;
  return aug;
}

std::vector<double> flip_horizontal(std::span<const double> image,
                                    std::size_t height, std::size_t width) {
  if (image.size() != height * width) {
    throw std::invalid_argument("flip_horizontal: size mismatch");
  }
  std::vector<double> out(image.size());
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      out[r * width + c] = image[r * width + (width - 1 - c)];
    }
  }
  return out;
}

std::vector<double> pad_and_crop(std::span<const double> image, std::size_t height,
                                 std::size_t width, std::size_t pad,
                                 std::size_t offset_row, std::size_t offset_col) {
  if (image.size() != height * width) {
    throw std::invalid_argument("pad_and_crop: size mismatch");
  }
  if (offset_row > 2 * pad || offset_col > 2 * pad) {
    throw std::invalid_argument("pad_and_crop: offset out of range");
  }
  std::vector<double> out(image.size(), 0.0);
  for (std::size_t r = 0; r < height; ++r) {
    // Source row in the padded image is r + offset_row; it maps back to the
    // original image iff it lies in [pad, pad + height).
    const std::ptrdiff_t src_r =
        static_cast<std::ptrdiff_t>(r + offset_row) - static_cast<std::ptrdiff_t>(pad);
    if (src_r < 0 || src_r >= static_cast<std::ptrdiff_t>(height)) continue;
    for (std::size_t c = 0; c < width; ++c) {
      const std::ptrdiff_t src_c =
          static_cast<std::ptrdiff_t>(c + offset_col) - static_cast<std::ptrdiff_t>(pad);
      if (src_c < 0 || src_c >= static_cast<std::ptrdiff_t>(width)) continue;
      out[r * width + c] = image[static_cast<std::size_t>(src_r) * width +
                                 static_cast<std::size_t>(src_c)];
    }
  }
  return out;
}

std::vector<double> augment(std::span<const double> x, const Augmenter& aug,
                            SeededRng& rng) {
  if (aug.kind == AugmenterKind::kGaussianJitter) {
    if (x.size() != aug.feature_std.size()) {
      throw std::invalid_argument("augment: feature dimension mismatch");
    }
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += aug.jitter_sigma * aug.feature_std[j] * rng.next_normal();
    }
    return out;
  }
  if (x.size() != aug.image_height * aug.image_width) {
    throw std::invalid_argument("augment: image dimension mismatch");
  }
  std::vector<double> out(x.begin(), x.end());
  if (rng.next_double() < 0.5) {
    out = flip_horizontal(out, aug.image_height, aug.image_width);
  }
  if (aug.crop_pad > 0) {
    const std::size_t off_r = rng.next_below(2 * aug.crop_pad + 1);
    const std::size_t off_c = rng.next_below(2 * aug.crop_pad + 1);
    out = pad_and_crop(out, aug.image_height, aug.image_width, aug.crop_pad, off_r,
                       off_c);
  }
  return out;
}

std::vector<double> predict_averaged(const PartitionedNetwork& net,
                                     std::span<const double> x,
                                     const Augmenter& aug, SeededRng& rng) {
  const std::size_t k = net.output_dim();
  std::vector<double> mean(k, 0.0);
  for (int pass = 0; pass < 2; ++pass) {
    const std::vector<double> xa = augment(x, aug, rng);
    Matrix row(1, xa.size());
    row.data = xa;
    Matrix logits = forward(net, row);
    softmax_inplace(logits.row(0));
    for (std::size_t j = 0; j < k; ++j) mean[j] += 0.5 * logits.at(0, j);
  }
  return mean;
}

ConfidentSplit extract_confident(const PartitionedNetwork& net, const Dataset& data,
                                 const Augmenter& aug, const SeededRng& rng) {
  validate_dataset(data);
  ConfidentSplit split;
  split.class_counts.assign(static_cast<std::size_t>(data.num_classes), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    SeededRng sub = rng.split(i);
    const std::vector<double> p = predict_averaged(net, data.features.row(i), aug, sub);
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.size(); ++k) {
      if (p[k] > p[best]) best = k;  // ties keep the lowest index
    }
    const int noisy = data.noisy_labels[i];
    if (static_cast<int>(best) == noisy) {
      split.labeled.push_back(i);
      split.class_counts[static_cast<std::size_t>(noisy)] += 1;
    } else {
      split.unlabeled.push_back(i);
    }
  }
  return split;
}

std::vector<double> class_weights(const ConfidentSplit& split, WeightMode mode) {
  if (split.labeled.empty()) {
    throw std::invalid_argument("class_weights: labeled set is empty");
  }
  const std::size_t k = split.class_counts.size();
  std::vector<double> w(k, 0.0);
  if (mode == WeightMode::kProportional) {
    double total = 0.0;
    for (std::size_t c : split.class_counts) total += static_cast<double>(c);
    for (std::size_t j = 0; j < k; ++j) {
      w[j] = static_cast<double>(split.class_counts[j]) / total;
    }
  } else {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (split.class_counts[j] > 0) {
        w[j] = 1.0 / static_cast<double>(split.class_counts[j]);
        total += w[j];
      }
    }
    for (double& v : w) v /= total;
  }
  return w;
}

void train_weighted(PartitionedNetwork& net, const Dataset& data,
                    const ConfidentSplit& split, const std::vector<double>& weights,
                    std::size_t epochs, const OptimizerState& opt_template,
                    std::size_t batch_size, std::uint64_t shuffle_seed) {
  if (split.labeled.empty()) {
    throw std::invalid_argument("train_weighted: labeled set is empty");
  }
  if (weights.size() != static_cast<std::size_t>(data.num_classes)) {
    throw std::invalid_argument("train_weighted: one weight per class required");
  }
  std::vector<double> row_weights(data.size(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    row_weights[i] = weights[static_cast<std::size_t>(data.noisy_labels[i])];
  }
  OptimizerState opt = opt_template;
  EpochTrainer trainer(net, data, split.labeled, batch_size, &row_weights);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    set_epoch(opt, epoch);
    SeededRng rng(mix_seeds(shuffle_seed, epoch));
    trainer.run_epoch(opt, rng);
  }
}

LabelMetrics label_metrics(const ConfidentSplit& split, const Dataset& data) {
  validate_dataset(data);
  std::size_t correct_in_labeled = 0;
  for (std::size_t i : split.labeled) {
    if (data.noisy_labels[i] == data.clean_labels[i]) ++correct_in_labeled;
  }
  std::size_t correct_total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.noisy_labels[i] == data.clean_labels[i]) ++correct_total;
  }
  LabelMetrics metrics;
  if (!split.labeled.empty()) {
    metrics.precision = static_cast<double>(correct_in_labeled) /
                        static_cast<double>(split.labeled.size());
  }
  if (correct_total > 0) {
    metrics.recall = static_cast<double>(correct_in_labeled) /
                     static_cast<double>(correct_total);
  }
  return metrics;
}

}  // namespace pes
