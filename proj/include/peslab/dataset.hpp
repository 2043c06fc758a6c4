#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "peslab/matrix.hpp"

namespace pes {

// A labeled sample set. Before noise is applied, noisy_labels == clean_labels.
// Synthetic generators keep clean labels around so label precision/recall can
// be evaluated after noise injection.
struct Dataset {
  Matrix features;  // n x d
  std::vector<int> clean_labels;
  std::vector<int> noisy_labels;
  int num_classes = 0;

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
};

void validate_dataset(const Dataset& data);

// Subset of a dataset by row indices (labels follow).
Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

// CSV persistence: header `index,clean_label,noisy_label,f0,...`; features
// are written with shortest round-trip formatting so reload is bit-exact.
void save_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset_csv(const std::filesystem::path& path);

}  // namespace pes
