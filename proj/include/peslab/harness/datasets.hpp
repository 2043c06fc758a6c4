#pragma once

#include <cstdint>
#include <filesystem>

#include "peslab/dataset.hpp"
#include "peslab/rng.hpp"

namespace pes::harness {

// k Gaussian clusters with unit covariance and balanced classes. Means sit
// at mutual distance `separation`: on scaled standard basis vectors when the
// dimension allows (d >= k), otherwise spaced along a diagonal line.
Dataset make_blobs(std::size_t n, std::size_t d, std::size_t k, double separation,
                   SeededRng& rng);

// Two interleaved half-circles with Gaussian coordinate noise; n must be
// even and the class balance is exact.
Dataset make_two_moons(std::size_t n, double noise_std, SeededRng& rng);

// IDX-format reader (big-endian; magic 0x00000803 for images, 0x00000801
// for labels). Pixels are flattened row-major and scaled to [0,1]. When
// 0 < subset < n, a stratified subset of that size is drawn.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::size_t subset,
                 SeededRng& rng);

struct IdxImageHeader {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

IdxImageHeader read_idx_image_header(const std::filesystem::path& path);

}  // namespace pes::harness
