#include "peslab/harness/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pes::harness {

Dataset make_blobs(std::size_t n, std::size_t d, std::size_t k, double separation,
                   SeededRng& rng) {
  if (k < 2) throw std::invalid_argument("make_blobs: need at least 2 classes");
  if (n < k) throw std::invalid_argument("make_blobs: need at least one point per class");
  if (d < 1) throw std::invalid_argument("make_blobs: dimension must be positive");
  if (separation < 0.0) throw std::invalid_argument("make_blobs: separation must be nonnegative");

  // Class means. With d >= k, (s/sqrt(2)) * e_i gives exact pairwise
  // distance s; otherwise fall back to a line with spacing s.
  Matrix means(k, d);
  if (d >= k) {
    for (std::size_t c = 0; c < k; ++c) {
      means.at(c, c) = separation / std::numbers::sqrt2;
    }
  } else {
    for (std::size_t c = 0; c < k; ++c) {
      means.at(c, 0) = separation * static_cast<double>(c);
    }
  }

  Dataset data;
  data.num_classes = static_cast<int>(k);
  data.features = Matrix(n, d);
  data.clean_labels.resize(n);
  // Balanced classes: class c gets n/k points plus one of the remainder.
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t count = n / k + (c < n % k ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i, ++row) {
      data.clean_labels[row] = static_cast<int>(c);
      for (std::size_t j = 0; j < d; ++j) {
        data.features.at(row, j) = means.at(c, j) + rng.next_normal();
      }
    }
  }
  data.noisy_labels = data.clean_labels;
  return data;
}

Dataset make_two_moons(std::size_t n, double noise_std, SeededRng& rng) {
  if (n == 0 || n % 2 != 0) {
    throw std::invalid_argument("make_two_moons: n must be even and positive");
  }
  if (noise_std < 0.0) {
    throw std::invalid_argument("make_two_moons: noise_std must be nonnegative");
  }
  const std::size_t half = n / 2;
  Dataset data;
  data.num_classes = 2;
  data.features = Matrix(n, 2);
  data.clean_labels.resize(n);
  for (std::size_t i = 0; i < half; ++i) {
    const double t = std::numbers::pi * static_cast<double>(i) /
                     static_cast<double>(half - 1 > 0 ? half - 1 : 1);
    data.features.at(i, 0) = std::cos(t) + noise_std * rng.next_normal();
    data.features.at(i, 1) = std::sin(t) + noise_std * rng.next_normal();
    data.clean_labels[i] = 0;
    const std::size_t j = half + i;
    data.features.at(j, 0) = 1.0 - std::cos(t) + noise_std * rng.next_normal();
    data.features.at(j, 1) = 0.5 - std::sin(t) + noise_std * rng.next_normal();
    data.clean_labels[j] = 1;
  }
  data.noisy_labels = data.clean_labels;
  return data;
}

namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& path,
                          std::size_t offset) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw std::runtime_error(path + ": truncated read at offset " +
                             std::to_string(offset));
  }
  return (static_cast<std::uint32_t>(bytes[0]) << 24) |
         (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) |
         static_cast<std::uint32_t>(bytes[3]);
}

}  // namespace

IdxImageHeader read_idx_image_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  const std::uint32_t magic = read_be_u32(in, path.string(), 0);
  if (magic != 0x00000803u) {
    throw std::runtime_error(path.string() + ": bad image magic at offset 0 (got 0x" +
                             [&] {
                               char buf[16];
                               std::snprintf(buf, sizeof(buf), "%08x", magic);
                               return std::string(buf);
                             }() +
                             ", expected 0x00000803)");
  }
  IdxImageHeader header;
  header.count = read_be_u32(in, path.string(), 4);
  header.height = read_be_u32(in, path.string(), 8);
  header.width = read_be_u32(in, path.string(), 12);
  if (header.height == 0 || header.width == 0) {
    throw std::runtime_error(path.string() + ": zero image dimensions at offset 8");
  }
  return header;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::size_t subset,
                 SeededRng& rng) {
  const IdxImageHeader header = read_idx_image_header(images_path);

  std::ifstream images(images_path, std::ios::binary);
  images.seekg(16);
  const std::size_t pixels = header.height * header.width;
  std::vector<unsigned char> raw(header.count * pixels);
  if (!images.read(reinterpret_cast<char*>(raw.data()),
                   static_cast<std::streamsize>(raw.size()))) {
    throw std::runtime_error(images_path.string() + ": truncated pixel data (expected " +
                             std::to_string(raw.size()) + " bytes from offset 16)");
  }

  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw std::runtime_error("cannot open: " + labels_path.string());
  const std::uint32_t magic = read_be_u32(labels, labels_path.string(), 0);
  if (magic != 0x00000801u) {
    throw std::runtime_error(labels_path.string() +
                             ": bad label magic at offset 0, expected 0x00000801");
  }
  const std::size_t label_count = read_be_u32(labels, labels_path.string(), 4);
  if (label_count != header.count) {
    throw std::runtime_error("image/label count mismatch: " +
                             std::to_string(header.count) + " vs " +
                             std::to_string(label_count));
  }
  std::vector<unsigned char> raw_labels(label_count);
  if (!labels.read(reinterpret_cast<char*>(raw_labels.data()),
                   static_cast<std::streamsize>(raw_labels.size()))) {
    throw std::runtime_error(labels_path.string() + ": truncated label data");
  }

  int num_classes = 0;
  for (unsigned char y : raw_labels) {
    num_classes = std::max(num_classes, static_cast<int>(y) + 1);
  }

  // Stratified subset: per-class quotas proportional to class frequency.
  std::vector<std::size_t> chosen;
  if (subset == 0 || subset >= header.count) {
    chosen.resize(header.count);
    std::iota(chosen.begin(), chosen.end(), 0);
  } else {
    std::vector<std::vector<std::size_t>> by_class(
        static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
      by_class[raw_labels[i]].push_back(i);
    }
    const double frac =
        static_cast<double>(subset) / static_cast<double>(header.count);
    std::vector<std::size_t> quota(by_class.size());
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      quota[c] = std::min(by_class[c].size(),
                          static_cast<std::size_t>(
                              std::floor(frac * static_cast<double>(by_class[c].size()))));
      assigned += quota[c];
    }
    // Distribute the remainder round-robin over classes with spare examples.
    std::size_t c = 0;
    while (assigned < subset) {
      if (quota[c] < by_class[c].size()) {
        ++quota[c];
        ++assigned;
      }
      c = (c + 1) % by_class.size();
    }
    for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
      std::vector<std::size_t>& pool = by_class[cls];
      shuffle(pool, rng);
      for (std::size_t i = 0; i < quota[cls]; ++i) chosen.push_back(pool[i]);
    }
    std::sort(chosen.begin(), chosen.end());
  }

  Dataset data;
  data.num_classes = num_classes;
  data.features = Matrix(chosen.size(), pixels);
  data.clean_labels.resize(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const std::size_t src = chosen[i];
    for (std::size_t p = 0; p < pixels; ++p) {
      data.features.at(i, p) =
          static_cast<double>(raw[src * pixels + p]) / 255.0;
    }
    data.clean_labels[i] = static_cast<int>(raw_labels[src]);
  }
  data.noisy_labels = data.clean_labels;
  validate_dataset(data);
  return data;
}

}  // namespace pes::harness
