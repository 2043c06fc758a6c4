#include "peslab/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pes {

void validate_dataset(const Dataset& data) {
  const std::size_t n = data.features.rows;
  if (data.clean_labels.size() != n || data.noisy_labels.size() != n) {
    throw std::invalid_argument("dataset: label vectors must match feature rows");
  }
  if (data.num_classes < 2) {
    throw std::invalid_argument("dataset: need at least 2 classes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (data.clean_labels[i] < 0 || data.clean_labels[i] >= data.num_classes ||
        data.noisy_labels[i] < 0 || data.noisy_labels[i] >= data.num_classes) {
      throw std::invalid_argument("dataset: label out of range at row " +
                                  std::to_string(i));
    }
  }
  check_finite(data.features, "dataset features");
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.features = gather_rows(data.features, indices);
  out.num_classes = data.num_classes;
  out.clean_labels.reserve(indices.size());
  out.noisy_labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    out.clean_labels.push_back(data.clean_labels[idx]);
    out.noisy_labels.push_back(data.noisy_labels[idx]);
  }
  return out;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  validate_dataset(data);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  std::string line = "index,clean_label,noisy_label";
  for (std::size_t j = 0; j < data.dim(); ++j) {
    line += ",f" + std::to_string(j);
  }
  out << line << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    line.clear();
    line += std::to_string(i);
    line += ',';
    line += std::to_string(data.clean_labels[i]);
    line += ',';
    line += std::to_string(data.noisy_labels[i]);
    for (std::size_t j = 0; j < data.dim(); ++j) {
      line += ',';
      append_double(line, data.features.at(i, j));
    }
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("empty dataset file: " + path.string());
  }
  if (header.rfind("index,clean_label,noisy_label", 0) != 0) {
    throw std::runtime_error("bad dataset header in " + path.string());
  }
  std::size_t dim = 0;
  for (char c : header) {
    if (c == ',') ++dim;
  }
  if (dim < 3) throw std::runtime_error("dataset has no feature columns: " + path.string());
  dim -= 2;

  std::vector<double> values;
  std::vector<int> clean;
  std::vector<int> noisy;
  std::string line;
  std::size_t row = 0;
  int max_label = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    std::size_t field = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      std::string_view tok(line.data() + pos, next - pos);
      if (field == 1 || field == 2) {
        int v = 0;
        auto res = std::from_chars(tok.begin(), tok.end(), v);
        if (res.ec != std::errc{}) {
          throw std::runtime_error("bad label at row " + std::to_string(row));
        }
        (field == 1 ? clean : noisy).push_back(v);
        max_label = std::max(max_label, v);
      } else if (field >= 3) {
        double v = 0.0;
        auto res = std::from_chars(tok.begin(), tok.end(), v);
        if (res.ec != std::errc{}) {
          throw std::runtime_error("bad feature value at row " + std::to_string(row));
        }
        values.push_back(v);
      }
      ++field;
      pos = next + 1;
    }
    if (field != dim + 3) {
      throw std::runtime_error("wrong column count at row " + std::to_string(row));
    }
    ++row;
  }
  Dataset out;
  out.features.rows = row;
  out.features.cols = dim;
  out.features.data = std::move(values);
  out.clean_labels = std::move(clean);
  out.noisy_labels = std::move(noisy);
  out.num_classes = max_label + 1;
  validate_dataset(out);
  return out;
}

}  // namespace pes
