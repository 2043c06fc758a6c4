#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "peslab/confident.hpp"
#include "peslab/network.hpp"
#include "peslab/noise.hpp"
#include "peslab/optimizer.hpp"
#include "peslab/pes.hpp"
#include "peslab/profiler.hpp"
#include "peslab/semi.hpp"

namespace pes::harness {

// Validation failures carry every violation found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class DatasetKind { kBlobs, kTwoMoons, kIdx };
enum class RunMode { kBaselineEs, kPes, kPesConfident, kPesSemi };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kBlobs;
  std::size_t n = 3000;
  std::size_t dim = 16;
  std::size_t classes = 3;
  double separation = 4.0;
  double noise_std = 0.1;  // two_moons
  std::size_t test_n = 1000;
  std::filesystem::path images, labels;            // idx
  std::filesystem::path test_images, test_labels;  // idx
  std::size_t subset = 0;       // 0 = all
  std::size_t test_subset = 0;  // 0 = all
};

struct ModelConfig {
  std::vector<std::size_t> hidden_dims = {64, 64, 64, 64};
  // One-past-the-end layer indices of each part; the default splits the
  // five layers into hidden 1-2 / hidden 3-4 / output.
  std::vector<std::size_t> part_boundaries = {2, 4, 5};
};

struct ConfidentConfig {
  double augment_sigma = 0.1;
  std::size_t crop_pad = 2;  // image datasets
  WeightMode weight_mode = WeightMode::kProportional;
  std::size_t refine_epochs = 10;  // pes_confident mode
  OptimizerState optimizer = make_adam(1e-3);
};

struct ProfileConfig {
  std::vector<std::size_t> probe_layers = {2, 3, 4};
  std::vector<std::size_t> epoch_grid = {0, 5, 10, 20, 40, 80};
  std::size_t clean_retrain_epochs = 30;
  OptimizerState noisy_optimizer = make_adam(1e-3, 1e-4);
  OptimizerState retrain_optimizer = make_adam(1e-3);
};

struct ExperimentConfig {
  int version = 1;
  RunMode mode = RunMode::kPes;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::filesystem::path output_dir = "out/run";
  double val_fraction = 0.1;
  DatasetConfig dataset;
  NoiseSpec noise{NoiseKind::kSymmetricExcl, 0.4, 0};
  ModelConfig model;
  PESSchedule schedule;  // stage_optimizers defaulted in default_config_json
  ConfidentConfig confident;
  SemiConfig semi;
  ProfileConfig profile;
  // Off by default: noisy-validation accuracy is reported, not used for
  // model selection.
  bool select_best_on_noisy_val = false;
};

// The full default document; user configs are deep-merged over it.
nlohmann::json default_config_json();

// Parses and validates; throws ConfigError listing every violation.
ExperimentConfig parse_config(const nlohmann::json& merged);

// Deep-merge of `overrides` over defaults, then parse.
ExperimentConfig config_from_json(const nlohmann::json& overrides);
ExperimentConfig load_config_file(const std::filesystem::path& path);

nlohmann::json optimizer_to_json(const OptimizerState& opt);
OptimizerState optimizer_from_json(const nlohmann::json& doc,
                                   const std::string& where,
                                   std::vector<std::string>& problems);

}  // namespace pes::harness
