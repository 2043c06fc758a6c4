#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "peslab/harness/config.hpp"
#include "peslab/pes.hpp"
#include "peslab/profiler.hpp"
#include "peslab/semi.hpp"

namespace pes::harness {

struct RunResult {
  std::uint64_t seed = 0;
  std::string mode;
  bool ok = true;
  std::string error;  // set when this seed's run failed
  double test_accuracy = 0.0;
  std::optional<double> label_precision;
  std::optional<double> label_recall;
  std::size_t confident_labeled = 0;
  std::size_t confident_unlabeled = 0;
  std::vector<StageReport> stage_reports;
  std::vector<SemiEpochStats> semi_epochs;
  double wall_clock_seconds = 0.0;
};

nlohmann::json run_result_to_json(const RunResult& result);

// Train datasets (noisy train + noisy validation + clean test) derived
// deterministically from (config, seed).
struct SeedData {
  Dataset train;  // noisy labels applied, validation carved out
  Dataset val;    // noisy validation slice (10% by default)
  Dataset test;   // clean held-out set
};

SeedData prepare_seed_data(const ExperimentConfig& config, std::uint64_t seed);

// Augmenter matching the dataset kind (jitter for vectors, flip+crop for
// images), fitted on the given training set.
Augmenter make_augmenter(const ExperimentConfig& config, const Dataset& train,
                         std::uint64_t seed);

// One seed's full pipeline. Throws only on configuration errors; runtime
// failures are recorded in the result.
RunResult run_single(const ExperimentConfig& config, std::uint64_t seed);

// All seeds; per-seed run logs (run_seed_<seed>.json) are written into
// config.output_dir. An existing nonempty output directory is rejected
// unless `overwrite` is set. Failed seeds are recorded and do not stop the
// remaining seeds.
std::vector<RunResult> run_experiment(const ExperimentConfig& config,
                                      bool overwrite = false);

struct SweepRow {
  nlohmann::json value;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  bool is_best = false;
};

// Runs one experiment per value with `parameter` (dotted path into the
// config document, e.g. "schedule.stage_epochs.1") replaced. Writes per-value
// run logs into subdirectories plus an aggregated CSV, and returns the rows.
std::vector<SweepRow> sweep(const nlohmann::json& base_config,
                            const std::string& parameter,
                            const std::vector<nlohmann::json>& values,
                            bool overwrite = false);

// Layer-sensitivity sweep wired to the config's dataset/noise/profile
// sections; emits sensitivity_samples.csv and sensitivity_aggregate.csv
// into the output directory.
SensitivityProfile run_profile(const ExperimentConfig& config,
                               bool overwrite = false);

// Strips volatile wall-clock fields; used for determinism comparisons.
nlohmann::json strip_wall_clock(nlohmann::json doc);

}  // namespace pes::harness
