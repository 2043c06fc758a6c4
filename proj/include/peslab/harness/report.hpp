#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pes::harness {

struct ReportCondition {
  std::string name;  // results-dir-relative directory of the runs
  std::string mode;
  std::size_t seed_count = 0;
  std::size_t failed = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_precision = 0.0;
  double std_precision = 0.0;
  double mean_recall = 0.0;
  double std_recall = 0.0;
};

// Aggregates every run_seed_*.json under results_dir (recursively) into
// summary.csv and summary.md, one row per directory, mean +/- sample std
// over seeds. With `svg` set, renders line charts for any sweep_*.csv and
// sensitivity_aggregate.csv found. Re-running on unchanged inputs is
// byte-identical. Throws if the directory holds no results at all.
std::vector<ReportCondition> report(const std::filesystem::path& results_dir,
                                    bool svg = false);

}  // namespace pes::harness
