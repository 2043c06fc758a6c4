// Command-line front end: data generation, noise injection, training runs,
// layer probes, sweeps and reporting. Exit codes: 0 success, 1 validation
// failure, 2 runtime failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "peslab/harness/config.hpp"
#include "peslab/harness/datasets.hpp"
#include "peslab/harness/experiment.hpp"
#include "peslab/harness/report.hpp"
#include "peslab/noise.hpp"

namespace {

using namespace pes;
using namespace pes::harness;

struct CommonFlags {
  std::string config_file;
  std::string mode;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string dataset_kind;
  std::size_t n = 0;
  std::size_t dim = 0;
  std::size_t classes = 0;
  double separation = -1.0;
  double moons_noise_std = -1.0;
  std::size_t test_n = 0;
  std::string images, labels, test_images, test_labels;
  std::string noise_kind;
  double noise_rate = -1.0;
  std::vector<std::size_t> stage_epochs;
  std::size_t batch_size = 0;
  double val_fraction = -1.0;
  bool overwrite = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file,
                  "JSON config file; its values override the flags");
  cmd->add_option("--mode", flags.mode, "baseline_es|pes|pes_confident|pes_semi");
  cmd->add_option("--seed,--seeds", flags.seeds, "run seeds")->delimiter(',');
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--dataset-kind", flags.dataset_kind, "blobs|two_moons|idx");
  cmd->add_option("--n", flags.n, "training set size");
  cmd->add_option("--dim", flags.dim, "feature dimension (blobs)");
  cmd->add_option("--classes", flags.classes, "class count (blobs)");
  cmd->add_option("--separation", flags.separation, "blob mean separation");
  cmd->add_option("--moons-noise-std", flags.moons_noise_std, "two-moons jitter");
  cmd->add_option("--test-n", flags.test_n, "test set size");
  cmd->add_option("--images", flags.images, "IDX image file");
  cmd->add_option("--labels", flags.labels, "IDX label file");
  cmd->add_option("--test-images", flags.test_images, "IDX test image file");
  cmd->add_option("--test-labels", flags.test_labels, "IDX test label file");
  cmd->add_option("--noise-kind", flags.noise_kind,
                  "symmetric_incl|symmetric_excl|pairflip|instance");
  cmd->add_option("--noise-rate", flags.noise_rate, "label flip rate");
  cmd->add_option("--stage-epochs", flags.stage_epochs, "epoch budgets T1,...,TL")
      ->delimiter(',');
  cmd->add_option("--batch-size", flags.batch_size, "mini-batch size");
  cmd->add_option("--val-fraction", flags.val_fraction, "noisy validation fraction");
  cmd->add_flag("--overwrite", flags.overwrite, "reuse a nonempty output directory");
}

nlohmann::json flags_to_overrides(const CommonFlags& flags) {
  nlohmann::json doc = nlohmann::json::object();
  if (!flags.mode.empty()) doc["mode"] = flags.mode;
  if (!flags.seeds.empty()) doc["seeds"] = flags.seeds;
  if (!flags.out.empty()) doc["output_dir"] = flags.out;
  nlohmann::json dataset = nlohmann::json::object();
  if (!flags.dataset_kind.empty()) dataset["kind"] = flags.dataset_kind;
  if (flags.n) dataset["n"] = flags.n;
  if (flags.dim) dataset["dim"] = flags.dim;
  if (flags.classes) dataset["classes"] = flags.classes;
  if (flags.separation >= 0.0) dataset["separation"] = flags.separation;
  if (flags.moons_noise_std >= 0.0) dataset["noise_std"] = flags.moons_noise_std;
  if (flags.test_n) dataset["test_n"] = flags.test_n;
  if (!flags.images.empty()) dataset["images"] = flags.images;
  if (!flags.labels.empty()) dataset["labels"] = flags.labels;
  if (!flags.test_images.empty()) dataset["test_images"] = flags.test_images;
  if (!flags.test_labels.empty()) dataset["test_labels"] = flags.test_labels;
  if (!dataset.empty()) doc["dataset"] = dataset;
  nlohmann::json noise = nlohmann::json::object();
  if (!flags.noise_kind.empty()) noise["kind"] = flags.noise_kind;
  if (flags.noise_rate >= 0.0) noise["rate"] = flags.noise_rate;
  if (!noise.empty()) doc["noise"] = noise;
  nlohmann::json schedule = nlohmann::json::object();
  if (!flags.stage_epochs.empty()) schedule["stage_epochs"] = flags.stage_epochs;
  if (flags.batch_size) schedule["batch_size"] = flags.batch_size;
  if (!schedule.empty()) doc["schedule"] = schedule;
  if (flags.val_fraction >= 0.0) doc["val_fraction"] = flags.val_fraction;
  return doc;
}

// Flag values first, then the config file on top: the file wins.
ExperimentConfig resolve_config(const CommonFlags& flags) {
  nlohmann::json overrides = flags_to_overrides(flags);
  if (!flags.config_file.empty()) {
    std::ifstream in(flags.config_file);
    if (!in) throw ConfigError({"cannot open config file: " + flags.config_file});
    nlohmann::json file_doc;
    try {
      in >> file_doc;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError({"config file " + flags.config_file + ": " + e.what()});
    }
    overrides.update(file_doc, /*merge_objects=*/true);
  }
  return config_from_json(overrides);
}

int cmd_gen_data(const CommonFlags& flags, const std::string& out_csv,
                 const std::string& test_out_csv) {
  CommonFlags local = flags;
  if (local.out.empty()) local.out = "out/gen";  // unused; satisfies validation
  const ExperimentConfig cfg = resolve_config(local);
  const std::uint64_t seed = cfg.seeds.front();
  const SeedData data = prepare_seed_data(
      [&] {
        ExperimentConfig c = cfg;
        c.noise.rate = 0.0;  // gen-data emits clean labels; add-noise flips them
        c.val_fraction = 0.0;
        return c;
      }(),
      seed);
  save_dataset_csv(data.train, out_csv);
  std::cout << "wrote " << data.train.size() << " examples to " << out_csv << "\n";
  if (!test_out_csv.empty()) {
    save_dataset_csv(data.test, test_out_csv);
    std::cout << "wrote " << data.test.size() << " examples to " << test_out_csv << "\n";
  }
  return 0;
}

int cmd_add_noise(const std::string& in_csv, const std::string& out_csv,
                  const std::string& kind, double rate, std::uint64_t seed,
                  int classes) {
  Dataset data = load_dataset_csv(in_csv);
  if (classes > 0) {
    if (classes < data.num_classes) {
      throw std::invalid_argument("--classes is below the labels present in " + in_csv);
    }
    data.num_classes = classes;
  }
  NoiseSpec spec;
  spec.kind = noise_kind_from_string(kind);
  spec.rate = rate;
  spec.seed = seed;
  apply_noise(data, spec);
  save_dataset_csv(data, out_csv);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.clean_labels[i] != data.noisy_labels[i]) ++flipped;
  }
  std::cout << "flipped " << flipped << "/" << data.size() << " labels ("
            << to_string(spec.kind) << ", rate " << rate << ") -> " << out_csv << "\n";
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  const ExperimentConfig cfg = resolve_config(flags);
  const std::vector<RunResult> results = run_experiment(cfg, flags.overwrite);
  std::size_t failures = 0;
  for (const RunResult& r : results) {
    if (!r.ok) {
      ++failures;
      std::cout << "seed " << r.seed << ": FAILED (" << r.error << ")\n";
      continue;
    }
    std::printf("seed %llu: test accuracy %.4f", static_cast<unsigned long long>(r.seed),
                r.test_accuracy);
    if (r.label_precision) std::printf(", precision %.4f", *r.label_precision);
    if (r.label_recall) std::printf(", recall %.4f", *r.label_recall);
    std::printf("\n");
  }
  std::cout << "run logs in " << cfg.output_dir.string() << "\n";
  return failures == results.size() ? 2 : 0;
}

int cmd_profile(const CommonFlags& flags, const std::vector<std::size_t>& layers,
                const std::vector<std::size_t>& grid, std::size_t retrain_epochs,
                bool svg) {
  nlohmann::json overrides = flags_to_overrides(flags);
  nlohmann::json profile = nlohmann::json::object();
  if (!layers.empty()) profile["probe_layers"] = layers;
  if (!grid.empty()) profile["epoch_grid"] = grid;
  if (retrain_epochs) profile["clean_retrain_epochs"] = retrain_epochs;
  if (!profile.empty()) overrides["profile"] = profile;
  if (!flags.config_file.empty()) {
    std::ifstream in(flags.config_file);
    if (!in) throw ConfigError({"cannot open config file: " + flags.config_file});
    nlohmann::json file_doc;
    in >> file_doc;
    overrides.update(file_doc, true);
  }
  const ExperimentConfig cfg = config_from_json(overrides);
  const SensitivityProfile result = run_profile(cfg, flags.overwrite);
  for (const SensitivityCurve& curve : result.curves) {
    std::printf("layer %zu: peak at %zu noisy epochs (mean accuracy %.4f)\n",
                curve.layer, curve.peak_epoch,
                *std::max_element(curve.mean_accuracy.begin(),
                                  curve.mean_accuracy.end()));
  }
  if (svg) report(cfg.output_dir, true);
  std::cout << "curves in " << cfg.output_dir.string() << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& parameter,
              const std::vector<std::string>& raw_values) {
  nlohmann::json base = flags_to_overrides(flags);
  if (!flags.config_file.empty()) {
    std::ifstream in(flags.config_file);
    if (!in) throw ConfigError({"cannot open config file: " + flags.config_file});
    nlohmann::json file_doc;
    in >> file_doc;
    base.update(file_doc, true);
  }
  std::vector<nlohmann::json> values;
  for (const std::string& raw : raw_values) {
    try {
      values.push_back(nlohmann::json::parse(raw));
    } catch (const nlohmann::json::exception&) {
      values.push_back(raw);  // non-JSON scalars sweep as strings
    }
  }
  const std::vector<SweepRow> rows = sweep(base, parameter, values, flags.overwrite);
  for (const SweepRow& row : rows) {
    std::printf("%s = %s: accuracy %.4f ± %.4f%s\n", parameter.c_str(),
                row.value.dump().c_str(), row.mean_accuracy, row.std_accuracy,
                row.is_best ? "  <- best" : "");
  }
  return 0;
}

int cmd_report(const std::string& dir, bool svg) {
  const std::vector<ReportCondition> conditions = report(dir, svg);
  for (const ReportCondition& c : conditions) {
    std::printf("%s [%s, %zu seeds]: accuracy %.4f ± %.4f\n", c.name.c_str(),
                c.mode.c_str(), c.seed_count, c.mean_accuracy, c.std_accuracy);
  }
  std::cout << "summary in " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-noise training laboratory: progressive early stopping, "
               "confident-example selection and semi-supervised refinement"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
  std::string gen_out = "data.csv";
  std::string gen_test_out;
  add_common_flags(gen, flags);
  gen->add_option("--out-csv", gen_out, "output CSV path")->required();
  gen->add_option("--test-out-csv", gen_test_out, "optional test-set CSV path");

  auto* noise = app.add_subcommand("add-noise", "inject label noise into a dataset CSV");
  std::string noise_in, noise_out, noise_kind = "symmetric_excl";
  double noise_rate = 0.4;
  std::uint64_t noise_seed = 1;
  int noise_classes = 0;
  noise->add_option("--in", noise_in, "input dataset CSV")->required();
  noise->add_option("--out", noise_out, "output dataset CSV")->required();
  noise->add_option("--kind", noise_kind,
                    "symmetric_incl|symmetric_excl|pairflip|instance");
  noise->add_option("--rate", noise_rate, "flip rate");
  noise->add_option("--seed", noise_seed, "noise seed");
  noise->add_option("--classes", noise_classes,
                    "class count when the CSV does not cover every class");

  auto* train = app.add_subcommand("train", "run training per seed and log results");
  add_common_flags(train, flags);

  auto* prof = app.add_subcommand("profile-layers",
                                  "layer-wise noise-sensitivity probe");
  std::vector<std::size_t> prof_layers, prof_grid;
  std::size_t prof_retrain = 0;
  bool prof_svg = false;
  add_common_flags(prof, flags);
  prof->add_option("--layers", prof_layers, "layer indices to probe")->delimiter(',');
  prof->add_option("--grid", prof_grid, "noisy-epoch grid")->delimiter(',');
  prof->add_option("--clean-retrain-epochs", prof_retrain, "suffix retrain budget");
  prof->add_flag("--svg", prof_svg, "render curves as SVG");

  auto* sw = app.add_subcommand("sweep", "grid sweep over one config parameter");
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  add_common_flags(sw, flags);
  sw->add_option("--param", sweep_param, "dotted config path, e.g. schedule.stage_epochs.1")
      ->required();
  sw->add_option("--values", sweep_values, "values to sweep")->required()->delimiter(',');

  auto* rep = app.add_subcommand("report", "aggregate run logs into summary tables");
  std::string report_dir;
  bool report_svg = false;
  rep->add_option("--dir", report_dir, "results directory")->required();
  rep->add_flag("--svg", report_svg, "render charts for sweeps and probes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(flags, gen_out, gen_test_out);
    if (noise->parsed()) {
      return cmd_add_noise(noise_in, noise_out, noise_kind, noise_rate, noise_seed,
                           noise_classes);
    }
    if (train->parsed()) return cmd_train(flags);
    if (prof->parsed()) {
      return cmd_profile(flags, prof_layers, prof_grid, prof_retrain, prof_svg);
    }
    if (sw->parsed()) return cmd_sweep(flags, sweep_param, sweep_values);
    if (rep->parsed()) return cmd_report(report_dir, report_svg);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
