#include "peslab/harness/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "peslab/harness/csv.hpp"
#include "peslab/harness/datasets.hpp"
#include "peslab/noise.hpp"
#include "peslab/training.hpp"

namespace pes::harness {

namespace {

// Seed streams: one per independent randomness consumer in a run.
enum SeedStream : std::uint64_t {
  kStreamTrainData = 1,
  kStreamTestData = 2,
  kStreamNoise = 3,
  kStreamCarve = 4,
  kStreamInit = 5,
  kStreamShuffle = 6,
  kStreamAugment = 7,
  kStreamSemi = 8,
  kStreamRefine = 9,
  kStreamMetrics = 10,
  kStreamSubset = 11,
};

Dataset generate_base(const ExperimentConfig& config, std::uint64_t seed,
                      bool test_split) {
  const DatasetConfig& d = config.dataset;
  SeededRng rng(mix_seeds(seed, test_split ? kStreamTestData : kStreamTrainData));
  switch (d.kind) {
    case DatasetKind::kBlobs:
      return make_blobs(test_split ? d.test_n : d.n, d.dim, d.classes, d.separation,
                        rng);
    case DatasetKind::kTwoMoons:
      return make_two_moons(test_split ? d.test_n : d.n, d.noise_std, rng);
    case DatasetKind::kIdx: {
      SeededRng subset_rng(mix_seeds(seed, kStreamSubset + (test_split ? 100 : 0)));
      return test_split ? load_idx(d.test_images, d.test_labels, d.test_subset,
                                   subset_rng)
                        : load_idx(d.images, d.labels, d.subset, subset_rng);
    }
  }
  throw std::logic_error("unreachable dataset kind");
}

std::vector<LayerSpec> build_arch(const ExperimentConfig& config,
                                  std::size_t input_dim, std::size_t classes) {
  return mlp_specs(input_dim, config.model.hidden_dims, classes);
}

// baseline_es collapses the partition to a single part trained for the
// stage-1 budget; the PES modes use the configured partition.
std::vector<std::size_t> boundaries_for_mode(const ExperimentConfig& config,
                                             std::size_t layer_count) {
  if (config.mode == RunMode::kBaselineEs) return {layer_count};
  return config.model.part_boundaries;
}

PESSchedule schedule_for_mode(const ExperimentConfig& config, std::uint64_t seed) {
  PESSchedule schedule = config.schedule;
  if (config.mode == RunMode::kBaselineEs) {
    schedule.stage_epochs = {config.schedule.stage_epochs.front()};
    schedule.stage_optimizers = {config.schedule.stage_optimizers.front()};
  }
  schedule.shuffle_seed = mix_seeds(seed, kStreamShuffle);
  return schedule;
}

}  // namespace

SeedData prepare_seed_data(const ExperimentConfig& config, std::uint64_t seed) {
  Dataset full = generate_base(config, seed, /*test_split=*/false);
  NoiseSpec noise = config.noise;
  noise.seed = mix_seeds(seed, kStreamNoise);
  validate_noise_spec(noise, static_cast<std::size_t>(full.num_classes));
  if (noise.rate > 0.0) apply_noise(full, noise);

  // Noisy validation carve-out: shuffled indices, first val_fraction slice.
  std::vector<std::size_t> order(full.size());
  std::iota(order.begin(), order.end(), 0);
  SeededRng carve_rng(mix_seeds(seed, kStreamCarve));
  shuffle(order, carve_rng);
  const std::size_t val_count =
      static_cast<std::size_t>(config.val_fraction * static_cast<double>(full.size()));

  SeedData data;
  data.val = subset(full, std::span(order).subspan(0, val_count));
  data.train = subset(full, std::span(order).subspan(val_count));
  data.test = generate_base(config, seed, /*test_split=*/true);
  return data;
}

Augmenter make_augmenter(const ExperimentConfig& config, const Dataset& train,
                         std::uint64_t seed) {
  const std::uint64_t aug_seed = mix_seeds(seed, kStreamAugment);
  if (config.dataset.kind == DatasetKind::kIdx) {
    const IdxImageHeader header = read_idx_image_header(config.dataset.images);
    return make_image_augmenter(header.height, header.width, config.confident.crop_pad,
                                aug_seed);
  }
  return make_jitter_augmenter(train.features, config.confident.augment_sigma,
                               aug_seed);
}

RunResult run_single(const ExperimentConfig& config, std::uint64_t seed) {
  RunResult result;
  result.seed = seed;
  result.mode = to_string(config.mode);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const SeedData data = prepare_seed_data(config, seed);
    const std::vector<LayerSpec> arch =
        build_arch(config, data.train.dim(),
                   static_cast<std::size_t>(data.train.num_classes));
    SeededRng init_rng(mix_seeds(seed, kStreamInit));
    PartitionedNetwork net =
        init_network(arch, boundaries_for_mode(config, arch.size()), init_rng);
    const PESSchedule schedule = schedule_for_mode(config, seed);
    validate_schedule(schedule, net);

    const Dataset* val = data.val.size() > 0 ? &data.val : nullptr;
    result.stage_reports = train_pes(net, data.train, schedule, val);

    const Augmenter augmenter = make_augmenter(config, data.train, seed);
    if (config.mode == RunMode::kPesConfident) {
      SeededRng extract_rng(mix_seeds(seed, kStreamRefine));
      const ConfidentSplit split =
          extract_confident(net, data.train, augmenter, extract_rng);
      const std::vector<double> weights =
          class_weights(split, config.confident.weight_mode);
      train_weighted(net, data.train, split, weights, config.confident.refine_epochs,
                     config.confident.optimizer, config.schedule.batch_size,
                     mix_seeds(seed, kStreamRefine));
    } else if (config.mode == RunMode::kPesSemi) {
      SeededRng extract_rng(mix_seeds(seed, kStreamSemi));
      const ConfidentSplit split =
          extract_confident(net, data.train, augmenter, extract_rng);
      SeededRng semi_rng(mix_seeds(seed, kStreamSemi + 1000));
      result.semi_epochs = train_semi(net, split, data.train, config.semi, augmenter,
                                      semi_rng, &data.test);
    }

    SeededRng metrics_rng(mix_seeds(seed, kStreamMetrics));
    const ConfidentSplit final_split =
        extract_confident(net, data.train, augmenter, metrics_rng);
    result.confident_labeled = final_split.labeled.size();
    result.confident_unlabeled = final_split.unlabeled.size();
    const LabelMetrics metrics = label_metrics(final_split, data.train);
    result.label_precision = metrics.precision;
    result.label_recall = metrics.recall;
    result.test_accuracy =
        evaluate_accuracy(net, data.test.features, data.test.clean_labels);
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  result.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
  return result;
}

nlohmann::json run_result_to_json(const RunResult& result) {
  nlohmann::json doc;
  doc["seed"] = result.seed;
  doc["mode"] = result.mode;
  doc["ok"] = result.ok;
  doc["error"] = result.error;
  doc["test_accuracy"] = result.test_accuracy;
  doc["label_precision"] =
      result.label_precision ? nlohmann::json(*result.label_precision)
                             : nlohmann::json(nullptr);
  doc["label_recall"] = result.label_recall ? nlohmann::json(*result.label_recall)
                                            : nlohmann::json(nullptr);
  doc["confident_labeled_count"] = result.confident_labeled;
  doc["confident_unlabeled_count"] = result.confident_unlabeled;
  auto& stages = doc["stages"];
  stages = nlohmann::json::array();
  for (const StageReport& report : result.stage_reports) {
    stages.push_back(nlohmann::json::parse(stage_report_to_json(report)));
  }
  auto& semi = doc["semi_epochs"];
  semi = nlohmann::json::array();
  for (const SemiEpochStats& s : result.semi_epochs) {
    nlohmann::json entry;
    entry["epoch"] = s.epoch;
    entry["labeled_count"] = s.labeled_count;
    entry["unlabeled_count"] = s.unlabeled_count;
    entry["mean_loss"] = s.mean_loss;
    entry["lambda_u_effective"] = s.lambda_u_effective;
    entry["test_accuracy"] =
        s.eval_accuracy ? nlohmann::json(*s.eval_accuracy) : nlohmann::json(nullptr);
    semi.push_back(std::move(entry));
  }
  doc["wall_clock_seconds"] = result.wall_clock_seconds;
  return doc;
}

nlohmann::json strip_wall_clock(nlohmann::json doc) {
  if (doc.is_object()) {
    doc.erase("wall_clock_seconds");
    for (auto& [key, value] : doc.items()) value = strip_wall_clock(value);
  } else if (doc.is_array()) {
    for (auto& value : doc) value = strip_wall_clock(value);
  }
  return doc;
}

namespace {

void prepare_output_dir(const std::filesystem::path& dir, bool overwrite) {
  namespace fs = std::filesystem;
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!overwrite) {
      throw std::runtime_error("output directory " + dir.string() +
                               " exists and is not empty; pass --overwrite to reuse it");
    }
  } else {
    fs::create_directories(dir);
  }
}

}  // namespace

std::vector<RunResult> run_experiment(const ExperimentConfig& config, bool overwrite) {
  prepare_output_dir(config.output_dir, overwrite);
  std::vector<RunResult> results;
  for (std::uint64_t seed : config.seeds) {
    RunResult result = run_single(config, seed);
    const std::filesystem::path path =
        config.output_dir / ("run_seed_" + std::to_string(seed) + ".json");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write run log: " + path.string());
    out << run_result_to_json(result).dump(2) << '\n';
    results.push_back(std::move(result));
  }
  return results;
}

namespace {

std::string sanitize(const std::string& text) {
  std::string out;
  for (char c : text) out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<SweepRow> sweep(const nlohmann::json& base_config,
                            const std::string& parameter,
                            const std::vector<nlohmann::json>& values,
                            bool overwrite) {
  if (values.empty()) throw std::invalid_argument("sweep: no values given");
  std::string pointer = "/" + parameter;
  std::replace(pointer.begin(), pointer.end(), '.', '/');

  nlohmann::json merged = default_config_json();
  merged.update(base_config, /*merge_objects=*/true);
  if (!merged.contains(nlohmann::json::json_pointer(pointer))) {
    throw std::invalid_argument("sweep: unknown config path '" + parameter + "'");
  }
  const ExperimentConfig base = parse_config(merged);
  prepare_output_dir(base.output_dir, overwrite);

  std::vector<SweepRow> rows;
  for (const nlohmann::json& value : values) {
    nlohmann::json patched = merged;
    patched[nlohmann::json::json_pointer(pointer)] = value;
    patched["output_dir"] = (base.output_dir /
                             (sanitize(parameter) + "_" + sanitize(value.dump())))
                                .string();
    const ExperimentConfig cfg = parse_config(patched);
    const std::vector<RunResult> results = run_experiment(cfg, overwrite);

    std::vector<double> acc, prec, rec;
    for (const RunResult& r : results) {
      if (!r.ok) continue;
      acc.push_back(r.test_accuracy);
      if (r.label_precision) prec.push_back(*r.label_precision);
      if (r.label_recall) rec.push_back(*r.label_recall);
    }
    SweepRow row;
    row.value = value;
    row.mean_accuracy = mean_of(acc);
    row.std_accuracy = sample_std(acc);
    row.mean_precision = mean_of(prec);
    row.mean_recall = mean_of(rec);
    rows.push_back(std::move(row));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].mean_accuracy > rows[best].mean_accuracy) best = i;
  }
  rows[best].is_best = true;

  CsvWriter csv(base.output_dir / ("sweep_" + sanitize(parameter) + ".csv"),
                {"value", "mean_test_accuracy", "std_test_accuracy",
                 "mean_label_precision", "mean_label_recall", "is_best"});
  for (const SweepRow& row : rows) {
    csv.row({row.value.dump(), csv_num(row.mean_accuracy), csv_num(row.std_accuracy),
             csv_num(row.mean_precision), csv_num(row.mean_recall),
             row.is_best ? "1" : "0"});
  }
  return rows;
}

SensitivityProfile run_profile(const ExperimentConfig& config, bool overwrite) {
  prepare_output_dir(config.output_dir, overwrite);
  const std::uint64_t base_seed = config.seeds.front();

  // The probe uses one dataset realization; probe seeds vary training.
  Dataset noisy = generate_base(config, base_seed, /*test_split=*/false);
  Dataset clean = noisy;  // pre-noise copy, the clean-retrain source
  NoiseSpec noise = config.noise;
  noise.seed = mix_seeds(base_seed, kStreamNoise);
  if (noise.rate > 0.0) apply_noise(noisy, noise);
  const Dataset test = generate_base(config, base_seed, /*test_split=*/true);

  ProbeConfig probe;
  probe.probe_layers = config.profile.probe_layers;
  probe.epoch_grid = config.profile.epoch_grid;
  probe.clean_retrain_epochs = config.profile.clean_retrain_epochs;
  probe.noisy_optimizer = config.profile.noisy_optimizer;
  probe.retrain_optimizer = config.profile.retrain_optimizer;
  probe.batch_size = config.schedule.batch_size;
  probe.seeds = config.seeds;

  const std::vector<LayerSpec> arch =
      build_arch(config, noisy.dim(), static_cast<std::size_t>(noisy.num_classes));
  const SensitivityProfile profile =
      sensitivity_profile(arch, noisy, clean, test, probe);

  CsvWriter samples(config.output_dir / "sensitivity_samples.csv",
                    {"layer", "epochs_noisy", "seed", "accuracy"});
  for (const ProbeSample& s : profile.samples) {
    samples.row({std::to_string(s.layer), std::to_string(s.epochs_noisy),
                 std::to_string(s.seed), csv_num(s.accuracy)});
  }
  CsvWriter agg(config.output_dir / "sensitivity_aggregate.csv",
                {"layer", "epochs_noisy", "mean", "std", "is_peak"});
  for (const SensitivityCurve& curve : profile.curves) {
    for (std::size_t g = 0; g < probe.epoch_grid.size(); ++g) {
      agg.row({std::to_string(curve.layer), std::to_string(probe.epoch_grid[g]),
               csv_num(curve.mean_accuracy[g]), csv_num(curve.std_accuracy[g]),
               probe.epoch_grid[g] == curve.peak_epoch ? "1" : "0"});
    }
  }
  return profile;
}

}  // namespace pes::harness
