#include "peslab/harness/config.hpp"

#include <fstream>
#include <sstream>

namespace pes::harness {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "configuration invalid (" + std::to_string(problems.size()) +
                    " problem" + (problems.size() == 1 ? "" : "s") + "):";
  for (const std::string& p : problems) out += "\n  - " + p;
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kBaselineEs: return "baseline_es";
    case RunMode::kPes: return "pes";
    case RunMode::kPesConfident: return "pes_confident";
    case RunMode::kPesSemi: return "pes_semi";
  }
  throw std::logic_error("invalid run mode");
}

RunMode run_mode_from_string(const std::string& name) {
  if (name == "baseline_es") return RunMode::kBaselineEs;
  if (name == "pes") return RunMode::kPes;
  if (name == "pes_confident") return RunMode::kPesConfident;
  if (name == "pes_semi") return RunMode::kPesSemi;
  throw std::invalid_argument("unknown mode: " + name +
                              " (expected baseline_es|pes|pes_confident|pes_semi)");
}

nlohmann::json optimizer_to_json(const OptimizerState& opt) {
  nlohmann::json doc;
  doc["kind"] = opt.kind == OptimizerKind::kSgd ? "sgd" : "adam";
  doc["lr"] = opt.learning_rate;
  doc["momentum"] = opt.momentum;
  doc["weight_decay"] = opt.weight_decay;
  if (opt.cosine) {
    doc["cosine"] = {{"lr_start", opt.cosine->lr_start},
                     {"lr_end", opt.cosine->lr_end},
                     {"total_epochs", opt.cosine->total_epochs}};
  } else {
    doc["cosine"] = nullptr;
  }
  return doc;
}

OptimizerState optimizer_from_json(const nlohmann::json& doc,
                                   const std::string& where,
                                   std::vector<std::string>& problems) {
  OptimizerState opt;
  try {
    const std::string kind = doc.value("kind", "sgd");
    if (kind == "sgd") {
      opt.kind = OptimizerKind::kSgd;
    } else if (kind == "adam") {
      opt.kind = OptimizerKind::kAdam;
    } else {
      problems.push_back(where + ": unknown optimizer kind '" + kind + "'");
    }
    opt.learning_rate = doc.value("lr", 0.01);
    opt.momentum = doc.value("momentum", 0.0);
    opt.weight_decay = doc.value("weight_decay", 0.0);
    if (doc.contains("cosine") && !doc["cosine"].is_null()) {
      CosineSchedule c;
      c.lr_start = doc["cosine"].value("lr_start", opt.learning_rate);
      c.lr_end = doc["cosine"].value("lr_end", opt.learning_rate);
      c.total_epochs = doc["cosine"].value("total_epochs", std::size_t{1});
      opt.cosine = c;
    }
    if (!(opt.learning_rate > 0.0)) {
      problems.push_back(where + ": learning rate must be positive");
    }
    if (opt.momentum < 0.0 || opt.momentum >= 1.0) {
      problems.push_back(where + ": momentum must lie in [0,1)");
    }
    if (opt.weight_decay < 0.0) {
      problems.push_back(where + ": weight decay must be nonnegative");
    }
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(where + ": " + e.what());
  }
  return opt;
}

nlohmann::json default_config_json() {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["mode"] = "pes";
  doc["seeds"] = {1, 2, 3, 4, 5};
  doc["output_dir"] = "out/run";
  doc["val_fraction"] = 0.1;
  doc["select_best_on_noisy_val"] = false;
  doc["dataset"] = {{"kind", "blobs"},     {"n", 3000},
                    {"dim", 16},           {"classes", 3},
                    {"separation", 4.0},   {"noise_std", 0.1},
                    {"test_n", 1000},      {"images", ""},
                    {"labels", ""},        {"subset", 0},
                    {"test_images", ""},   {"test_labels", ""},
                    {"test_subset", 0}};
  doc["noise"] = {{"kind", "symmetric_excl"}, {"rate", 0.4}};
  doc["model"] = {{"hidden_dims", {64, 64, 64, 64}},
                  {"part_boundaries", {2, 4, 5}}};
  doc["schedule"] = {
      {"stage_epochs", {30, 7, 5}},
      {"batch_size", 128},
      {"stage_optimizers",
       {{{"kind", "sgd"}, {"lr", 0.01}, {"momentum", 0.9}, {"weight_decay", 1e-4}},
        {{"kind", "adam"}, {"lr", 1e-3}},
        {{"kind", "adam"}, {"lr", 1e-3}}}}};
  doc["confident"] = {{"augment_sigma", 0.1},
                      {"crop_pad", 2},
                      {"weight_mode", "proportional"},
                      {"refine_epochs", 10},
                      {"optimizer", {{"kind", "adam"}, {"lr", 1e-3}}}};
  doc["semi"] = {{"lambda_u", 15.0},
                 {"temperature", 0.5},
                 {"k_aug", 2},
                 {"mix_alpha", 4.0},
                 {"mix_alpha_late", 0.75},
                 {"alpha_switch_epoch", nullptr},
                 {"ramp_epochs", 16},
                 {"total_epochs", 10},
                 {"batch_size", 128},
                 {"optimizer", {{"kind", "adam"}, {"lr", 1e-3}}}};
  doc["profile"] = {{"probe_layers", {2, 3, 4}},
                    {"epoch_grid", {0, 5, 10, 20, 40, 80}},
                    {"clean_retrain_epochs", 30},
                    {"noisy_optimizer",
                     {{"kind", "adam"}, {"lr", 1e-3}, {"weight_decay", 1e-4}}},
                    {"retrain_optimizer", {{"kind", "adam"}, {"lr", 1e-3}}}};
  return doc;
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
  std::vector<std::string> problems;
  ExperimentConfig cfg;

  auto read = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      problems.emplace_back(e.what());
    }
  };

  read([&] { cfg.version = doc.at("version").get<int>(); });
  if (cfg.version != 1) problems.push_back("unsupported config version");
  read([&] { cfg.mode = run_mode_from_string(doc.at("mode").get<std::string>()); });
  read([&] { cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>(); });
  if (cfg.seeds.empty()) problems.push_back("seeds: need at least one seed");
  read([&] { cfg.output_dir = doc.at("output_dir").get<std::string>(); });
  if (cfg.output_dir.empty()) problems.push_back("output_dir must not be empty");
  read([&] { cfg.val_fraction = doc.at("val_fraction").get<double>(); });
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) {
    problems.push_back("val_fraction must lie in [0,1)");
  }
  read([&] {
    cfg.select_best_on_noisy_val = doc.at("select_best_on_noisy_val").get<bool>();
  });

  // dataset
  read([&] {
    const auto& d = doc.at("dataset");
    const std::string kind = d.at("kind").get<std::string>();
    if (kind == "blobs") {
      cfg.dataset.kind = DatasetKind::kBlobs;
    } else if (kind == "two_moons") {
      cfg.dataset.kind = DatasetKind::kTwoMoons;
    } else if (kind == "idx") {
      cfg.dataset.kind = DatasetKind::kIdx;
    } else {
      problems.push_back("dataset.kind: expected blobs|two_moons|idx, got " + kind);
    }
    cfg.dataset.n = d.at("n").get<std::size_t>();
    cfg.dataset.dim = d.at("dim").get<std::size_t>();
    cfg.dataset.classes = d.at("classes").get<std::size_t>();
    cfg.dataset.separation = d.at("separation").get<double>();
    cfg.dataset.noise_std = d.at("noise_std").get<double>();
    cfg.dataset.test_n = d.at("test_n").get<std::size_t>();
    cfg.dataset.images = d.at("images").get<std::string>();
    cfg.dataset.labels = d.at("labels").get<std::string>();
    cfg.dataset.subset = d.at("subset").get<std::size_t>();
    cfg.dataset.test_images = d.at("test_images").get<std::string>();
    cfg.dataset.test_labels = d.at("test_labels").get<std::string>();
    cfg.dataset.test_subset = d.at("test_subset").get<std::size_t>();
  });
  switch (cfg.dataset.kind) {
    case DatasetKind::kBlobs:
      if (cfg.dataset.classes < 2) problems.push_back("dataset.classes must be >= 2");
      if (cfg.dataset.n < cfg.dataset.classes) {
        problems.push_back("dataset.n must be at least the class count");
      }
      if (cfg.dataset.dim < 1) problems.push_back("dataset.dim must be positive");
      if (cfg.dataset.separation < 0.0) {
        problems.push_back("dataset.separation must be nonnegative");
      }
      if (cfg.dataset.test_n == 0) problems.push_back("dataset.test_n must be positive");
      break;
    case DatasetKind::kTwoMoons:
      if (cfg.dataset.n == 0 || cfg.dataset.n % 2 != 0) {
        problems.push_back("dataset.n must be even and positive for two_moons");
      }
      if (cfg.dataset.noise_std < 0.0) {
        problems.push_back("dataset.noise_std must be nonnegative");
      }
      if (cfg.dataset.test_n == 0 || cfg.dataset.test_n % 2 != 0) {
        problems.push_back("dataset.test_n must be even and positive for two_moons");
      }
      break;
    case DatasetKind::kIdx:
      for (const auto& [field, path] :
           {std::pair{"dataset.images", cfg.dataset.images},
            std::pair{"dataset.labels", cfg.dataset.labels},
            std::pair{"dataset.test_images", cfg.dataset.test_images},
            std::pair{"dataset.test_labels", cfg.dataset.test_labels}}) {
        if (path.empty()) {
          problems.push_back(std::string(field) + " is required for idx datasets");
        } else if (!std::filesystem::exists(path)) {
          problems.push_back(std::string(field) + ": file not found: " + path.string());
        }
      }
      break;
  }

  // noise
  read([&] {
    const auto& n = doc.at("noise");
    cfg.noise.kind = noise_kind_from_string(n.at("kind").get<std::string>());
    cfg.noise.rate = n.at("rate").get<double>();
  });
  if (cfg.dataset.kind != DatasetKind::kIdx) {
    try {
      validate_noise_spec(cfg.noise, cfg.dataset.classes);
    } catch (const std::exception& e) {
      problems.push_back(std::string("noise: ") + e.what());
    }
  }

  // model
  read([&] {
    const auto& m = doc.at("model");
    cfg.model.hidden_dims = m.at("hidden_dims").get<std::vector<std::size_t>>();
    cfg.model.part_boundaries =
        m.at("part_boundaries").get<std::vector<std::size_t>>();
  });
  const std::size_t layer_count = cfg.model.hidden_dims.size() + 1;
  for (std::size_t h : cfg.model.hidden_dims) {
    if (h == 0) problems.push_back("model.hidden_dims entries must be positive");
  }
  if (cfg.model.part_boundaries.empty() ||
      cfg.model.part_boundaries.back() != layer_count) {
    problems.push_back("model.part_boundaries must end at the layer count (" +
                       std::to_string(layer_count) + ")");
  } else {
    std::size_t prev = 0;
    for (std::size_t b : cfg.model.part_boundaries) {
      if (b <= prev) {
        problems.push_back("model.part_boundaries must be strictly increasing");
        break;
      }
      prev = b;
    }
  }

  // schedule
  read([&] {
    const auto& s = doc.at("schedule");
    cfg.schedule.stage_epochs = s.at("stage_epochs").get<std::vector<std::size_t>>();
    cfg.schedule.batch_size = s.at("batch_size").get<std::size_t>();
    cfg.schedule.stage_optimizers.clear();
    std::size_t i = 0;
    for (const auto& o : s.at("stage_optimizers")) {
      cfg.schedule.stage_optimizers.push_back(optimizer_from_json(
          o, "schedule.stage_optimizers[" + std::to_string(i) + "]", problems));
      ++i;
    }
  });
  if (cfg.schedule.batch_size == 0) {
    problems.push_back("schedule.batch_size must be positive");
  }
  // In baseline_es mode the partition collapses to one part and only the
  // stage-1 budget applies, so the stage count rules bind to PES modes.
  if (cfg.mode != RunMode::kBaselineEs) {
    if (cfg.schedule.stage_epochs.size() != cfg.model.part_boundaries.size()) {
      problems.push_back("schedule.stage_epochs: need exactly one entry per part (" +
                         std::to_string(cfg.model.part_boundaries.size()) + ")");
    }
    if (cfg.schedule.stage_optimizers.size() != cfg.model.part_boundaries.size()) {
      problems.push_back("schedule.stage_optimizers: need exactly one per stage");
    }
  }
  if (cfg.schedule.stage_epochs.empty()) {
    problems.push_back("schedule.stage_epochs must not be empty");
  }
  if (cfg.schedule.stage_optimizers.empty()) {
    problems.push_back("schedule.stage_optimizers must not be empty");
  }
  for (std::size_t l = 0; l + 1 < cfg.schedule.stage_epochs.size(); ++l) {
    if (cfg.schedule.stage_epochs[l] < cfg.schedule.stage_epochs[l + 1]) {
      problems.push_back("schedule.stage_epochs must be nonincreasing (T" +
                         std::to_string(l + 1) + " >= T" + std::to_string(l + 2) + ")");
      break;
    }
  }

  // confident
  read([&] {
    const auto& c = doc.at("confident");
    cfg.confident.augment_sigma = c.at("augment_sigma").get<double>();
    cfg.confident.crop_pad = c.at("crop_pad").get<std::size_t>();
    const std::string mode = c.at("weight_mode").get<std::string>();
    if (mode == "proportional") {
      cfg.confident.weight_mode = WeightMode::kProportional;
    } else if (mode == "inverse") {
      cfg.confident.weight_mode = WeightMode::kInverse;
    } else {
      problems.push_back("confident.weight_mode: expected proportional|inverse");
    }
    cfg.confident.refine_epochs = c.at("refine_epochs").get<std::size_t>();
    cfg.confident.optimizer =
        optimizer_from_json(c.at("optimizer"), "confident.optimizer", problems);
  });
  if (cfg.confident.augment_sigma < 0.0) {
    problems.push_back("confident.augment_sigma must be nonnegative");
  }

  // semi
  read([&] {
    const auto& s = doc.at("semi");
    cfg.semi.lambda_u = s.at("lambda_u").get<double>();
    cfg.semi.temperature = s.at("temperature").get<double>();
    cfg.semi.k_aug = s.at("k_aug").get<std::size_t>();
    cfg.semi.mix_alpha = s.at("mix_alpha").get<double>();
    cfg.semi.mix_alpha_late = s.at("mix_alpha_late").get<double>();
    if (!s.at("alpha_switch_epoch").is_null()) {
      cfg.semi.alpha_switch_epoch = s.at("alpha_switch_epoch").get<std::size_t>();
    }
    cfg.semi.ramp_epochs = s.at("ramp_epochs").get<std::size_t>();
    cfg.semi.total_epochs = s.at("total_epochs").get<std::size_t>();
    cfg.semi.batch_size = s.at("batch_size").get<std::size_t>();
    cfg.semi.optimizer = optimizer_from_json(s.at("optimizer"), "semi.optimizer", problems);
  });
  try {
    cfg.semi.validate();
  } catch (const std::exception& e) {
    problems.push_back(e.what());
  }

  // profile
  read([&] {
    const auto& p = doc.at("profile");
    cfg.profile.probe_layers = p.at("probe_layers").get<std::vector<std::size_t>>();
    cfg.profile.epoch_grid = p.at("epoch_grid").get<std::vector<std::size_t>>();
    cfg.profile.clean_retrain_epochs = p.at("clean_retrain_epochs").get<std::size_t>();
    cfg.profile.noisy_optimizer =
        optimizer_from_json(p.at("noisy_optimizer"), "profile.noisy_optimizer", problems);
    cfg.profile.retrain_optimizer = optimizer_from_json(
        p.at("retrain_optimizer"), "profile.retrain_optimizer", problems);
  });
  for (std::size_t l : cfg.profile.probe_layers) {
    if (l >= layer_count) {
      problems.push_back("profile.probe_layers: layer " + std::to_string(l) +
                         " out of range for " + std::to_string(layer_count) + " layers");
    }
  }
  for (std::size_t i = 0; i + 1 < cfg.profile.epoch_grid.size(); ++i) {
    if (cfg.profile.epoch_grid[i] >= cfg.profile.epoch_grid[i + 1]) {
      problems.push_back("profile.epoch_grid must be strictly increasing");
      break;
    }
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

ExperimentConfig config_from_json(const nlohmann::json& overrides) {
  nlohmann::json merged = default_config_json();
  merged.update(overrides, /*merge_objects=*/true);
  return parse_config(merged);
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path.string()});
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({"config file " + path.string() + ": " + e.what()});
  }
  return config_from_json(doc);
}

}  // namespace pes::harness
