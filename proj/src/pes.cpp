#include "peslab/pes.hpp"

#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "peslab/training.hpp"

namespace pes {

namespace {

// Stream tag separating reinit draws from shuffle draws.
constexpr std::uint64_t kReinitStream = 0x7265696E69ULL;

SeededRng epoch_shuffle_rng(std::uint64_t shuffle_seed, std::size_t stage,
                            std::size_t epoch) {
  return SeededRng(mix_seeds(mix_seeds(shuffle_seed, stage), epoch));
}

std::vector<std::size_t> all_indices(const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

void validate_schedule(const PESSchedule& schedule, const PartitionedNetwork& net) {
  const std::size_t parts = net.part_count();
  if (schedule.stage_epochs.size() != parts) {
    throw std::invalid_argument("schedule has " +
                                std::to_string(schedule.stage_epochs.size()) +
                                " stages but the network has " +
                                std::to_string(parts) + " parts");
  }
  if (schedule.stage_optimizers.size() != parts) {
    throw std::invalid_argument("schedule needs one optimizer per stage");
  }
  for (std::size_t l = 0; l + 1 < schedule.stage_epochs.size(); ++l) {
    if (schedule.stage_epochs[l] < schedule.stage_epochs[l + 1]) {
      throw std::invalid_argument(
          "stage epoch budgets must be nonincreasing (T" + std::to_string(l + 1) +
          " < T" + std::to_string(l + 2) + ")");
    }
  }
  if (schedule.batch_size == 0) {
    throw std::invalid_argument("schedule batch size must be positive");
  }
}

StageReport train_plain(PartitionedNetwork& net, const Dataset& noisy_train,
                        std::size_t epochs, const OptimizerState& opt_template,
                        std::size_t batch_size, std::uint64_t shuffle_seed,
                        const Dataset* noisy_val, std::size_t stage_tag) {
  if (noisy_train.size() == 0) {
    throw std::invalid_argument("training dataset is empty");
  }
  StageReport report;
  report.stage_index = stage_tag;
  report.checksums_before = all_part_checksums(net);
  report.checksums_after_reinit = report.checksums_before;

  OptimizerState opt = opt_template;
  EpochTrainer trainer(net, noisy_train, all_indices(noisy_train), batch_size);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    set_epoch(opt, epoch);
    SeededRng rng = epoch_shuffle_rng(shuffle_seed, stage_tag, epoch);
    report.train_loss.push_back(trainer.run_epoch(opt, rng));
    if (noisy_val) {
      report.noisy_val_accuracy.push_back(
          evaluate_accuracy(net, noisy_val->features, noisy_val->noisy_labels));
    }
  }
  report.epochs_run = epochs;
  report.checksums_after = all_part_checksums(net);
  return report;
}

StageReport train_stage1(PartitionedNetwork& net, const Dataset& noisy_train,
                         const PESSchedule& schedule, const Dataset* noisy_val) {
  validate_schedule(schedule, net);
  if (net.frozen_prefix_len() != 0) {
    throw std::invalid_argument("stage 1 requires all parts unfrozen");
  }
  return train_plain(net, noisy_train, schedule.stage_epochs[0],
                     schedule.stage_optimizers[0], schedule.batch_size,
                     schedule.shuffle_seed, noisy_val, /*stage_tag=*/0);
}

StageReport train_stage_l(PartitionedNetwork& net, const Dataset& noisy_train,
                          const PESSchedule& schedule, std::size_t stage_index,
                          const Dataset* noisy_val) {
  validate_schedule(schedule, net);
  if (stage_index == 0 || stage_index >= net.part_count()) {
    throw std::invalid_argument("train_stage_l: stage_index must be in [1, L)");
  }
  if (noisy_train.size() == 0) {
    throw std::invalid_argument("training dataset is empty");
  }
  if (net.frozen_prefix_len() != stage_index - 1) {
    throw std::invalid_argument("train_stage_l called out of order: stage " +
                                std::to_string(stage_index) + " expects " +
                                std::to_string(stage_index - 1) +
                                " frozen parts, found " +
                                std::to_string(net.frozen_prefix_len()));
  }

  StageReport report;
  report.stage_index = stage_index;
  report.checksums_before = all_part_checksums(net);

  const std::size_t epochs = schedule.stage_epochs[stage_index];
  set_frozen(net, stage_index);
  if (epochs == 0) {
    // Zero budget: parameters must stay bitwise unchanged.
    report.checksums_after_reinit = report.checksums_before;
    report.checksums_after = report.checksums_before;
    return report;
  }

  SeededRng reinit_rng(
      mix_seeds(mix_seeds(schedule.shuffle_seed, kReinitStream), stage_index));
  reinit_parts(net, stage_index, reinit_rng);
  report.checksums_after_reinit = all_part_checksums(net);

  OptimizerState opt = schedule.stage_optimizers[stage_index];
  EpochTrainer trainer(net, noisy_train, all_indices(noisy_train),
                       schedule.batch_size);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    set_epoch(opt, epoch);
    SeededRng rng = epoch_shuffle_rng(schedule.shuffle_seed, stage_index, epoch);
    report.train_loss.push_back(trainer.run_epoch(opt, rng));
    if (noisy_val) {
      report.noisy_val_accuracy.push_back(
          evaluate_accuracy(net, noisy_val->features, noisy_val->noisy_labels));
    }
  }
  report.epochs_run = epochs;
  report.checksums_after = all_part_checksums(net);
  return report;
}

std::vector<StageReport> train_pes(PartitionedNetwork& net,
                                   const Dataset& noisy_train,
                                   const PESSchedule& schedule,
                                   const Dataset* noisy_val) {
  validate_schedule(schedule, net);
  std::vector<StageReport> reports;
  reports.push_back(train_stage1(net, noisy_train, schedule, noisy_val));
  for (std::size_t stage = 1; stage < net.part_count(); ++stage) {
    reports.push_back(train_stage_l(net, noisy_train, schedule, stage, noisy_val));
  }
  set_frozen(net, 0);
  return reports;
}

std::string stage_report_to_json(const StageReport& report) {
  nlohmann::json doc;
  doc["stage"] = report.stage_index + 1;
  doc["epochs_run"] = report.epochs_run;
  doc["train_loss"] = report.train_loss;
  doc["noisy_val_accuracy"] = report.noisy_val_accuracy;
  auto hex = [](const std::vector<std::uint64_t>& sums) {
    std::vector<std::string> out;
    out.reserve(sums.size());
    for (std::uint64_t s : sums) {
      char buf[19];
      std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(s));
      out.emplace_back(buf);
    }
    return out;
  };
  doc["part_checksums_before"] = hex(report.checksums_before);
  doc["part_checksums_after_reinit"] = hex(report.checksums_after_reinit);
  doc["part_checksums_after"] = hex(report.checksums_after);
  return doc.dump();
}

}  // namespace pes
