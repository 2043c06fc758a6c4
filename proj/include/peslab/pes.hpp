#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peslab/dataset.hpp"
#include "peslab/network.hpp"
#include "peslab/optimizer.hpp"

namespace pes {

// Stage-wise training plan: stage_epochs[l] is the epoch budget for part
// l+1's stage; budgets must be nonincreasing and there must be exactly one
// stage per network part.
struct PESSchedule {
  std::vector<std::size_t> stage_epochs;
  std::vector<OptimizerState> stage_optimizers;  // templates, one per stage
  std::size_t batch_size = 128;
  std::uint64_t shuffle_seed = 0;
};

// Throws on nonmonotone budgets or stage/part count mismatch.
void validate_schedule(const PESSchedule& schedule, const PartitionedNetwork& net);

// Audit record of one stage: parameter checksums per part taken before the
// stage, after the suffix re-initialization, and after training.
struct StageReport {
  std::size_t stage_index = 0;  // 0-based
  std::size_t epochs_run = 0;
  std::vector<double> train_loss;           // one entry per epoch
  std::vector<double> noisy_val_accuracy;   // empty when no validation set
  std::vector<std::uint64_t> checksums_before;
  std::vector<std::uint64_t> checksums_after_reinit;
  std::vector<std::uint64_t> checksums_after;
};

// Plain mini-batch training: `epochs` full shuffled passes with the given
// optimizer template. PES stage 1 is exactly this loop; with L = 1 the whole
// method degenerates to it. `stage_tag` salts the per-epoch shuffle streams.
StageReport train_plain(PartitionedNetwork& net, const Dataset& noisy_train,
                        std::size_t epochs, const OptimizerState& opt_template,
                        std::size_t batch_size, std::uint64_t shuffle_seed,
                        const Dataset* noisy_val = nullptr,
                        std::size_t stage_tag = 0);

// Stage 1: optimizes all parts for stage_epochs[0] epochs. Requires no part
// frozen.
StageReport train_stage1(PartitionedNetwork& net, const Dataset& noisy_train,
                         const PESSchedule& schedule,
                         const Dataset* noisy_val = nullptr);

// Stage l (0-based stage_index >= 1): freezes parts [0, stage_index),
// re-initializes parts [stage_index, L) and trains them for
// stage_epochs[stage_index] epochs. A zero budget is a complete no-op for
// the parameters (no reinit, no training). Rejects out-of-order calls.
StageReport train_stage_l(PartitionedNetwork& net, const Dataset& noisy_train,
                          const PESSchedule& schedule, std::size_t stage_index,
                          const Dataset* noisy_val = nullptr);

// Full progressive early stopping: stage 1 then stages 2..L, all parts
// unfrozen afterwards.
std::vector<StageReport> train_pes(PartitionedNetwork& net,
                                   const Dataset& noisy_train,
                                   const PESSchedule& schedule,
                                   const Dataset* noisy_val = nullptr);

// Stable field names for the run-log document.
std::string stage_report_to_json(const StageReport& report);

}  // namespace pes
