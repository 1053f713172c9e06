// Copyright 2026 The MCDRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcdrl/benchdata.hpp"
#include "mcdrl/errors.hpp"
#include "mcdrl/metrics.hpp"
#include "mcdrl/model.hpp"
#include "mcdrl/optimizer.hpp"
#include "mcdrl/rng.hpp"

namespace mcdrl {

enum class AblationMode { kFull, kNoMtrs, kNoCdrl, kBaseline };

std::string_view mode_name(AblationMode mode);
// Accepts full, no_mtrs, no_cdrl, baseline.
AblationMode parse_mode(std::string_view name);
inline constexpr AblationMode kAllModes[] = {AblationMode::kFull, AblationMode::kNoMtrs,
                                             AblationMode::kNoCdrl, AblationMode::kBaseline};

struct TrainConfig {
  std::size_t epochs = 10;
  double activation_fraction = 0.2;
  double learning_rate = 0.005;
  double weight_decay = 0.01;
  std::size_t batch_size = 16;
  double alpha = 0.3;
  LossConfig loss;
  AblationMode ablation = AblationMode::kFull;
  std::uint64_t seed = 1;
  std::size_t patch_size = 4;
  std::size_t embed_dim = 16;
  std::uint64_t text_seed = 2024;
  bool dictionary_trainable = false;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(std::string_view text);
  // FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;
};

// First epoch (0-indexed) with the intervention switched on:
// ceil(activation_fraction * epochs).
std::size_t activation_epoch(const TrainConfig& config);
// Mode- and epoch-dependent pipeline settings. The intervention is active
// for full and no_mtrs from activation_epoch() on; the causal weight is zero
// whenever it is not.
StageSettings stage_settings(const TrainConfig& config, std::size_t epoch);

struct EpochLog {
  std::size_t epoch = 0;
  bool intervention_active = false;
  double alpha = 1.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double loss = 0.0;
  double seg = 0.0;
  double causal = 0.0;
  double contrast = 0.0;
  std::size_t steps = 0;
};

std::string epoch_log_json(const EpochLog& log);
EpochLog parse_epoch_log(std::string_view text);

struct Checkpoint {
  TrainConfig config;
  std::size_t num_classes = kDefaultNumClasses;
  std::size_t epochs_done = 0;
  std::string rng_state;
  std::vector<EpochLog> history;
  std::vector<NamedTensor> tensors;  // model parameters, then optimizer state
};

inline constexpr std::uint8_t kCheckpointVersion = 1;

// "MCKP" | version u8 | 3 pad | config hash u64 | meta length u32 | meta JSON |
// tensor count u32 | per tensor: name length u32, name, MCDT float64 blob.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws IoError("checkpoint not found: ...") for a missing file and
// FormatError for anything malformed.
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);

struct EvaluationReport {
  MetricsReport overall;
  std::vector<std::pair<std::size_t, MetricsReport>> per_domain;
  std::size_t samples = 0;
};

// Raised when a step produces a non-finite loss; the message lists the batch.
class TrainingDivergedError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Owns a model and its optimizer and runs the progressive schedule.
class Trainer {
 public:
  Trainer(const TrainConfig& config, std::size_t num_classes);
  explicit Trainer(const Checkpoint& checkpoint);

  // Runs up to `count` further epochs, never past config.epochs.
  void run_epochs(const Dataset& dataset, std::span<const std::size_t> train, std::size_t count);
  void run(const Dataset& dataset, std::span<const std::size_t> train) {
    run_epochs(dataset, train, config_.epochs);
  }

  // One optimizer step on the given samples; returns the mean total loss.
  double step(const Dataset& dataset, std::span<const std::size_t> batch, const StageSettings& stage);
  // Mean total loss over the samples without touching parameters.
  double loss(const Dataset& dataset, std::span<const std::size_t> batch, const StageSettings& stage) const;

  // Pipeline settings used for inference: those of the last trained epoch.
  StageSettings inference_settings() const;
  EvaluationReport evaluate(const Dataset& dataset, std::span<const std::size_t> indices) const;

  Checkpoint checkpoint() const;

  const TrainConfig& config() const { return config_; }
  const Model& model() const { return model_; }
  std::size_t epochs_done() const { return epochs_done_; }
  const std::vector<EpochLog>& history() const { return history_; }
  void set_dump_dir(std::filesystem::path dir) { dump_dir_ = std::move(dir); }

 private:
  void dump_batch(const Dataset& dataset, std::span<const std::size_t> batch) const;

  TrainConfig config_;
  std::size_t num_classes_;
  Model model_;
  AdamW optimizer_;
  Rng rng_;
  std::size_t epochs_done_ = 0;
  std::vector<EpochLog> history_;
  std::optional<std::filesystem::path> dump_dir_;
};

// One JSON line per present class plus a "mean" line for every domain in the
// report: {site, class, dice, iou, acc, seed, epoch}.
std::string metrics_jsonl(const EvaluationReport& report, const Dataset& dataset,
                          std::span<const std::string> class_names, std::uint64_t seed,
                          std::size_t epoch);

struct AblationCell {
  AblationMode mode = AblationMode::kFull;
  std::size_t site = 0;  // held-out domain index
  std::uint64_t seed = 0;
  double mean_dice = 0.0;
};

struct AblationResult {
  std::vector<char> sites;
  std::vector<std::uint64_t> seeds;
  std::vector<AblationCell> cells;

  // Seed-averaged mDice for one (mode, held-out site).
  double mean_dice(AblationMode mode, std::size_t site) const;
  // Average of mean_dice over all sites.
  double average(AblationMode mode) const;
  // Mode x site table in percent, with a closing Avg. column.
  std::string table() const;
  std::string to_json() const;
};

using AblationProgress = std::function<void(const AblationCell&)>;

// Trains every mode on every leave-one-domain-out split for every seed and
// scores the held-out site. Cells run on up to `jobs` threads; results do
// not depend on the thread count.
AblationResult ablate(const TrainConfig& base, const Dataset& dataset, std::span<const std::uint64_t> seeds,
                      std::size_t jobs = 1, const AblationProgress& progress = {});

}  // namespace mcdrl
