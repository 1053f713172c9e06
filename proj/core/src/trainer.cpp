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
#include "mcdrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mcdrl/errors.hpp"
#include "mcdrl/ops.hpp"
#include "mcdrl/tensor_io.hpp"

namespace mcdrl {

using json = nlohmann::json;

std::string_view mode_name(AblationMode mode) {
  switch (mode) {
    case AblationMode::kFull: return "full";
    case AblationMode::kNoMtrs: return "no_mtrs";
    case AblationMode::kNoCdrl: return "no_cdrl";
    case AblationMode::kBaseline: return "baseline";
  }
  return "full";
}

AblationMode parse_mode(std::string_view name) {
  for (AblationMode m : kAllModes)
    if (mode_name(m) == name) return m;
  throw ParameterError("unknown ablation mode '" + std::string(name) +
                       "' (expected full, no_mtrs, no_cdrl or baseline)");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ParameterError("epochs must be positive");
  if (!(activation_fraction >= 0.0 && activation_fraction < 1.0))
    throw ParameterError("activation fraction must lie in [0, 1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ParameterError("learning rate must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ParameterError("weight decay must be nonnegative");
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
  if (patch_size == 0 || embed_dim == 0) throw ParameterError("patch size and embedding dim must be positive");
  loss.validate();
}

namespace {

json config_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"activation_fraction", c.activation_fraction},
              {"lr", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"batch", c.batch_size},
              {"alpha", c.alpha},
              {"lambda1", c.loss.lambda1},
              {"lambda2", c.loss.lambda2},
              {"tau", c.loss.tau},
              {"ablation", std::string(mode_name(c.ablation))},
              {"seed", c.seed},
              {"patch", c.patch_size},
              {"dim", c.embed_dim},
              {"text_seed", c.text_seed},
              {"dictionary_trainable", c.dictionary_trainable}};
}

TrainConfig config_from(const json& j) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  TrainConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "epochs") c.epochs = v.get<std::size_t>();
      else if (k == "activation_fraction") c.activation_fraction = v.get<double>();
      else if (k == "lr") c.learning_rate = v.get<double>();
      else if (k == "weight_decay") c.weight_decay = v.get<double>();
      else if (k == "batch") c.batch_size = v.get<std::size_t>();
      else if (k == "alpha") c.alpha = v.get<double>();
      else if (k == "lambda1") c.loss.lambda1 = v.get<double>();
      else if (k == "lambda2") c.loss.lambda2 = v.get<double>();
      else if (k == "tau") c.loss.tau = v.get<double>();
      else if (k == "ablation") c.ablation = parse_mode(v.get<std::string>());
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "patch") c.patch_size = v.get<std::size_t>();
      else if (k == "dim") c.embed_dim = v.get<std::size_t>();
      else if (k == "text_seed") c.text_seed = v.get<std::uint64_t>();
      else if (k == "dictionary_trainable") c.dictionary_trainable = v.get<bool>();
      else throw FormatError("unknown config key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

json log_json(const EpochLog& l) {
  return json{{"epoch", l.epoch},   {"intervention_active", l.intervention_active},
              {"alpha", l.alpha},   {"lambda1", l.lambda1},
              {"lambda2", l.lambda2}, {"loss", l.loss},
              {"seg", l.seg},       {"causal", l.causal},
              {"contrast", l.contrast}, {"steps", l.steps}};
}

EpochLog log_from(const json& j) {
  EpochLog l;
  try {
    l.epoch = j.at("epoch").get<std::size_t>();
    l.intervention_active = j.at("intervention_active").get<bool>();
    l.alpha = j.at("alpha").get<double>();
    l.lambda1 = j.at("lambda1").get<double>();
    l.lambda2 = j.at("lambda2").get<double>();
    l.loss = j.at("loss").get<double>();
    l.seg = j.at("seg").get<double>();
    l.causal = j.at("causal").get<double>();
    l.contrast = j.at("contrast").get<double>();
    l.steps = j.at("steps").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad epoch log: ") + e.what());
  }
  return l;
}

ModelOptions model_options(const TrainConfig& c, std::size_t num_classes) {
  ModelOptions o;
  o.patch_size = c.patch_size;
  o.embed_dim = c.embed_dim;
  o.num_classes = num_classes;
  o.seed = c.seed;
  o.text_seed = c.text_seed;
  o.dictionary_trainable = c.dictionary_trainable;
  if (num_classes != o.class_names.size()) {
    o.class_names.clear();
    for (std::size_t k = 0; k < num_classes; ++k) o.class_names.push_back("class " + std::to_string(k + 1));
  }
  return o;
}

AdamWOptions adam_options(const TrainConfig& c) {
  AdamWOptions o;
  o.learning_rate = c.learning_rate;
  o.weight_decay = c.weight_decay;
  return o;
}

void check_compatible(const Dataset& dataset, std::size_t num_classes) {
  if (dataset.num_classes != num_classes) {
    throw DimensionError("dataset has " + std::to_string(dataset.num_classes) + " classes, model expects " +
                         std::to_string(num_classes));
  }
}

}  // namespace

std::string TrainConfig::to_json() const { return config_json(*this).dump(); }

TrainConfig TrainConfig::from_json(std::string_view text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FormatError("config is not valid JSON");
  return config_from(j);
}

std::uint64_t TrainConfig::hash() const { return fnv1a(to_json()); }

std::size_t activation_epoch(const TrainConfig& config) {
  // The small offset keeps products such as 0.2 * 10 from rounding up a step.
  const double raw = config.activation_fraction * static_cast<double>(config.epochs);
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

StageSettings stage_settings(const TrainConfig& config, std::size_t epoch) {
  const bool scheduled = epoch >= activation_epoch(config);
  StageSettings s;
  s.loss = config.loss;
  switch (config.ablation) {
    case AblationMode::kFull:
      s.alpha = config.alpha;
      s.intervene = scheduled;
      break;
    case AblationMode::kNoMtrs:
      s.alpha = 1.0;
      s.intervene = scheduled;
      break;
    case AblationMode::kNoCdrl:
      s.alpha = config.alpha;
      s.intervene = false;
      break;
    case AblationMode::kBaseline:
      s.alpha = 1.0;
      s.intervene = false;
      s.loss.lambda2 = 0.0;
      break;
  }
  if (!s.intervene) s.loss.lambda1 = 0.0;
  return s;
}

std::string epoch_log_json(const EpochLog& log) { return log_json(log).dump(); }

EpochLog parse_epoch_log(std::string_view text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FormatError("epoch log is not valid JSON");
  return log_from(j);
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const TrainConfig& config, std::size_t num_classes)
    : config_((config.validate(), config)),
      num_classes_(num_classes),
      model_(model_options(config, num_classes)),
      optimizer_(model_.trainable_parameters(), adam_options(config)),
      rng_(mix_seed(config.seed, fnv1a("shuffle"))) {}

Trainer::Trainer(const Checkpoint& checkpoint) : Trainer(checkpoint.config, checkpoint.num_classes) {
  const auto find = [&](const std::string& name) -> const Tensor* {
    for (const auto& t : checkpoint.tensors)
      if (t.name == name) return &t.tensor;
    return nullptr;
  };
  for (auto& p : model_.parameters()) {
    const Tensor* src = find(p.name);
    if (!src) throw FormatError("checkpoint is missing parameter " + p.name);
    if (src->shape() != p.tensor.shape()) {
      throw FormatError("checkpoint parameter " + p.name + " has shape " + shape_string(src->shape()) +
                        ", expected " + shape_string(p.tensor.shape()));
    }
    std::copy(src->data().begin(), src->data().end(), p.tensor.mutable_data().begin());
  }
  optimizer_.load_state(checkpoint.tensors);
  rng_.restore(checkpoint.rng_state);
  epochs_done_ = checkpoint.epochs_done;
  history_ = checkpoint.history;
  if (epochs_done_ > config_.epochs) throw FormatError("checkpoint is past its configured epoch count");
}

double Trainer::step(const Dataset& dataset, std::span<const std::size_t> batch, const StageSettings& stage) {
  if (batch.empty()) throw ParameterError("empty batch");
  check_compatible(dataset, num_classes_);
  Tape tape;
  Tensor sum;
  double value = 0.0;
  try {
    for (std::size_t idx : batch) {
      Model::Output out = model_.forward(tape, dataset.samples.at(idx), stage);
      sum = sum.defined() ? ops::add(tape, sum, out.total) : out.total;
    }
    Tensor mean = ops::scale(tape, sum, 1.0 / static_cast<double>(batch.size()));
    value = mean.item();
    if (!std::isfinite(value)) throw NumericError("non-finite batch loss");
    optimizer_.zero_grad();
    tape.backward(mean);
    for (const auto& p : optimizer_.params()) {
      for (double g : p.tensor.grad())
        if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + p.name);
    }
  } catch (const NumericError& e) {
    dump_batch(dataset, batch);
    std::ostringstream os;
    os << "training diverged at epoch " << epochs_done_ << " on batch [";
    for (std::size_t i = 0; i < batch.size(); ++i) os << (i ? "," : "") << batch[i];
    os << "]: " << e.what();
    if (dump_dir_) os << " (batch written to " << dump_dir_->string() << ")";
    throw TrainingDivergedError(os.str());
  }
  optimizer_.step();
  optimizer_.zero_grad();
  return value;
}

double Trainer::loss(const Dataset& dataset, std::span<const std::size_t> batch, const StageSettings& stage) const {
  if (batch.empty()) throw ParameterError("empty batch");
  check_compatible(dataset, num_classes_);
  double total = 0.0;
  for (std::size_t idx : batch) {
    Tape probe(Tape::Mode::kInference);
    total += model_.forward(probe, dataset.samples.at(idx), stage).total.item();
  }
  return total / static_cast<double>(batch.size());
}

void Trainer::run_epochs(const Dataset& dataset, std::span<const std::size_t> train, std::size_t count) {
  if (train.empty()) throw ParameterError("training split is empty");
  check_compatible(dataset, num_classes_);
  std::vector<std::size_t> order(train.begin(), train.end());
  const std::size_t stop = std::min(config_.epochs, epochs_done_ + count);
  while (epochs_done_ < stop) {
    const std::size_t epoch = epochs_done_;
    const StageSettings stage = stage_settings(config_, epoch);
    std::sort(order.begin(), order.end());
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng_.below(i)]);

    EpochLog log;
    log.epoch = epoch;
    log.intervention_active = stage.intervene;
    log.alpha = stage.alpha;
    log.lambda1 = stage.loss.lambda1;
    log.lambda2 = stage.loss.lambda2;
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
      const std::size_t end = std::min(order.size(), start + config_.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      weighted += step(dataset, batch, stage) * static_cast<double>(batch.size());
      ++log.steps;
    }
    log.loss = weighted / static_cast<double>(order.size());

    // Component means at the end of the epoch, on a fixed slice of the split.
    const std::size_t probe_n = std::min<std::size_t>(order.size(), 32);
    std::vector<std::size_t> probe(train.begin(), train.begin() + static_cast<std::ptrdiff_t>(probe_n));
    for (std::size_t idx : probe) {
      Tape t(Tape::Mode::kInference);
      Model::Output out = model_.forward(t, dataset.samples[idx], stage);
      log.seg += out.parts.seg.item();
      if (out.parts.causal.defined()) log.causal += out.parts.causal.item();
      if (out.parts.contrast.defined()) log.contrast += out.parts.contrast.item();
    }
    log.seg /= static_cast<double>(probe_n);
    log.causal /= static_cast<double>(probe_n);
    log.contrast /= static_cast<double>(probe_n);

    history_.push_back(log);
    ++epochs_done_;
  }
}

StageSettings Trainer::inference_settings() const {
  return stage_settings(config_, epochs_done_ == 0 ? 0 : epochs_done_ - 1);
}

EvaluationReport Trainer::evaluate(const Dataset& dataset, std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ParameterError("evaluation split is empty");
  check_compatible(dataset, num_classes_);
  const StageSettings stage = inference_settings();
  SegmentationCounts all(num_classes_);
  std::vector<SegmentationCounts> per(dataset.domains.size(), SegmentationCounts(num_classes_));
  std::vector<bool> seen(dataset.domains.size(), false);
  for (std::size_t idx : indices) {
    const SegmentationSample& s = dataset.samples.at(idx);
    const LabelMap pred = predict_labels(model_.predict(s.image, stage), config_.patch_size);
    all.add(pred, s.labels);
    per.at(s.domain).add(pred, s.labels);
    seen[s.domain] = true;
  }
  EvaluationReport report;
  report.overall = summarize(all);
  report.samples = indices.size();
  for (std::size_t d = 0; d < per.size(); ++d)
    if (seen[d]) report.per_domain.emplace_back(d, summarize(per[d]));
  return report;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config = config_;
  c.num_classes = num_classes_;
  c.epochs_done = epochs_done_;
  c.rng_state = rng_.state();
  c.history = history_;
  for (const auto& p : model_.parameters()) c.tensors.push_back({p.name, p.tensor.detach()});
  for (auto& s : optimizer_.state()) c.tensors.push_back(std::move(s));
  return c;
}

void Trainer::dump_batch(const Dataset& dataset, std::span<const std::size_t> batch) const {
  if (!dump_dir_) return;
  std::error_code ec;
  std::filesystem::create_directories(*dump_dir_, ec);
  json j = json::array();
  for (std::size_t idx : batch) {
    if (idx >= dataset.samples.size()) continue;
    const auto& s = dataset.samples[idx];
    j.push_back({{"index", idx}, {"class", s.class_id}, {"domain", s.domain}, {"seed", s.seed}});
    std::vector<double> px = s.image.pixels;
    try {
      save_tensor(*dump_dir_ / ("sample_" + std::to_string(idx) + ".mcdt"),
                  Tensor::from({s.image.height, s.image.width, 3}, std::move(px)));
    } catch (const Error&) {
    }
  }
  std::ofstream out(*dump_dir_ / "batch.json");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Reporting

std::string metrics_jsonl(const EvaluationReport& report, const Dataset& dataset,
                          std::span<const std::string> class_names, std::uint64_t seed, std::size_t epoch) {
  std::string out;
  for (const auto& [d, m] : report.per_domain) {
    const std::string site(1, dataset.domains.at(d).site);
    for (std::size_t k = 0; k < m.classes.size(); ++k) {
      if (!m.classes[k].present) continue;
      const std::string name = k < class_names.size() ? class_names[k] : std::to_string(k + 1);
      out += json{{"site", site}, {"class", name}, {"dice", m.classes[k].dice}, {"iou", m.classes[k].iou},
                  {"acc", m.accuracy}, {"seed", seed}, {"epoch", epoch}}
                 .dump();
      out += '\n';
    }
    out += json{{"site", site}, {"class", "mean"}, {"dice", m.mean_dice}, {"iou", m.mean_iou},
                {"acc", m.accuracy}, {"seed", seed}, {"epoch", epoch}}
               .dump();
    out += '\n';
  }
  return out;
}

double AblationResult::mean_dice(AblationMode mode, std::size_t site) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : cells) {
    if (c.mode == mode && c.site == site) {
      sum += c.mean_dice;
      ++n;
    }
  }
  if (n == 0) throw StateError("no ablation cells for that mode and site");
  return sum / static_cast<double>(n);
}

double AblationResult::average(AblationMode mode) const {
  double sum = 0.0;
  for (std::size_t s = 0; s < sites.size(); ++s) sum += mean_dice(mode, s);
  return sum / static_cast<double>(sites.size());
}

std::string AblationResult::table() const {
  std::ostringstream os;
  os << std::left << std::setw(10) << "Method";
  for (char s : sites) os << std::right << std::setw(8) << std::string("Site ") + s;
  os << std::setw(8) << "Avg." << '\n';
  os << std::fixed << std::setprecision(2);
  for (AblationMode m : kAllModes) {
    os << std::left << std::setw(10) << mode_name(m) << std::right;
    for (std::size_t s = 0; s < sites.size(); ++s) os << std::setw(8) << 100.0 * mean_dice(m, s);
    os << std::setw(8) << 100.0 * average(m) << '\n';
  }
  return os.str();
}

std::string AblationResult::to_json() const {
  json j;
  j["sites"] = json::array();
  for (char s : sites) j["sites"].push_back(std::string(1, s));
  j["seeds"] = seeds;
  json modes = json::object();
  for (AblationMode m : kAllModes) {
    json row = json::object();
    for (std::size_t s = 0; s < sites.size(); ++s) row[std::string(1, sites[s])] = mean_dice(m, s);
    row["avg"] = average(m);
    modes[std::string(mode_name(m))] = row;
  }
  j["mdice"] = modes;
  json raw = json::array();
  for (const auto& c : cells) {
    raw.push_back({{"mode", std::string(mode_name(c.mode))},
                   {"site", std::string(1, sites.at(c.site))},
                   {"seed", c.seed},
                   {"mdice", c.mean_dice}});
  }
  j["cells"] = raw;
  return j.dump(2);
}

AblationResult ablate(const TrainConfig& base, const Dataset& dataset, std::span<const std::uint64_t> seeds,
                      std::size_t jobs, const AblationProgress& progress) {
  base.validate();
  if (seeds.empty()) throw ParameterError("ablation needs at least one seed");
  if (dataset.domains.size() < 2) throw ParameterError("ablation needs at least two domains");
  AblationResult result;
  for (const auto& d : dataset.domains) result.sites.push_back(d.site);
  result.seeds.assign(seeds.begin(), seeds.end());
  for (AblationMode m : kAllModes)
    for (std::size_t s = 0; s < dataset.domains.size(); ++s)
      for (std::uint64_t seed : seeds) result.cells.push_back({m, s, seed, 0.0});

  std::vector<SplitIndices> splits;
  for (std::size_t s = 0; s < dataset.domains.size(); ++s) splits.push_back(hold_out(dataset, s));

  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  const auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= result.cells.size() || failure) return;
        i = next++;
      }
      AblationCell& cell = result.cells[i];
      try {
        TrainConfig cfg = base;
        cfg.ablation = cell.mode;
        cfg.seed = cell.seed;
        Trainer trainer(cfg, dataset.num_classes);
        trainer.run(dataset, splits[cell.site].train);
        cell.mean_dice = trainer.evaluate(dataset, splits[cell.site].test).overall.mean_dice;
        std::lock_guard lock(mu);
        if (progress) progress(cell);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, result.cells.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

}  // namespace mcdrl
