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
#include "mcdrl_cli/app.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcdrl/benchdata.hpp"
#include "mcdrl/errors.hpp"
#include "mcdrl/gradsuite.hpp"
#include "mcdrl/trainer.hpp"

#ifndef MCDRL_GIT_DESCRIBE
#define MCDRL_GIT_DESCRIBE "unknown"
#endif

namespace mcdrl::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr std::uint64_t kDefaultDataSeed = 7;
constexpr std::size_t kDefaultPerDomain = 200;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  return fs::path(dir);
}

// Writes the manifest now and stamps its end time when finished.
class ManifestScope {
 public:
  ManifestScope(fs::path path, RunManifest manifest) : path_(std::move(path)), manifest_(std::move(manifest)) {
    write_manifest(path_, manifest_);
  }
  void finish(std::vector<std::string> outputs) {
    manifest_.outputs = std::move(outputs);
    manifest_.end = utc_timestamp();
    write_manifest(path_, manifest_);
  }

 private:
  fs::path path_;
  RunManifest manifest_;
};

RunManifest begin_manifest(const std::string& command, const std::vector<std::string>& argv,
                           std::string config_json, std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.args.assign(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  m.config_json = std::move(config_json);
  m.seed = seed;
  m.git_describe = git_describe();
  m.start = utc_timestamp();
  return m;
}

Dataset load_data(const std::string& dir) {
  if (dir.empty() || !fs::is_directory(dir)) throw IoError("dataset not found: " + dir);
  return read_dataset(dir);
}

std::vector<std::string> class_names_for(const Dataset& ds) {
  const auto& all = default_class_names();
  std::vector<std::string> names;
  for (std::size_t k = 0; k < ds.num_classes && k < all.size(); ++k) names.push_back(all[k]);
  return names;
}

// Training flags shared by train and ablate. Values land in `cfg`; a
// --config file supplies every flag not given explicitly.
struct ConfigFlags {
  TrainConfig cfg;
  std::string ablation = "full";
  std::string config_file;
  std::vector<std::pair<CLI::Option*, std::function<void(const TrainConfig&)>>> bound;

  void add(CLI::App& app, bool with_ablation) {
    const auto bind = [&](CLI::Option* opt, std::function<void(const TrainConfig&)> take) {
      opt->capture_default_str();
      bound.emplace_back(opt, std::move(take));
    };
    bind(app.add_option("--alpha", cfg.alpha, "Fraction of grid cells kept by region selection")
             ->check(CLI::Range(0.0, 1.0)),
         [this](const TrainConfig& c) { cfg.alpha = c.alpha; });
    bind(app.add_option("--lambda1", cfg.loss.lambda1, "Causal loss weight")->check(CLI::NonNegativeNumber),
         [this](const TrainConfig& c) { cfg.loss.lambda1 = c.loss.lambda1; });
    bind(app.add_option("--lambda2", cfg.loss.lambda2, "Contrastive loss weight")->check(CLI::NonNegativeNumber),
         [this](const TrainConfig& c) { cfg.loss.lambda2 = c.loss.lambda2; });
    bind(app.add_option("--tau", cfg.loss.tau, "Contrastive temperature")->check(CLI::PositiveNumber),
         [this](const TrainConfig& c) { cfg.loss.tau = c.loss.tau; });
    bind(app.add_option("--epochs", cfg.epochs, "Training epochs")->check(CLI::PositiveNumber),
         [this](const TrainConfig& c) { cfg.epochs = c.epochs; });
    bind(app.add_option("--activation-fraction", cfg.activation_fraction,
                        "Fraction of epochs before the intervention switches on")
             ->check(CLI::Range(0.0, 1.0)),
         [this](const TrainConfig& c) { cfg.activation_fraction = c.activation_fraction; });
    bind(app.add_option("--lr", cfg.learning_rate, "AdamW learning rate")->check(CLI::PositiveNumber),
         [this](const TrainConfig& c) { cfg.learning_rate = c.learning_rate; });
    bind(app.add_option("--weight-decay", cfg.weight_decay, "AdamW decoupled weight decay")
             ->check(CLI::NonNegativeNumber),
         [this](const TrainConfig& c) { cfg.weight_decay = c.weight_decay; });
    bind(app.add_option("--batch", cfg.batch_size, "Samples per optimizer step")->check(CLI::PositiveNumber),
         [this](const TrainConfig& c) { cfg.batch_size = c.batch_size; });
    bind(app.add_option("--seed", cfg.seed, "Model initialization and shuffling seed"),
         [this](const TrainConfig& c) { cfg.seed = c.seed; });
    bind(app.add_option("--patch", cfg.patch_size, "Vision encoder patch size")->check(CLI::PositiveNumber),
         [this](const TrainConfig& c) { cfg.patch_size = c.patch_size; });
    bind(app.add_option("--dim", cfg.embed_dim, "Embedding dimension")->check(CLI::PositiveNumber),
         [this](const TrainConfig& c) { cfg.embed_dim = c.embed_dim; });
    bind(app.add_option("--text-seed", cfg.text_seed, "Text encoder seed"),
         [this](const TrainConfig& c) { cfg.text_seed = c.text_seed; });
    bind(app.add_flag("--train-dictionary", cfg.dictionary_trainable, "Let dictionary entries update"),
         [this](const TrainConfig& c) { cfg.dictionary_trainable = c.dictionary_trainable; });
    if (with_ablation) {
      bind(app.add_option("--ablation", ablation, "Ablation mode")
               ->check(CLI::IsMember({"full", "no_mtrs", "no_cdrl", "baseline"})),
           [this](const TrainConfig& c) { ablation = std::string(mode_name(c.ablation)); });
    }
    app.add_option("--config", config_file, "Resolved config JSON or run.json to start from")
        ->check(CLI::ExistingFile);
  }

  TrainConfig resolve() {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      std::stringstream ss;
      ss << in.rdbuf();
      const json j = json::parse(ss.str(), nullptr, false);
      if (j.is_discarded()) throw FormatError(config_file + ": not valid JSON");
      const TrainConfig base = TrainConfig::from_json((j.contains("config") ? j["config"] : j).dump());
      for (auto& [opt, take] : bound)
        if (opt->count() == 0) take(base);
    }
    cfg.ablation = parse_mode(ablation);
    cfg.validate();
    return cfg;
  }
};

std::size_t holdout_index(const Dataset& ds, const std::string& site) {
  if (site.size() != 1) throw ParameterError("--site-holdout takes one site letter");
  return site_index(ds, site[0]);
}

int cmd_gen_data(const std::vector<std::string>& argv, const std::string& out_dir, std::size_t per_domain,
                 std::uint64_t seed, const std::string& sites_file, std::size_t size, std::ostream& out) {
  const fs::path dir = prepare_out(out_dir);
  json cfg{{"per_domain", per_domain}, {"seed", seed}, {"height", size}, {"width", size},
           {"sites", sites_file.empty() ? "default" : sites_file}};
  ManifestScope scope(dir / "run.json", begin_manifest("gen-data", argv, cfg.dump(), seed));
  const std::vector<DomainSpec> sites = sites_file.empty() ? default_sites() : load_sites(sites_file);
  const Dataset ds = generate_split(per_domain, seed, sites, size, size);
  write_dataset(ds, dir, seed, per_domain);
  out << "wrote " << ds.samples.size() << " samples to " << dir.string() << '\n';
  scope.finish({(dir / "manifest.json").string(), (dir / "samples").string()});
  return 0;
}

int cmd_train(const std::vector<std::string>& argv, ConfigFlags& flags, const std::string& data_dir,
              const std::string& holdout, const std::string& out_dir, const std::string& resume,
              std::ostream& out) {
  const TrainConfig cfg = flags.resolve();
  const fs::path dir = prepare_out(out_dir);
  ManifestScope scope(dir / "run.json", begin_manifest("train", argv, cfg.to_json(), cfg.seed));
  const Dataset ds = load_data(data_dir);
  SplitIndices split;
  if (holdout.empty()) {
    for (std::size_t i = 0; i < ds.samples.size(); ++i) split.train.push_back(i);
    split.test = split.train;
  } else {
    split = hold_out(ds, holdout_index(ds, holdout));
  }

  std::optional<Trainer> trainer;
  if (!resume.empty()) {
    Checkpoint ck = load_checkpoint(resume);
    TrainConfig extended = ck.config;
    extended.epochs = cfg.epochs;
    if (extended.hash() != cfg.hash()) throw FormatError("checkpoint " + resume + " was trained with a different config");
    if (ck.epochs_done > cfg.epochs) throw ParameterError("checkpoint is already past --epochs");
    ck.config = extended;
    if (ck.num_classes != ds.num_classes) throw FormatError("checkpoint class count does not match the dataset");
    trainer.emplace(ck);
  } else {
    trainer.emplace(cfg, ds.num_classes);
  }
  trainer->set_dump_dir(dir / "diverged");
  trainer->run(ds, split.train);

  const fs::path ckpt = dir / "model.mckp";
  save_checkpoint(ckpt, trainer->checkpoint());
  std::string history;
  for (const auto& h : trainer->history()) history += epoch_log_json(h) + "\n";
  write_text(dir / "history.jsonl", history);
  const EvaluationReport report = trainer->evaluate(ds, split.test);
  const std::string metrics = metrics_jsonl(report, ds, class_names_for(ds), cfg.seed, trainer->epochs_done());
  write_text(dir / "metrics.jsonl", metrics);
  out << history << metrics;
  scope.finish({ckpt.string(), (dir / "history.jsonl").string(), (dir / "metrics.jsonl").string()});
  return 0;
}

int cmd_eval(const std::vector<std::string>& argv, const std::string& ckpt_path, const std::string& data_dir,
             const std::string& holdout, const std::string& out_dir, std::ostream& out) {
  std::optional<ManifestScope> scope;
  fs::path dir;
  if (!out_dir.empty()) {
    dir = prepare_out(out_dir);
    scope.emplace(dir / "run.json", begin_manifest("eval", argv, "{}", 0));
  }
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const Dataset ds = load_data(data_dir);
  if (ck.num_classes != ds.num_classes) throw FormatError("checkpoint class count does not match the dataset");
  const Trainer trainer(ck);
  std::vector<std::size_t> indices;
  if (holdout.empty()) {
    for (std::size_t i = 0; i < ds.samples.size(); ++i) indices.push_back(i);
  } else {
    indices = hold_out(ds, holdout_index(ds, holdout)).test;
  }
  const EvaluationReport report = trainer.evaluate(ds, indices);
  const std::string metrics =
      metrics_jsonl(report, ds, class_names_for(ds), ck.config.seed, trainer.epochs_done());
  out << metrics;
  if (scope) {
    write_text(dir / "metrics.jsonl", metrics);
    scope->finish({(dir / "metrics.jsonl").string()});
  }
  return 0;
}

int cmd_ablate(const std::vector<std::string>& argv, ConfigFlags& flags, const std::string& data_dir,
               std::vector<std::uint64_t> seeds, std::size_t jobs, std::size_t per_domain, std::uint64_t data_seed,
               const std::string& out_dir, std::ostream& out) {
  const TrainConfig cfg = flags.resolve();
  std::optional<ManifestScope> scope;
  fs::path dir;
  if (!out_dir.empty()) {
    dir = prepare_out(out_dir);
    json c = json::parse(cfg.to_json());
    c.erase("ablation");
    c["seeds"] = seeds;
    c["data"] = data_dir.empty() ? json{{"per_domain", per_domain}, {"seed", data_seed}} : json(data_dir);
    scope.emplace(dir / "run.json", begin_manifest("ablate", argv, c.dump(), cfg.seed));
  }
  const Dataset ds = data_dir.empty() ? generate_split(per_domain, data_seed, default_sites()) : load_data(data_dir);
  std::string cells;
  const AblationResult result = ablate(cfg, ds, seeds, jobs, [&](const AblationCell& c) {
    const json line{{"mode", std::string(mode_name(c.mode))}, {"site", std::string(1, ds.domains[c.site].site)},
                    {"seed", c.seed}, {"mdice", c.mean_dice}};
    cells += line.dump() + "\n";
    std::cerr << line.dump() << '\n';
  });
  out << result.table();
  if (scope) {
    write_text(dir / "ablation.json", result.to_json() + "\n");
    write_text(dir / "ablation.txt", result.table());
    write_text(dir / "cells.jsonl", cells);
    scope->finish({(dir / "ablation.json").string(), (dir / "ablation.txt").string(), (dir / "cells.jsonl").string()});
  }
  return 0;
}

int cmd_gradcheck(const std::vector<std::string>& argv, double tol, double step, std::size_t instances,
                  std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  std::optional<ManifestScope> scope;
  fs::path dir;
  if (!out_dir.empty()) {
    dir = prepare_out(out_dir);
    const json c{{"tol", tol}, {"step", step}, {"instances", instances}};
    scope.emplace(dir / "run.json", begin_manifest("gradcheck", argv, c.dump(), seed));
  }
  GradCheckOptions options;
  options.tolerance = tol;
  options.step = step;
  const GradSuiteReport report = run_grad_suite(instances, seed, options);
  const std::string text = report.to_json() + "\n";
  out << text;
  if (scope) {
    write_text(dir / "gradcheck.json", text);
    scope->finish({(dir / "gradcheck.json").string()});
  }
  return report.passed() ? 0 : 1;
}

}  // namespace

std::string RunManifest::to_json() const {
  json j{{"command", command},
         {"args", args},
         {"config", json::parse(config_json.empty() ? "{}" : config_json)},
         {"seed", seed},
         {"git_describe", git_describe},
         {"start", start},
         {"outputs", outputs}};
  if (end) j["end"] = *end;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("run manifest is not a JSON object");
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.args = j.at("args").get<std::vector<std::string>>();
    m.config_json = j.at("config").dump();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.git_describe = j.at("git_describe").get<std::string>();
    m.start = j.at("start").get<std::string>();
    if (j.contains("end")) m.end = j.at("end").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("run manifest: ") + e.what());
  }
  return m;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string git_describe() { return MCDRL_GIT_DESCRIBE; }

void write_manifest(const fs::path& path, const RunManifest& manifest) { write_text(path, manifest.to_json()); }

RunManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("run manifest not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return RunManifest::from_json(ss.str());
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal causal-driven representation learning on a synthetic multi-site benchmark", "mcdrl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", git_describe());

  std::string out_dir, data_dir, holdout, resume, ckpt, sites_file;
  std::size_t per_domain = kDefaultPerDomain, size = 32, jobs = 1, instances = 20;
  std::uint64_t data_seed = kDefaultDataSeed, check_seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double tol = 1e-4, step = 1e-5;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic multi-site dataset");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--per-domain", per_domain, "Samples per site")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--seed", data_seed, "Dataset seed")->capture_default_str();
  gen->add_option("--sites", sites_file, "Site parameter JSON (default: built-in sites A-E)")->check(CLI::ExistingFile);
  gen->add_option("--size", size, "Image height and width in pixels")->check(CLI::PositiveNumber)->capture_default_str();

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "Train one model with a held-out site");
  train->add_option("--data", data_dir, "Dataset directory from gen-data")->required();
  train->add_option("--site-holdout", holdout, "Site excluded from training and used for evaluation")
      ->check(CLI::IsMember({"A", "B", "C", "D", "E"}));
  train->add_option("--out", out_dir, "Output directory")->required();
  train->add_option("--resume", resume, "Checkpoint to continue from");
  train_flags.add(*train, true);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  eval->add_option("--data", data_dir, "Dataset directory from gen-data")->required();
  eval->add_option("--site-holdout", holdout, "Evaluate this site only (default: every sample)")
      ->check(CLI::IsMember({"A", "B", "C", "D", "E"}));
  eval->add_option("--out", out_dir, "Optional output directory for metrics.jsonl");

  ConfigFlags ablate_flags;
  auto* abl = app.add_subcommand("ablate", "Leave-one-site-out comparison of the four ablation modes");
  abl->add_option("--data", data_dir, "Dataset directory (default: generate in memory)");
  abl->add_option("--seeds", seeds, "Comma-separated training seeds")->delimiter(',')->capture_default_str();
  abl->add_option("--jobs", jobs, "Cells trained concurrently")->check(CLI::PositiveNumber)->capture_default_str();
  abl->add_option("--per-domain", per_domain, "Samples per site when generating")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  abl->add_option("--data-seed", data_seed, "Dataset seed when generating")->capture_default_str();
  abl->add_option("--out", out_dir, "Output directory");
  ablate_flags.add(*abl, false);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks of every loss");
  grad->add_option("--tol", tol, "Maximum relative error")->check(CLI::PositiveNumber)->capture_default_str();
  grad->add_option("--step", step, "Central difference step")->check(CLI::PositiveNumber)->capture_default_str();
  grad->add_option("--instances", instances, "Random instances per loss")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  grad->add_option("--seed", check_seed, "Instance seed")->capture_default_str();
  grad->add_option("--out", out_dir, "Optional output directory for gradcheck.json");

  std::vector<std::string> rest(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (gen->parsed()) return cmd_gen_data(argv, out_dir, per_domain, data_seed, sites_file, size, out);
    if (train->parsed()) return cmd_train(argv, train_flags, data_dir, holdout, out_dir, resume, out);
    if (eval->parsed()) return cmd_eval(argv, ckpt, data_dir, holdout, out_dir, out);
    if (abl->parsed()) {
      if (seeds.empty()) throw ParameterError("--seeds needs at least one value");
      return cmd_ablate(argv, ablate_flags, data_dir, seeds, jobs, per_domain, data_seed, out_dir, out);
    }
    if (grad->parsed()) return cmd_gradcheck(argv, tol, step, instances, check_seed, out_dir, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace mcdrl::cli
