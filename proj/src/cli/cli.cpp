/*
 * Copyright 2026 The mobcausal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mobcausal/cli/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mobcausal/cli/run_config.hpp"
#include "mobcausal/data/checkin.hpp"
#include "mobcausal/data/dataset_io.hpp"
#include "mobcausal/data/preprocess.hpp"
#include "mobcausal/data/synth.hpp"
#include "mobcausal/errors.hpp"
#include "mobcausal/eval/evaluate.hpp"
#include "mobcausal/eval/runner.hpp"
#include "mobcausal/logging.hpp"
#include "mobcausal/stratify/stratify.hpp"
#include "mobcausal/train/train.hpp"

#ifndef MOBCAUSAL_GIT_DESCRIBE
#define MOBCAUSAL_GIT_DESCRIBE "unknown"
#endif

namespace mobcausal::cli {
namespace fs = std::filesystem;
namespace {

// Values collected while CLI11 parses; applied to a RunConfig afterwards so
// that flags win over the config file regardless of argument order.
struct Pending {
  std::map<std::string, std::string> flags;
  std::string config_file;
  std::string data;
  std::string out;
  std::string input;
  std::string checkpoint;
  std::string split = "test";
  std::size_t min_support = 10;
  bool dump_logits = false;
};

void value_flag(CLI::App* app, Pending& p, const std::string& name,
                const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
      name, [&p, key](const std::string& v) { p.flags[key] = v; }, help);
}

void config_flag(CLI::App* app, Pending& p) {
  app->add_option("--config", p.config_file, "INI config file")
      ->check(CLI::ExistingFile);
}

void data_flag(CLI::App* app, Pending& p) {
  app->add_option("--data", p.data, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
}

void out_flag(CLI::App* app, Pending& p) {
  app->add_option("--out", p.out,
                  "Output directory (default: runs/<command>-<timestamp>)");
}

void train_flags(CLI::App* app, Pending& p) {
  config_flag(app, p);
  out_flag(app, p);
  value_flag(app, p, "--seed", "run.seed", "Run seed");
  value_flag(app, p, "--threshold", "train.threshold",
             "Anchor threshold (visits > threshold)");
  value_flag(app, p, "--strategy", "model.strategy",
             "Counterfactual strategy: I, II or III");
  app->add_flag_callback(
      "--no-link1", [&p] { p.flags["model.link1"] = "false"; },
      "Drop the h -> y link");
  app->add_flag_callback(
      "--no-link2", [&p] { p.flags["model.link2"] = "false"; },
      "Drop the l -> y link");
  value_flag(app, p, "--epochs", "train.epochs", "Maximum epochs");
  value_flag(app, p, "--batch", "train.batch", "Batch size");
  value_flag(app, p, "--lr", "train.lr", "Adam learning rate");
  value_flag(app, p, "--k", "eval.k", "Cutoffs, e.g. 1,5,10");
}

RunConfig resolve(const Pending& p) {
  RunConfig config;
  if (!p.config_file.empty()) config.load_file(p.config_file);
  for (const auto& [key, value] : p.flags) config.set(key, value, Source::kFlag);
  return config;
}

fs::path run_dir(const Pending& p, const std::string& command) {
  fs::path dir;
  if (!p.out.empty()) {
    dir = p.out;
  } else {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream name;
    name << command << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
    dir = fs::path("runs") / name.str();
  }
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json manifest(const std::string& command, const Pending& p,
                        const RunConfig& config) {
  nlohmann::json paths = nlohmann::json::object();
  if (!p.data.empty()) paths["data"] = fs::absolute(p.data).string();
  if (!p.input.empty()) paths["input"] = fs::absolute(p.input).string();
  if (!p.checkpoint.empty()) paths["checkpoint"] = fs::absolute(p.checkpoint).string();
  if (!p.config_file.empty()) paths["config"] = fs::absolute(p.config_file).string();
  return {{"command", command},
          {"variant", variant_name()},
          {"git_describe", MOBCAUSAL_GIT_DESCRIBE},
          {"seed", config.seed()},
          {"paths", paths},
          {"config", config.to_json()}};
}

data::Split split_from(const std::string& name) {
  auto split = data::parse_split(name);
  if (!split) throw ConfigError("unknown split '" + name + "'");
  return *split;
}

void write_report(const fs::path& dir, const eval::MetricsReport& report) {
  report.write_csv(dir / "metrics.csv");
  write_json(dir / "metrics.json", report.to_json());
}

void print_report(std::ostream& out, const eval::MetricsReport& report) {
  out << std::fixed << std::setprecision(4);
  for (auto k : report.ks) {
    const auto& m = report.overall.at.at(k);
    out << "@" << k << "  recall " << m.recall << "  mrr " << m.mrr
        << "  ndcg " << m.ndcg;
    if (!report.t2.at.empty()) out << "  T2 recall " << report.t2.at.at(k).recall;
    out << '\n';
  }
  out << std::defaultfloat;
}

int cmd_ingest(const Pending& p, std::ostream& out) {
  auto config = resolve(p);
  auto dir = run_dir(p, "ingest");
  auto parsed = data::parse_checkins(p.input);
  data::PreprocessStats stats;
  auto dataset = data::preprocess(std::move(parsed.records), config.preprocess(), &stats);
  auto source = manifest("ingest", p, config);
  source["parse"] = {{"rows", parsed.stats.rows},
                     {"parsed", parsed.stats.parsed},
                     {"malformed", parsed.stats.malformed}};
  source["preprocess"] = {{"segmented_trajectories", stats.segmented_trajectories},
                          {"dropped_trajectories", stats.filter.dropped_trajectories},
                          {"dropped_users", stats.filter.dropped_users}};
  data::save_dataset(dir, dataset, source);
  write_json(dir / "resolved_config.json", source);
  out << "wrote " << dataset.trajectories.size() << " trajectories, "
      << dataset.users.size() << " users, " << dataset.locations.size()
      << " locations to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_synth(const Pending& p, std::ostream& out) {
  auto config = resolve(p);
  auto dir = run_dir(p, "synth");
  auto synth = config.synth();
  auto dataset = data::synth_generate(synth, config.preprocess());
  auto source = manifest("synth", p, config);
  source["synth"] = synth.to_json();
  data::save_dataset(dir, dataset, source);
  write_json(dir / "resolved_config.json", source);
  out << "wrote " << dataset.num_records() << " records, "
      << dataset.trajectories.size() << " trajectories to " << dir.string()
      << '\n';
  return kExitOk;
}

int cmd_stratify_stats(const Pending& p, std::ostream& out) {
  auto config = resolve(p);
  auto dataset = data::load_dataset(p.data);
  auto dir = run_dir(p, "stratify-stats");
  write_json(dir / "resolved_config.json", manifest("stratify-stats", p, config));
  std::vector<stratify::StratificationStats> rows;
  for (auto threshold : config.grid())
    rows.push_back(stratify::stratification_stats(dataset, threshold));
  stratify::write_stratification_csv(dir / "stratification.csv", rows);
  out << "threshold  anchors  train T1/T2  test T1/T2\n";
  for (const auto& r : rows) {
    out << r.threshold << "  " << r.total_anchors << "  " << r.train.t1 << '/'
        << r.train.t2 << "  " << r.test.t1 << '/' << r.test.t2 << '\n';
  }
  return kExitOk;
}

int cmd_analyze_prevloc(const Pending& p, std::ostream& out) {
  auto config = resolve(p);
  auto dataset = data::load_dataset(p.data);
  auto dir = run_dir(p, "analyze-prevloc");
  write_json(dir / "resolved_config.json", manifest("analyze-prevloc", p, config));
  auto report = stratify::prev_location_gain(dataset, split_from(p.split), p.min_support);
  stratify::write_gain_csv(dir / "prevloc_gain.csv", report, dataset.categories);
  nlohmann::json pooled = nlohmann::json::array();
  for (std::uint32_t c = 0; c < dataset.categories.size(); ++c) {
    const std::uint32_t one[] = {c};
    auto cell = report.pooled(one);
    if (cell.support == 0) continue;
    pooled.push_back({{"category", dataset.categories.raw(c)},
                      {"support", cell.support},
                      {"acc_without_prev", cell.acc_without_prev()},
                      {"acc_with_prev", cell.acc_with_prev()},
                      {"gain", cell.gain()}});
    out << dataset.categories.raw(c) << ": gain " << cell.gain() << " (n="
        << cell.support << ")\n";
  }
  write_json(dir / "prevloc_pooled.json", pooled);
  return kExitOk;
}

int cmd_train(const Pending& p, std::ostream& out) {
  auto config = resolve(p);
  auto tc = config.train();
  auto ks = config.ks();
  auto dataset = data::load_dataset(p.data);
  auto dir = run_dir(p, "train");
  write_json(dir / "resolved_config.json", manifest("train", p, config));
  auto anchors = stratify::build_anchor_index(dataset, tc.anchor_threshold);
  train::TrainOptions options;
  options.out_dir = dir;
  auto result = train::train(dataset, anchors, tc, options);
  auto report = eval::evaluate(result.params, result.model, dataset,
                               data::Split::kTest, anchors, ks);
  write_report(dir, report);
  out << "best epoch " << result.best_epoch << " of " << result.history.size()
      << ", valid recall@5 " << result.best_valid_recall << "\ntest:\n";
  print_report(out, report);
  out << "run directory: " << dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(Pending p, std::ostream& out) {
  // Strata default to the threshold the checkpoint was trained with.
  auto run_config = fs::path(p.checkpoint).parent_path() / "resolved_config.json";
  RunConfig config = resolve(p);
  if (config.source("train.threshold") == Source::kDefault &&
      fs::exists(run_config)) {
    std::ifstream in(run_config);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.contains("config") && j["config"].contains("train.threshold")) {
      config.set("train.threshold",
                 j["config"]["train.threshold"]["value"].get<std::string>(),
                 Source::kFile);
    }
  }
  auto ks = config.ks();
  auto threshold = config.train().anchor_threshold;
  auto dataset = data::load_dataset(p.data);
  auto loaded = model::load_model(p.checkpoint);
  eval::check_compatible(loaded.config, dataset);
  auto dir = run_dir(p, "eval");
  write_json(dir / "resolved_config.json", manifest("eval", p, config));

  auto anchors = stratify::build_anchor_index(dataset, threshold);
  auto split = split_from(p.split);
  auto samples = stratify::make_samples(dataset, anchors, split);
  if (samples.empty()) {
    throw EmptyDatasetError(std::string("no samples in split ") + data::split_name(split));
  }
  eval::LogitSink sink;
  std::optional<eval::LogitDump> dump;
  if (p.dump_logits) {
    dump.emplace(dir / "logits", samples);
    sink = dump->sink();
  }
  auto ranked = eval::rank_samples(loaded.params, loaded.config, samples, sink);
  auto report = eval::build_report(ranked, ks, dataset.categories);
  write_report(dir, report);
  print_report(out, report);
  return kExitOk;
}

int cmd_sweep(const Pending& p, std::ostream& out) {
  auto config = resolve(p);
  auto tc = config.train();
  auto grid = config.grid();
  eval::RunnerOptions options;
  options.ks = config.ks();
  auto dataset = data::load_dataset(p.data);
  auto dir = run_dir(p, "sweep");
  write_json(dir / "resolved_config.json", manifest("sweep", p, config));
  options.out_dir = dir;
  auto result = eval::sweep_threshold(dataset, tc, grid, options);
  eval::write_cells_csv(result.cells, dir / "sweep.csv");
  write_json(dir / "sweep.json", eval::cells_to_json(result.cells));
  for (const auto& c : result.cells) {
    out << "threshold " << c.config.anchor_threshold << ": recall@"
        << options.ks.back() << ' ' << c.report.recall(options.ks.back()) << '\n';
  }
  return kExitOk;
}

int cmd_ablate(const Pending& p, std::ostream& out) {
  auto config = resolve(p);
  auto tc = config.train();
  eval::RunnerOptions options;
  options.ks = config.ks();
  auto dataset = data::load_dataset(p.data);
  auto dir = run_dir(p, "ablate");
  write_json(dir / "resolved_config.json", manifest("ablate", p, config));
  options.out_dir = dir;
  auto anchors = stratify::build_anchor_index(dataset, tc.anchor_threshold);
  auto result = eval::run_ablation(dataset, anchors, tc, options);
  eval::write_cells_csv(result.cells, dir / "ablation.csv");
  write_json(dir / "ablation.json", eval::cells_to_json(result.cells));
  for (const auto& c : result.cells) {
    out << c.label << ": recall@" << options.ks.back() << ' '
        << c.report.recall(options.ks.back()) << '\n';
  }
  return kExitOk;
}

}  // namespace

const char* variant_name() {
#ifdef MOBCAUSAL_NO_COUNTERFACTUAL
  return "conventional";
#else
  return "causal";
#endif
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  init_logging_from_env();
  CLI::App app{std::string("Causality-aware next-location prediction (") +
               variant_name() + " build)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MOBCAUSAL_GIT_DESCRIBE) + " " +
                                        variant_name());
  Pending p;

  auto* ingest = app.add_subcommand("ingest", "Foursquare TSV -> dataset directory");
  ingest->add_option("--input", p.input, "Check-in TSV (optionally gzipped)")
      ->required()
      ->check(CLI::ExistingFile);
  out_flag(ingest, p);
  config_flag(ingest, p);
  value_flag(ingest, p, "--gap-hours", "data.gap_hours", "Trajectory gap (hours)");

  auto* synth = app.add_subcommand("synth", "Synthetic corpus -> dataset directory");
  out_flag(synth, p);
  config_flag(synth, p);
  value_flag(synth, p, "--seed", "run.seed", "Generator seed");
  value_flag(synth, p, "--gap-hours", "data.gap_hours", "Trajectory gap (hours)");

  auto* stats = app.add_subcommand("stratify-stats", "Anchor and stratum counts per threshold");
  data_flag(stats, p);
  out_flag(stats, p);
  config_flag(stats, p);
  value_flag(stats, p, "--grid", "eval.grid", "Thresholds, e.g. 0,5,10");

  auto* prevloc = app.add_subcommand("analyze-prevloc",
                                     "Accuracy gain from knowing the previous location");
  data_flag(prevloc, p);
  out_flag(prevloc, p);
  config_flag(prevloc, p);
  prevloc->add_option("--split", p.split, "Split to score (train, valid, test)");
  prevloc->add_option("--min-support", p.min_support, "Minimum cell support");

  auto* train_cmd = app.add_subcommand("train", "Train and evaluate on the test split");
  data_flag(train_cmd, p);
  train_flags(train_cmd, p);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  data_flag(eval_cmd, p);
  eval_cmd->add_option("--checkpoint", p.checkpoint, "Checkpoint directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  out_flag(eval_cmd, p);
  config_flag(eval_cmd, p);
  eval_cmd->add_option("--split", p.split, "Split to evaluate");
  value_flag(eval_cmd, p, "--threshold", "train.threshold", "Anchor threshold for strata");
  value_flag(eval_cmd, p, "--k", "eval.k", "Cutoffs, e.g. 1,5,10");
  eval_cmd->add_flag("--dump-logits", p.dump_logits, "Write logits.f32 and index");

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate once per anchor threshold");
  data_flag(sweep, p);
  train_flags(sweep, p);
  value_flag(sweep, p, "--grid", "eval.grid", "Thresholds, e.g. 0,5,10,15,20,25");

  auto* ablate = app.add_subcommand("ablate", "Full model vs. each link removed");
  data_flag(ablate, p);
  train_flags(ablate, p);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(p, out);
    if (*synth) return cmd_synth(p, out);
    if (*stats) return cmd_stratify_stats(p, out);
    if (*prevloc) return cmd_analyze_prevloc(p, out);
    if (*train_cmd) return cmd_train(p, out);
    if (*eval_cmd) return cmd_eval(p, out);
    if (*sweep) return cmd_sweep(p, out);
    if (*ablate) return cmd_ablate(p, out);
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace mobcausal::cli
