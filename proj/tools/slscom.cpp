// slscom: experiment driver for the semantic-communication training and
// simulation framework.  Subcommands: datagen, pretrain, finetune, evaluate,
// sweep, report.  Unrecognized `--key value` pairs override config keys.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "slscom/checkpoint.hpp"
#include "slscom/eval.hpp"
#include "slscom/rng.hpp"
#include "slscom/ssl_pretrain.hpp"

namespace fs = std::filesystem;
using namespace slscom;

namespace {

// CLI aliases for the most common config keys
std::string canonical_key(std::string key) {
  for (char& c : key)
    if (c == '-') c = '_';
  if (key == "labels") return "labeled_count";
  if (key == "unlabeled") return "unlabeled_count";
  if (key == "train_snr") return "train_snr_db";
  if (key == "test_snr") return "test_snr_db";
  if (key == "pretrained") return "pretrained_weights";
  if (key == "out") return "output_dir";
  if (key == "data") return "data_dir";
  return key;
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& extras) {
  ExperimentConfig cfg =
      path.empty() ? ExperimentConfig::desk_preset() : ExperimentConfig::from_file(path);
  for (size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0)
      throw ConfigError("expected --key, got: " + tok);
    std::string key = tok.substr(2), value;
    auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("missing value for --" + key);
      value = extras[++i];
    }
    cfg.apply_key(canonical_key(key), value);
  }
  auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConfigError(msg);
  }
  return cfg;
}

SplitSet load_splits(const ExperimentConfig& cfg) {
  Dataset train, test;
  std::string dir = cfg.resolved_data_dir();
  if (fs::exists(fs::path(dir) / "train.raw")) {
    train = import_raw((fs::path(dir) / "train.raw").string());
    test = import_raw((fs::path(dir) / "test.raw").string());
  } else {
    train = import_cifar10_binary(dir, true);
    test = import_cifar10_binary(dir, false);
  }
  std::mt19937_64 split_rng(RngStreams::substream_seed(cfg.seed, "split", 0));
  return make_splits(train, test, cfg.split, split_rng);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

int cmd_datagen(const std::string& dir, long train_count, long test_count,
                std::uint64_t seed) {
  write_synthetic_cifar10(dir, train_count, test_count, seed);
  std::cout << "wrote synthetic dataset to " << dir << " (" << train_count
            << " train / " << test_count << " test)\n";
  return 0;
}

int cmd_pretrain(const std::string& config, const std::vector<std::string>& extras,
                 bool supervised) {
  ExperimentConfig cfg = load_config(config, extras);
  SplitSet splits = load_splits(cfg);
  std::uint64_t run_seed = RngStreams::substream_seed(cfg.seed, "train", 0);
  std::string out = cfg.output_dir + "/pretrain";
  if (supervised) {
    std::string path = pretrain_supervised_encoder(splits.labeled, cfg, out, run_seed);
    std::cout << "supervised encoder checkpoint: " << path << "\n";
  } else {
    PretrainResult res = pretrain_run(splits.unlabeled, cfg, out, run_seed);
    std::cout << "encoder checkpoint: " << res.checkpoint_path << "\n"
              << "loss trace: " << res.trace_path << "\n";
  }
  return 0;
}

int cmd_finetune(const std::string& config, const std::vector<std::string>& extras) {
  ExperimentConfig cfg = load_config(config, extras);
  SplitSet splits = load_splits(cfg);
  std::uint64_t run_seed = RngStreams::substream_seed(cfg.seed, "train", 0);
  std::string out = cfg.output_dir + "/finetune";
  FinetuneResult res =
      finetune_run(splits.labeled, splits.val, cfg, nullptr, out, run_seed);
  std::cout << "mode: " << to_string(cfg.mode) << "\n"
            << "best val top-1: " << res.best_val_acc << " (epoch "
            << res.best_epoch << ")\n"
            << "loss trace: " << res.trace_path << "\n";
  for (const auto& p : res.checkpoint_paths) std::cout << "checkpoint: " << p << "\n";
  return 0;
}

int cmd_evaluate(const std::string& config, const std::vector<std::string>& extras,
                 const std::string& checkpoint) {
  ExperimentConfig cfg = load_config(config, extras);
  SplitSet splits = load_splits(cfg);
  std::mt19937_64 init_rng(RngStreams::substream_seed(cfg.seed, "init", 0));
  std::mt19937_64 pilot_rng(RngStreams::substream_seed(cfg.seed, "pilot", 0));
  SlscomPipeline pipeline(cfg, init_rng, pilot_rng);
  PipelineParams pm(pipeline);
  load_checkpoint(checkpoint, pm);

  std::cout << "test_snr,top1\n";
  for (size_t i = 0; i < cfg.test_snr_db.size(); ++i) {
    double snr = cfg.test_snr_db[i];
    double acc = evaluate_accuracy(pipeline, splits.test, cfg, snr,
                                   RngStreams::substream_seed(cfg.seed, "eval", i));
    std::cout << snr << "," << acc << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& extras,
              const std::string& modes_csv, const std::string& labels_csv) {
  ExperimentConfig base = load_config(config, extras);
  std::vector<std::string> modes =
      modes_csv.empty() ? std::vector<std::string>{to_string(base.mode)}
                        : split_csv(modes_csv);
  std::vector<std::string> labels =
      labels_csv.empty() ? std::vector<std::string>{std::to_string(base.split.labeled_count)}
                         : split_csv(labels_csv);

  std::vector<ExperimentSummary> summaries;
  for (const auto& mode : modes)
    for (const auto& lab : labels) {
      ExperimentConfig cfg = base;
      cfg.apply_key("mode", mode);
      cfg.apply_key("labeled_count", lab);
      std::string out = base.output_dir + "/" + mode + "_M" + lab;
      std::cout << "running " << mode << " with " << lab << " labels -> " << out
                << "\n";
      summaries.push_back(run_experiment(cfg, out));
      const auto& agg = summaries.back().aggregate;
      for (const auto& a : agg)
        std::cout << "  snr " << a.test_snr << " dB: top-1 " << a.mean_top1
                  << " +- " << a.std_top1 << " (" << a.runs << " runs)\n";
    }
  emit_report(summaries, base.output_dir + "/report");
  std::cout << "report written to " << base.output_dir << "/report\n";
  return 0;
}

// rebuild summaries from aggregate.csv files under a sweep output directory
int cmd_report(const std::string& runs_dir, const std::string& out) {
  std::vector<ExperimentSummary> summaries;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(runs_dir))
    if (e.path().filename() == "aggregate.csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  for (const auto& file : files) {
    std::ifstream f(file);
    std::string line;
    ExperimentSummary s;
    s.config = ExperimentConfig::desk_preset();
    bool first = true;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("mode,", 0) == 0) continue;
      std::istringstream is(line);
      std::string tok;
      AggregateRow a;
      std::getline(is, a.mode, ',');
      std::getline(is, tok, ','); a.labels = std::stol(tok);
      std::getline(is, tok, ','); a.train_snr = std::stod(tok);
      std::getline(is, tok, ','); a.test_snr = std::stod(tok);
      std::getline(is, tok, ','); a.mean_top1 = std::stod(tok);
      std::getline(is, tok, ','); a.std_top1 = std::stod(tok);
      std::getline(is, tok, ','); a.runs = std::stoi(tok);
      if (first) {
        s.config.apply_key("mode", a.mode);
        s.config.split.labeled_count = a.labels;
        s.config.hyper.train_snr_db = a.train_snr;
        first = false;
      }
      s.aggregate.push_back(a);
    }
    if (!s.aggregate.empty()) summaries.push_back(std::move(s));
  }
  emit_report(summaries, out);
  std::cout << "report written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"task-oriented semantic communication experiment driver"};
  app.require_subcommand(1);

  std::string config, checkpoint, dir, modes_csv, labels_csv, runs_dir, out = "report";
  long train_count = 6000, test_count = 1000;
  std::uint64_t seed = 1;
  bool supervised = false;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config, "flat key=value config file");
    sub->allow_extras();
  };

  auto* sc_datagen = app.add_subcommand("datagen", "write a synthetic dataset");
  sc_datagen->add_option("--dir", dir, "output directory")->required();
  sc_datagen->add_option("--train-count", train_count, "training images");
  sc_datagen->add_option("--test-count", test_count, "test images");
  sc_datagen->add_option("--seed", seed, "generator seed");

  auto* sc_pre = app.add_subcommand("pretrain", "self-supervised encoder pre-training");
  add_config(sc_pre);
  sc_pre->add_flag("--supervised", supervised,
                   "supervised pre-training (source for tscom weights)");

  auto* sc_fit = app.add_subcommand("finetune", "end-to-end supervised training");
  add_config(sc_fit);

  auto* sc_eval = app.add_subcommand("evaluate", "evaluate a trained pipeline");
  add_config(sc_eval);
  sc_eval->add_option("--checkpoint", checkpoint, "pipeline checkpoint")->required();

  auto* sc_sweep = app.add_subcommand("sweep", "repeat-averaged experiment grid");
  add_config(sc_sweep);
  sc_sweep->add_option("--modes", modes_csv, "comma-separated training modes");
  sc_sweep->add_option("--labels-list", labels_csv, "comma-separated labeled counts");

  auto* sc_rep = app.add_subcommand("report", "tables and plots from finished runs");
  sc_rep->add_option("--runs", runs_dir, "directory with sweep outputs")->required();
  sc_rep->add_option("--out", out, "report output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc_datagen->parsed()) return cmd_datagen(dir, train_count, test_count, seed);
    if (sc_pre->parsed()) return cmd_pretrain(config, sc_pre->remaining(), supervised);
    if (sc_fit->parsed()) return cmd_finetune(config, sc_fit->remaining());
    if (sc_eval->parsed())
      return cmd_evaluate(config, sc_eval->remaining(), checkpoint);
    if (sc_sweep->parsed())
      return cmd_sweep(config, sc_sweep->remaining(), modes_csv, labels_csv);
    if (sc_rep->parsed()) return cmd_report(runs_dir, out);
  } catch (const ConfigError& e) {
    std::cerr << "ConfigError: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "DataError: " << e.what() << "\n";
    return 3;
  } catch (const CheckpointError& e) {
    std::cerr << "CheckpointError: " << e.what() << "\n";
    return 4;
  } catch (const ChannelError& e) {
    std::cerr << "ChannelError: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "Error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
