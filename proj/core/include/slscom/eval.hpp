#pragma once

#include <map>
#include <string>
#include <vector>

#include "slscom/config.hpp"
#include "slscom/digital.hpp"
#include "slscom/e2e_train.hpp"

namespace slscom {

// Fraction of argmax matches; ties broken by the lowest class index.
// Throws LengthError on empty or unequal-length inputs.
double top1_accuracy(const std::vector<int>& predictions,
                     const std::vector<int>& labels);

// One training repetition: its config identity, per-SNR test accuracy
// averaged over the test repeats, and bookkeeping.
struct RunReport {
  std::uint64_t config_fingerprint = 0;
  std::string mode;
  std::uint64_t seed = 0;           // run seed of this training repetition
  int train_rep = 0;
  double top1 = 0;                  // at the training SNR
  std::map<double, double> per_snr; // test SNR -> mean top-1 over test reps
  std::string finetune_trace;       // CSV path
  std::string pretrain_trace;       // CSV path, empty if the mode skips it
  double wall_seconds = 0;
};

struct AggregateRow {
  std::string mode;
  long labels = 0;
  double train_snr = 0;
  double test_snr = 0;
  double mean_top1 = 0;
  double std_top1 = 0;
  int runs = 0;
};

struct ExperimentSummary {
  ExperimentConfig config;
  std::vector<RunReport> runs;
  std::vector<AggregateRow> aggregate;   // one row per test SNR
  std::string per_run_csv;
  std::string aggregate_csv;
};

// Pretrain (when the mode calls for it), fine-tune repeats_train times, and
// evaluate each trained model repeats_test times over the test-SNR grid.
// Writes per-run and aggregate CSVs (both embed the config fingerprint) under
// out_dir.  Deterministic: same config + seed reproduces the same bytes in
// the aggregate CSV.
ExperimentSummary run_experiment(const ExperimentConfig& cfg,
                                 const std::string& out_dir);

// Accuracy-vs-labels and accuracy-vs-SNR tables with the fixed schema
// (mode,labels,train_snr,test_snr,mean_top1,std_top1,runs) plus SVG plots
// rendered from them and from the first available loss trace.
// Throws LengthError when given no reports.
void emit_report(const std::vector<ExperimentSummary>& summaries,
                 const std::string& out_dir);

}  // namespace slscom
