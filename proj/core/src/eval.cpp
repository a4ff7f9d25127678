#include "slscom/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slscom/rng.hpp"
#include "slscom/ssl_pretrain.hpp"

namespace slscom {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool mode_pretrains(TrainMode m) {
  return m == TrainMode::slscom || m == TrainMode::slscom_fw ||
         m == TrainMode::slscom_ds;
}

std::pair<Dataset, Dataset> load_dataset_pair(const std::string& dir) {
  if (fs::exists(fs::path(dir) / "train.raw"))
    return {import_raw((fs::path(dir) / "train.raw").string()),
            import_raw((fs::path(dir) / "test.raw").string())};
  return {import_cifar10_binary(dir, true), import_cifar10_binary(dir, false)};
}

// minimal line-plot SVG: one polyline per series over shared axes
struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

void render_line_svg(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series) {
  const int W = 640, H = 420, ML = 60, MR = 150, MT = 40, MB = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x); xmax = std::max(xmax, x);
      ymin = std::min(ymin, y); ymax = std::max(ymax, y);
    }
  if (!(xmin < xmax)) { xmin -= 1; xmax += 1; }
  if (!(ymin < ymax)) { ymin -= 1; ymax += 1; }
  auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

  std::ofstream f(path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
    << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  f << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
    << title << "</text>\n";
  f << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR
    << "\" y2=\"" << H - MB << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\""
    << H - MB << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double x = xmin + (xmax - xmin) * i / 4, y = ymin + (ymax - ymin) * i / 4;
    f << "<text x=\"" << px(x) << "\" y=\"" << H - MB + 16
      << "\" text-anchor=\"middle\">" << x << "</text>\n";
    f << "<text x=\"" << ML - 6 << "\" y=\"" << py(y) + 4
      << "\" text-anchor=\"end\">" << y << "</text>\n";
  }
  f << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 12
    << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  f << "<text x=\"16\" y=\"" << (MT + H - MB) / 2
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (MT + H - MB) / 2 << ")\">" << ylabel << "</text>\n";
  for (size_t s = 0; s < series.size(); ++s) {
    const char* c = colors[s % 8];
    f << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : series[s].points) f << px(x) << "," << py(y) << " ";
    f << "\"/>\n";
    f << "<text x=\"" << W - MR + 10 << "\" y=\"" << MT + 16 * s + 10
      << "\" fill=\"" << c << "\">" << series[s].label << "</text>\n";
  }
  f << "</svg>\n";
}

}  // namespace

double top1_accuracy(const std::vector<int>& predictions,
                     const std::vector<int>& labels) {
  if (predictions.empty()) throw LengthError("top1_accuracy: empty input");
  if (predictions.size() != labels.size())
    throw LengthError("top1_accuracy: prediction/label length mismatch");
  long hits = 0;
  for (size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / predictions.size();
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg,
                                 const std::string& out_dir) {
  auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConfigError(msg);
  }
  fs::create_directories(out_dir);

  auto [train, test] = load_dataset_pair(cfg.resolved_data_dir());
  std::mt19937_64 split_rng(RngStreams::substream_seed(cfg.seed, "split", 0));
  SplitSet splits = make_splits(train, test, cfg.split, split_rng);

  ExperimentSummary summary;
  summary.config = cfg;

  // rows: (train_rep, test_rep, test_snr, top1), in deterministic order
  struct EvalRow {
    int r, t;
    double snr, top1;
  };
  std::vector<EvalRow> rows;

  for (int r = 0; r < cfg.repeats_train; ++r) {
    std::uint64_t run_seed = RngStreams::substream_seed(cfg.seed, "train", r);
    std::string run_dir = out_dir + "/run" + std::to_string(r);
    auto t0 = std::chrono::steady_clock::now();

    RunReport report;
    report.config_fingerprint = cfg.fingerprint();
    report.mode = to_string(cfg.mode);
    report.seed = run_seed;
    report.train_rep = r;

    std::shared_ptr<SemanticEncoder> pretrained;
    if (mode_pretrains(cfg.mode) && cfg.pretrained_weights.empty()) {
      PretrainResult pre = pretrain_run(splits.unlabeled, cfg, run_dir + "/pretrain",
                                        RngStreams::substream_seed(run_seed, "pre", 0));
      pretrained = pre.encoder;
      report.pretrain_trace = pre.trace_path;
    }

    FinetuneResult ft = finetune_run(splits.labeled, splits.val, cfg, pretrained,
                                     run_dir, run_seed);
    report.finetune_trace = ft.trace_path;

    for (int t = 0; t < cfg.repeats_test; ++t) {
      for (size_t si = 0; si < cfg.test_snr_db.size(); ++si) {
        double snr = cfg.test_snr_db[si];
        std::uint64_t eval_seed = RngStreams::substream_seed(
            run_seed, "test", static_cast<std::uint64_t>(t) * 1024 + si);
        double acc = evaluate_accuracy(*ft.pipeline, splits.test, cfg, snr, eval_seed);
        rows.push_back({r, t, snr, acc});
        report.per_snr[snr] += acc / cfg.repeats_test;
      }
    }
    auto at_train = report.per_snr.find(cfg.hyper.train_snr_db);
    report.top1 = at_train != report.per_snr.end()
                      ? at_train->second
                      : report.per_snr.empty() ? 0.0 : report.per_snr.begin()->second;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary.runs.push_back(report);
  }

  summary.per_run_csv = out_dir + "/per_run.csv";
  {
    std::ofstream f(summary.per_run_csv);
    f << "# config_fingerprint=" << cfg.fingerprint() << "\n";
    f << "mode,labels,train_snr,test_snr,train_rep,test_rep,top1\n";
    for (const auto& row : rows)
      f << to_string(cfg.mode) << "," << cfg.split.labeled_count << ","
        << fmt(cfg.hyper.train_snr_db) << "," << fmt(row.snr) << "," << row.r << ","
        << row.t << "," << fmt(row.top1) << "\n";
  }

  for (double snr : cfg.test_snr_db) {
    std::vector<double> vals;
    for (const auto& row : rows)
      if (row.snr == snr) vals.push_back(row.top1);
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    double var = 0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= vals.size();
    AggregateRow agg;
    agg.mode = to_string(cfg.mode);
    agg.labels = cfg.split.labeled_count;
    agg.train_snr = cfg.hyper.train_snr_db;
    agg.test_snr = snr;
    agg.mean_top1 = mean;
    agg.std_top1 = std::sqrt(var);
    agg.runs = static_cast<int>(vals.size());
    summary.aggregate.push_back(agg);
  }

  summary.aggregate_csv = out_dir + "/aggregate.csv";
  {
    std::ofstream f(summary.aggregate_csv);
    f << "# config_fingerprint=" << cfg.fingerprint() << "\n";
    f << "mode,labels,train_snr,test_snr,mean_top1,std_top1,runs\n";
    for (const auto& a : summary.aggregate)
      f << a.mode << "," << a.labels << "," << fmt(a.train_snr) << ","
        << fmt(a.test_snr) << "," << fmt(a.mean_top1) << "," << fmt(a.std_top1)
        << "," << a.runs << "\n";
  }
  return summary;
}

void emit_report(const std::vector<ExperimentSummary>& summaries,
                 const std::string& out_dir) {
  if (summaries.empty()) throw LengthError("emit_report: no reports");
  fs::create_directories(out_dir);

  const char* schema = "mode,labels,train_snr,test_snr,mean_top1,std_top1,runs\n";
  auto write_row = [](std::ofstream& f, const AggregateRow& a) {
    f << a.mode << "," << a.labels << "," << fmt(a.train_snr) << ","
      << fmt(a.test_snr) << "," << fmt(a.mean_top1) << "," << fmt(a.std_top1) << ","
      << a.runs << "\n";
  };

  // labels table: one row per summary, taken at the training SNR
  {
    std::ofstream f(out_dir + "/acc_vs_labels.csv");
    f << "# config_fingerprint=" << summaries.front().config.fingerprint() << "\n"
      << schema;
    for (const auto& s : summaries)
      for (const auto& a : s.aggregate)
        if (a.test_snr == a.train_snr) write_row(f, a);
  }
  // SNR table: every aggregate row
  {
    std::ofstream f(out_dir + "/acc_vs_snr.csv");
    f << "# config_fingerprint=" << summaries.front().config.fingerprint() << "\n"
      << schema;
    for (const auto& s : summaries)
      for (const auto& a : s.aggregate) write_row(f, a);
  }

  std::vector<Series> snr_series;
  for (const auto& s : summaries) {
    Series ser;
    ser.label = std::string(to_string(s.config.mode)) + " M2=" +
                std::to_string(s.config.split.labeled_count);
    for (const auto& a : s.aggregate) ser.points.push_back({a.test_snr, a.mean_top1});
    std::sort(ser.points.begin(), ser.points.end());
    snr_series.push_back(std::move(ser));
  }
  render_line_svg(out_dir + "/acc_vs_snr.svg", "Top-1 accuracy vs test SNR",
                  "test SNR (dB)", "top-1 accuracy", snr_series);

  std::vector<Series> loss_series;
  for (const auto& s : summaries) {
    if (s.runs.empty() || s.runs.front().finetune_trace.empty()) continue;
    std::ifstream f(s.runs.front().finetune_trace);
    std::string line;
    std::getline(f, line);  // header
    Series ser;
    ser.label = to_string(s.config.mode);
    while (std::getline(f, line)) {
      std::istringstream is(line);
      std::string step, lapp;
      if (std::getline(is, step, ',') && std::getline(is, lapp, ','))
        ser.points.push_back({std::stod(step), std::stod(lapp)});
    }
    if (!ser.points.empty()) loss_series.push_back(std::move(ser));
  }
  if (!loss_series.empty())
    render_line_svg(out_dir + "/train_loss.svg", "Training loss", "step", "L_app",
                    loss_series);
}

}  // namespace slscom
