// Acceptance suite: one pass/fail line per criterion.  Criteria are selected
// by number on the command line; no arguments runs all of them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "slscom/checkpoint.hpp"
#include "slscom/eval.hpp"
#include "slscom/rng.hpp"
#include "slscom/ssl_pretrain.hpp"

using namespace slscom;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

std::string data_dir(long train_count, long test_count, std::uint64_t seed) {
  fs::path dir = fs::temp_directory_path() /
                 ("slscom_acc_data_" + std::to_string(train_count) + "_" +
                  std::to_string(seed));
  if (!fs::exists(dir / "test_batch.bin"))
    write_synthetic_cifar10(dir.string(), train_count, test_count, seed);
  return dir.string();
}

// ---------------------------------------------------------------- criterion 1
Outcome criterion_1() {
  OfdmParams ofdm;  // K=64, Lcp=16, Np=2, Ns=6
  ChannelParams chp;  // L_h = 8
  std::mt19937_64 rng(101), noise(102);
  CGrid pilots = make_pilot_grid(ofdm, rng);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    CGrid data(ofdm.subcarriers, ofdm.data_symbols);
    std::normal_distribution<double> g(0, 1);
    for (auto& z : data.v) z = cplx(g(rng), g(rng)) / std::sqrt(2.0);
    ChannelRealization ch = sample_channel(chp, ofdm.subcarriers, rng);

    cvec tx = ofdm_modulate(data, pilots, ofdm);
    cvec rx = transmit_time(tx, ch.taps, 0.0, noise);
    CGrid dh, ph;
    ofdm_demodulate(rx, ofdm, dh, ph);
    for (int i = 0; i < ofdm.data_symbols; ++i)
      for (int k = 0; k < ofdm.subcarriers; ++k) {
        cplx want = ch.freq[k] * data.at(k, i);
        worst = std::max(worst, std::abs(dh.at(k, i) - want) /
                                    std::max(1.0, std::abs(want)));
      }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max relative error %.3g over 100 frames", worst);
  return {worst < 1e-6, buf};
}

// ---------------------------------------------------------------- criterion 2
Outcome criterion_2() {
  OfdmParams ofdm;
  ChannelParams chp;
  std::mt19937_64 rng(201), noise(202);
  std::ostringstream detail;
  bool ok = true;
  for (double target : {-4.0, 0.0, 10.0}) {
    double sig_energy = 0, noise_energy = 0;
    std::normal_distribution<double> g(0, 1);
    for (int f = 0; f < 10000; ++f) {
      CGrid data(ofdm.subcarriers, ofdm.data_symbols);
      for (auto& z : data.v) z = cplx(g(rng), g(rng)) / std::sqrt(2.0);
      ChannelRealization ch = sample_channel(chp, ofdm.subcarriers, rng);
      double sigma2 = calibrate_noise(ch.freq, data, target);
      std::normal_distribution<double> n(0, std::sqrt(sigma2 / 2));
      for (int i = 0; i < ofdm.data_symbols; ++i)
        for (int k = 0; k < ofdm.subcarriers; ++k) {
          sig_energy += std::norm(ch.freq[k] * data.at(k, i));
          noise_energy += std::norm(cplx(n(noise), n(noise)));
        }
    }
    double emp = 10 * std::log10(sig_energy / noise_energy);
    detail << target << "dB->" << emp << "dB ";
    ok = ok && std::abs(emp - target) <= 0.1;
  }
  return {ok, "empirical vs target: " + detail.str()};
}

// ---------------------------------------------------------------- criterion 3
Outcome criterion_3() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    JsccSpec spec{32, 8, 1};
    JsccEncoder je(128, 96, spec, rng);
    std::normal_distribution<double> g(0, 2);
    ag::Tensor x({4, 128});
    for (long i = 0; i < x.size(); ++i) x.data[i] = g(rng);
    Var z = je.forward(ag::make_param(x), true);
    for (int r = 0; r < 4; ++r) {
      double p = 0;
      for (int c = 0; c < 192; ++c) {
        double v = z->value.data[r * 192 + c];
        p += v * v;
      }
      worst = std::max(worst, std::abs(p / 96.0 - 1.0));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max power deviation %.3g over 10 random nets", worst);
  return {worst < 1e-10, buf};
}

// ---------------------------------------------------------------- criterion 4
Outcome criterion_4() {
  ag::Tensor s({2, 2});
  s.data[0] = 1;
  s.data[3] = 1;
  double ortho = ag::infonce_from_scores(ag::make_param(s))->value.data[0];
  bool ok = std::abs(ortho - (1 - std::log(1 + std::exp(1.0)))) <= 1e-9;

  ag::Tensor u = ag::Tensor::full({2, 2}, 0.25);
  double unif = ag::infonce_from_scores(ag::make_param(u))->value.data[0];
  ok = ok && unif == -std::log(2.0);

  ag::Tensor probs = ag::Tensor::full({4, 10}, 0.1);
  ag::Tensor onehot({4, 10});
  for (int r = 0; r < 4; ++r) onehot.data[r * 10 + r] = 1;
  double ce = ce_loss(ag::make_param(probs), onehot)->value.data[0];
  ok = ok && std::abs(ce - std::log(10.0)) <= 1e-9;

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  ag::Tensor x({3, 8});
  for (long i = 0; i < x.size(); ++i) x.data[i] = g(rng);
  double rec = reconstruction_loss(ag::make_param(x), ag::make_param(x))->value.data[0];
  ok = ok && rec == 0.0;

  std::ostringstream d;
  d << "orthogonal=" << ortho << " uniform=" << unif << " ce=" << ce
    << " identity=" << rec;
  return {ok, d.str()};
}

// ---------------------------------------------------------------- criterion 5
// sampled central-difference checks against backprop
double check_params(const std::vector<nn::NamedParam>& params,
                    const std::function<double()>& eval, int samples_per_tensor,
                    std::mt19937_64& pick) {
  double worst = 0;
  for (const auto& p : params) {
    std::uniform_int_distribution<long> u(0, p.var->value.size() - 1);
    for (int s = 0; s < samples_per_tensor; ++s) {
      long i = u(pick);
      double keep = p.var->value.data[i];
      auto central = [&](double h) {
        p.var->value.data[i] = keep + h;
        double up = eval();
        p.var->value.data[i] = keep - h;
        double dn = eval();
        p.var->value.data[i] = keep;
        return (up - dn) / (2 * h);
      };
      // Richardson extrapolation cancels the h^2 truncation term, which
      // otherwise dominates near the batchnorm variance denominators
      auto richardson = [&](double h) { return (4 * central(h / 2) - central(h)) / 3; };
      double fd = richardson(2e-5);
      double ad = p.var->grad.size() ? p.var->grad.data[i] : 0.0;
      if (std::abs(fd) < 1e-7 && std::abs(ad) < 1e-7) continue;
      double err = rel_err(ad, fd);
      // a perturbation that steps across a relu kink biases the difference
      // quotient by O(h); shrinking h separates that from a wrong gradient
      if (err > 5e-4) err = std::min(err, rel_err(ad, richardson(2e-6)));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

Outcome criterion_5() {
  std::mt19937_64 rng(501), pick(502);
  std::normal_distribution<double> g(0, 1);
  std::ostringstream detail;
  double worst = 0;

  {  // infonce_loss on projection inputs
    ag::Tensor a({3, 6}), b({3, 6});
    for (long i = 0; i < a.size(); ++i) a.data[i] = g(rng);
    for (long i = 0; i < b.size(); ++i) b.data[i] = g(rng);
    Var va = ag::make_param(a), vb = ag::make_param(b);
    auto build = [&] {
      return infonce_loss(ag::row_l2_normalize(va), ag::row_l2_normalize(vb));
    };
    Var loss = build();
    ag::backward(loss);
    std::vector<nn::NamedParam> ps{{"a", va}, {"b", vb}};
    worst = std::max(worst, check_params(ps, [&] { return build()->value.data[0]; },
                                         6, pick));
    detail << "infonce=" << worst << " ";
  }
  {  // reconstruction_loss
    ag::Tensor a({3, 6}), b({3, 6});
    for (long i = 0; i < a.size(); ++i) a.data[i] = g(rng);
    for (long i = 0; i < b.size(); ++i) b.data[i] = g(rng);
    Var va = ag::make_param(a), vb = ag::make_param(b);
    auto build = [&] { return reconstruction_loss(va, vb); };
    ag::backward(build());
    std::vector<nn::NamedParam> ps{{"a", va}, {"b", vb}};
    double w = check_params(ps, [&] { return build()->value.data[0]; }, 6, pick);
    worst = std::max(worst, w);
    detail << "recon=" << w << " ";
  }
  {  // L_pre through the desk encoder and projection
    ExperimentConfig cfg = ExperimentConfig::desk_preset();
    std::mt19937_64 init(503);
    SemanticEncoder enc(cfg.preset, 3, init);
    AuxProjection proj(enc.output_dim(), 64, 32, init);
    ag::Tensor imgs({2, 3, 32, 32}), views({2, 3, 32, 32});
    std::uniform_real_distribution<double> u01(0, 1);
    for (long i = 0; i < imgs.size(); ++i) imgs.data[i] = u01(rng);
    for (long i = 0; i < views.size(); ++i) views.data[i] = u01(rng);
    auto build = [&] {
      Var x = enc.forward(ag::constant(imgs), true);
      Var xr = enc.forward(ag::constant(views), true);
      Var lc = infonce_loss(proj.forward(x), proj.forward(xr));
      Var lr = reconstruction_loss(x, xr);
      return pretrain_loss(lc, lr, cfg.hyper.lambda);
    };
    // BatchNorm running stats shift per call; park momentum effects by
    // snapshotting and restoring buffers around every evaluation
    auto buffers = enc.named_buffers();
    std::vector<Eigen::ArrayXd> snap;
    for (auto& b : buffers) snap.push_back(b.tensor->data);
    auto eval = [&] {
      for (size_t i = 0; i < buffers.size(); ++i) buffers[i].tensor->data = snap[i];
      return build()->value.data[0];
    };
    ag::backward(build());
    std::vector<nn::NamedParam> ps = enc.parameters();
    for (auto& p : proj.parameters()) ps.push_back(p);
    double w = check_params(ps, eval, 2, pick);
    worst = std::max(worst, w);
    detail << "L_pre=" << w << " ";
  }
  {  // composite L_app path with a fixed channel draw
    ExperimentConfig cfg = ExperimentConfig::desk_preset();
    std::mt19937_64 init(504), pil(505);
    SlscomPipeline pipe(cfg, init, pil);
    ag::Tensor imgs({2, 3, 32, 32});
    std::uniform_real_distribution<double> u01(0, 1);
    for (long i = 0; i < imgs.size(); ++i) imgs.data[i] = u01(rng);
    ag::Tensor onehot({2, 10});
    onehot.data[3] = 1;
    onehot.data[10 + 7] = 1;

    std::mt19937_64 crng(506), nrng(507);
    SlscomPipeline::ChannelConstants cc;
    pipe.forward(imgs, true, 0.0, crng, nrng, &cc);
    auto build = [&] {
      auto out = pipe.forward(imgs, true, 0.0, crng, nrng, nullptr, &cc);
      return app_loss(mse_loss(out.semantic, out.recovered),
                      ce_loss(out.probs, onehot), cfg.hyper.mu);
    };
    PipelineParams pm(pipe);
    auto buffers = pm.named_buffers();
    std::vector<Eigen::ArrayXd> snap;
    for (auto& b : buffers) snap.push_back(b.tensor->data);
    auto eval = [&] {
      for (size_t i = 0; i < buffers.size(); ++i) buffers[i].tensor->data = snap[i];
      return build()->value.data[0];
    };
    ag::backward(build());
    double w = check_params(pm.parameters(), eval, 2, pick);
    worst = std::max(worst, w);
    detail << "L_app=" << w;
  }
  return {worst < 1e-3, "max relative error per stage: " + detail.str()};
}

// ---------------------------------------------------------------- criterion 6
Outcome criterion_6() {
  std::ostringstream detail;
  bool ok = true;

  {  // dL_pre/dW_ap == -dL_c/dW_ap
    std::mt19937_64 rng(601), init(602);
    AuxProjection proj(32, 48, 16, init);
    std::normal_distribution<double> g(0, 1);
    ag::Tensor x({4, 32}), xr({4, 32});
    for (long i = 0; i < x.size(); ++i) x.data[i] = g(rng);
    for (long i = 0; i < xr.size(); ++i) xr.data[i] = g(rng);

    Var lc1 = infonce_loss(proj.forward(ag::constant(x)), proj.forward(ag::constant(xr)));
    Var lr1 = reconstruction_loss(ag::constant(x), ag::constant(xr));
    ag::backward(pretrain_loss(lc1, lr1, 0.15));
    std::vector<Eigen::ArrayXd> g_pre;
    for (auto& p : proj.parameters()) {
      g_pre.push_back(p.var->grad.data);
      p.var->grad.data.setZero();
    }
    Var lc2 = infonce_loss(proj.forward(ag::constant(x)), proj.forward(ag::constant(xr)));
    ag::backward(lc2);
    double worst = 0;
    size_t k = 0;
    for (auto& p : proj.parameters()) {
      for (long i = 0; i < p.var->grad.size(); ++i) {
        double a = g_pre[k][i], b = -p.var->grad.data[i];
        if (std::abs(a) < 1e-12 && std::abs(b) < 1e-12) continue;
        worst = std::max(worst, rel_err(a, b));
      }
      ++k;
    }
    detail << "W_ap sign check err=" << worst << " ";
    ok = ok && worst <= 1e-6;
  }

  {  // dL_app/dW_sd == mu * dL_ce/dW_sd
    std::mt19937_64 rng(611), init(612);
    SemanticDecoder sd(16, 10, init);
    std::normal_distribution<double> g(0, 1);
    ag::Tensor x({4, 16}), xh({4, 16});
    for (long i = 0; i < x.size(); ++i) x.data[i] = g(rng);
    for (long i = 0; i < xh.size(); ++i) xh.data[i] = g(rng);
    ag::Tensor onehot({4, 10});
    for (int r = 0; r < 4; ++r) onehot.data[r * 10 + r] = 1;
    const double mu = 0.7;

    ag::backward(app_loss(mse_loss(ag::make_param(x), ag::make_param(xh)),
                          ce_loss(sd.forward(ag::make_param(xh)), onehot), mu));
    std::vector<Eigen::ArrayXd> g_app;
    for (auto& p : sd.parameters()) {
      g_app.push_back(p.var->grad.data);
      p.var->grad.data.setZero();
    }
    ag::backward(ce_loss(sd.forward(ag::make_param(xh)), onehot));
    double worst = 0;
    size_t k = 0;
    for (auto& p : sd.parameters()) {
      for (long i = 0; i < p.var->grad.size(); ++i) {
        double a = g_app[k][i], b = mu * p.var->grad.data[i];
        if (std::abs(a) < 1e-12 && std::abs(b) < 1e-12) continue;
        worst = std::max(worst, rel_err(a, b));
      }
      ++k;
    }
    detail << "W_sd scaling err=" << worst << " ";
    ok = ok && worst <= 1e-6;
  }

  {  // frozen-weight modes leave W_se untouched over a full run
    std::string dir = data_dir(600, 120, 31);
    ExperimentConfig cfg = ExperimentConfig::desk_preset();
    cfg.data_dir = dir;
    cfg.mode = TrainMode::slscom_fw;
    cfg.split.unlabeled_count = 128;
    cfg.split.labeled_count = 96;
    cfg.split.val_fraction = 0;
    cfg.hyper.batch_size = 32;
    cfg.hyper.epochs_finetune = 1;
    cfg.seed = 77;

    Dataset train = import_cifar10_binary(dir, true);
    Dataset test = import_cifar10_binary(dir, false);
    std::mt19937_64 split_rng(RngStreams::substream_seed(cfg.seed, "split", 0));
    SplitSet splits = make_splits(train, test, cfg.split, split_rng);

    std::mt19937_64 init(613);
    auto pretrained = std::make_shared<SemanticEncoder>(cfg.preset, 3, init);
    std::uint64_t before = weights_checksum(*pretrained);

    fs::path out = fs::temp_directory_path() / "slscom_acc_c6";
    FinetuneResult res =
        finetune_run(splits.labeled, splits.val, cfg, pretrained, out.string(), 9);
    std::uint64_t after = weights_checksum(*res.pipeline->encoder);
    fs::remove_all(out);
    detail << "frozen W_se checksum " << (before == after ? "unchanged" : "CHANGED");
    ok = ok && before == after;
  }
  return {ok, detail.str()};
}

// ---------------------------------------------------------------- criterion 7
Outcome criterion_7() {
  std::string dir = data_dir(8000, 1000, 17);
  Dataset train = import_cifar10_binary(dir, true);
  Dataset test = import_cifar10_binary(dir, false);

  ExperimentConfig base = ExperimentConfig::desk_preset();
  base.data_dir = dir;
  base.split.unlabeled_count = 5000;
  base.split.val_fraction = 0.1;
  base.hyper.train_snr_db = 0;
  // single-core budget: a small batch, higher learning rate, and a dominant
  // classification term reach the ordering regime in far fewer samples than
  // the full-scale defaults; best-validation snapshots ride out the
  // occasional bad-channel loss spike
  base.hyper.batch_size = 32;
  base.hyper.lr = 1e-3;
  base.hyper.mu = 10;
  base.hyper.epochs_pretrain = 12;
  base.hyper.epochs_finetune = 15;
  base.seed = 4242;

  fs::path out = fs::temp_directory_path() / "slscom_acc_c7";
  fs::create_directories(out);

  const int train_seeds = 3, test_seeds = 3;
  const long m2_values[2] = {500, 2000};
  double mean[2][2] = {{0, 0}, {0, 0}};  // [m2 index][0=slscom,1=rscom]

  for (int r = 0; r < train_seeds; ++r) {
    std::uint64_t run_seed = RngStreams::substream_seed(base.seed, "train", r);

    // one self-supervised encoder per seed, shared across both label budgets
    ExperimentConfig pre_cfg = base;
    pre_cfg.split.labeled_count = 500;
    pre_cfg.hyper.batch_size = 128;  // contrastive loss wants the wide batch
    std::mt19937_64 split_rng(RngStreams::substream_seed(base.seed, "split", 0));
    SplitSet pre_splits = make_splits(train, test, pre_cfg.split, split_rng);
    PretrainResult pre =
        pretrain_run(pre_splits.unlabeled, pre_cfg,
                     (out / ("pre" + std::to_string(r))).string(),
                     RngStreams::substream_seed(run_seed, "pre", 0));

    for (int mi = 0; mi < 2; ++mi) {
      ExperimentConfig cfg = base;
      cfg.split.labeled_count = m2_values[mi];
      std::mt19937_64 srng(RngStreams::substream_seed(base.seed, "split", 0));
      SplitSet splits = make_splits(train, test, cfg.split, srng);

      for (int side = 0; side < 2; ++side) {
        cfg.mode = side == 0 ? TrainMode::slscom : TrainMode::rscom;
        std::string run_dir =
            (out / (std::string(to_string(cfg.mode)) + "_M" +
                    std::to_string(m2_values[mi]) + "_r" + std::to_string(r)))
                .string();
        FinetuneResult ft =
            finetune_run(splits.labeled, splits.val, cfg,
                         side == 0 ? pre.encoder : nullptr, run_dir, run_seed);
        double acc = 0;
        for (int t = 0; t < test_seeds; ++t)
          acc += evaluate_accuracy(
                     *ft.pipeline, splits.test, cfg, 0.0,
                     RngStreams::substream_seed(run_seed, "test", t)) /
                 test_seeds;
        mean[mi][side] += acc / train_seeds;
        std::cout << "  [7] " << to_string(cfg.mode) << " M2=" << m2_values[mi]
                  << " seed " << r << ": top-1 " << acc << std::endl;
      }
    }
  }
  fs::remove_all(out);

  double gap500 = mean[0][0] - mean[0][1];
  double gap2000 = mean[1][0] - mean[1][1];
  std::ostringstream d;
  d << "M2=500 slscom " << mean[0][0] << " vs rscom " << mean[0][1] << " (gap "
    << gap500 << "); M2=2000 slscom " << mean[1][0] << " vs rscom " << mean[1][1]
    << " (gap " << gap2000 << ")";
  bool ok = mean[0][0] > mean[0][1] && mean[1][0] > mean[1][1] && gap500 > gap2000;
  return {ok, d.str()};
}

// ---------------------------------------------------------------- criterion 8
Outcome criterion_8() {
  std::string dir = data_dir(600, 120, 31);
  ExperimentConfig base = ExperimentConfig::desk_preset();
  base.data_dir = dir;
  base.split.unlabeled_count = 128;
  base.split.labeled_count = 96;
  base.split.val_fraction = 0;
  base.hyper.batch_size = 32;
  base.hyper.epochs_pretrain = 1;
  base.hyper.epochs_finetune = 1;
  base.repeats_train = 1;
  base.repeats_test = 1;
  base.test_snr_db = {0};
  base.seed = 88;

  fs::path out = fs::temp_directory_path() / "slscom_acc_c8";
  fs::remove_all(out);

  // a supervised encoder checkpoint for the transfer-weight variants
  Dataset all_train = import_cifar10_binary(dir, true);
  Dataset all_test = import_cifar10_binary(dir, false);
  std::mt19937_64 srng(RngStreams::substream_seed(base.seed, "split", 0));
  SplitSet sp = make_splits(all_train, all_test, base.split, srng);
  std::string sup_ckpt =
      pretrain_supervised_encoder(sp.labeled, base, (out / "sup").string(), 5);

  struct Variant {
    std::string name;
    std::function<void(ExperimentConfig&)> tweak;
  };
  std::vector<Variant> variants{
      {"no_reconstruction", [](ExperimentConfig& c) { c.no_reconstruction = true; }},
      {"no_aux_projection", [](ExperimentConfig& c) { c.no_aux_projection = true; }},
      {"no_color_transforms",
       [](ExperimentConfig& c) { c.no_color_transforms = true; }},
      {"slscom_fw", [](ExperimentConfig& c) { c.mode = TrainMode::slscom_fw; }},
      {"tscom_fw",
       [&](ExperimentConfig& c) {
         c.mode = TrainMode::tscom_fw;
         c.pretrained_weights = sup_ckpt;
       }},
      {"excluded_classes",
       [](ExperimentConfig& c) {
         c.split.excluded_classes = {3, 7};
         c.split.labeled_count = 96;
       }},
  };

  std::ostringstream detail;
  bool ok = true;
  for (const auto& v : variants) {
    ExperimentConfig cfg = base;
    v.tweak(cfg);
    ExperimentSummary s = run_experiment(cfg, (out / v.name).string());
    bool good = !s.aggregate.empty();
    for (const auto& a : s.aggregate)
      good = good && a.mean_top1 >= 0 && a.mean_top1 <= 1 && a.runs == 1;
    std::ifstream f(s.aggregate_csv);
    std::string l1, l2;
    std::getline(f, l1);
    std::getline(f, l2);
    good = good && l1.rfind("# config_fingerprint=", 0) == 0 &&
           l2 == "mode,labels,train_snr,test_snr,mean_top1,std_top1,runs";
    detail << v.name << (good ? " ok; " : " BAD; ");
    ok = ok && good;
  }
  fs::remove_all(out);
  return {ok, detail.str()};
}

// ---------------------------------------------------------------- criterion 9
Outcome criterion_9() {
  bool ok = true;
  std::ostringstream detail;

  {  // null code + noiseless channel == mu-law roundtrip
    std::mt19937_64 rng(901), ch_rng(902), n_rng(903);
    std::normal_distribution<double> g(0, 1);
    std::vector<double> x(128);
    for (auto& v : x) v = g(rng);
    double A = clipping_bound(x);
    OfdmParams ofdm;
    CGrid pilots = make_pilot_grid(ofdm, ch_rng);
    NullCode null;
    auto xq = hybrid_transmit(x, A, null, ofdm, ChannelParams{},
                              std::numeric_limits<double>::infinity(), pilots,
                              ch_rng, n_rng);
    bool same = xq.size() == x.size();
    for (size_t i = 0; i < x.size() && same; ++i)
      same = xq[i] == mulaw_decode(mulaw_encode(x[i], A), A);
    detail << "pipeline identity " << (same ? "exact; " : "BROKEN; ");
    ok = ok && same;
  }
  {  // all 8 QAM codewords roundtrip
    std::vector<std::uint8_t> bits;
    for (int w = 0; w < 8; ++w)
      for (int b = 2; b >= 0; --b) bits.push_back((w >> b) & 1);
    bool same = qam8_demap(qam8_map(bits)) == bits;
    detail << "qam roundtrip " << (same ? "exact; " : "BROKEN; ");
    ok = ok && same;
  }
  {  // transmission-volume accounting at the large-preset operating point:
    // 384 channel symbols per image against digital chains built on the
    // 864x2304 code (1440 info bits per 2304-bit block, 3 bits per symbol)
    const long l_c = 384;
    const long block_n = 2304, block_k = block_n - 864;
    auto blocked_symbols = [&](long payload_bits) {
      long blocks = (payload_bits + block_k - 1) / block_k;
      return blocks * block_n / 3;
    };
    long hybrid = blocked_symbols(8 * 2048);   // 8-bit codes of the semantic vector
    long conventional = blocked_symbols(8 * 3072);  // the raw image payload
    detail << "symbols: semantic " << l_c << ", hybrid " << hybrid << " ("
           << hybrid / l_c << "x), conventional " << conventional << " ("
           << conventional / l_c << "x)";
    ok = ok && hybrid == 24 * l_c && conventional == 36 * l_c;
  }
  return {ok, detail.str()};
}

// --------------------------------------------------------------- criterion 10
Outcome criterion_10() {
  std::string dir = data_dir(600, 120, 31);
  ExperimentConfig cfg = ExperimentConfig::desk_preset();
  cfg.data_dir = dir;
  cfg.mode = TrainMode::rscom;
  cfg.split.unlabeled_count = 128;
  cfg.split.labeled_count = 96;
  cfg.split.val_fraction = 0;
  cfg.hyper.batch_size = 32;
  cfg.hyper.epochs_finetune = 1;
  cfg.repeats_train = 2;
  cfg.repeats_test = 2;
  cfg.test_snr_db = {-4, 0};
  cfg.seed = 99;

  fs::path out = fs::temp_directory_path() / "slscom_acc_c10";
  fs::remove_all(out);
  ExperimentSummary a = run_experiment(cfg, (out / "a").string());
  ExperimentSummary b = run_experiment(cfg, (out / "b").string());

  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  std::string ca = slurp(a.aggregate_csv), cb = slurp(b.aggregate_csv);
  fs::remove_all(out);
  bool ok = !ca.empty() && ca == cb;
  return {ok, ok ? "aggregate CSVs byte-identical across executions"
                 : "aggregate CSVs differ"};
}

const char* kDescriptions[] = {
    "",
    "time-domain OFDM path matches the per-subcarrier frequency product",
    "noise calibration hits the target SNR empirically",
    "JSCC encoder output always meets the power constraint",
    "loss functions reproduce closed-form hand values",
    "analytic gradients match central finite differences",
    "training-algorithm gradient structure and frozen-weight invariants",
    "reduced-scale ordering: pretraining beats from-scratch, most at few labels",
    "ablation harness runs every variant with schema-valid reports",
    "digital baseline identities and transmission-volume accounting",
    "repeat runs with one config and seed are byte-identical",
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  Outcome (*funcs[])() = {nullptr,      criterion_1, criterion_2, criterion_3,
                          criterion_4,  criterion_5, criterion_6, criterion_7,
                          criterion_8,  criterion_9, criterion_10};

  int failures = 0;
  for (int n : which) {
    if (n < 1 || n > 10) {
      std::cerr << "unknown criterion " << n << "\n";
      return 2;
    }
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = funcs[n]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d [%s] %s — %s (%.1fs)\n", n, o.pass ? "PASS" : "FAIL",
                kDescriptions[n], o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}
