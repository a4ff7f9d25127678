#include "slscom/e2e_train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "slscom/checkpoint.hpp"
#include "slscom/rng.hpp"

namespace slscom {

namespace {

cplx draw_cn(double variance, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
  double re = g(rng);
  double im = g(rng);
  return {re, im};
}

bool frozen_encoder(TrainMode m) {
  return m == TrainMode::slscom_fw || m == TrainMode::tscom_fw;
}

bool needs_pretrained(TrainMode m) {
  return m != TrainMode::rscom;
}

void copy_weights(nn::Module& from, nn::Module& to) {
  auto src_p = from.parameters();
  auto dst_p = to.parameters();
  if (src_p.size() != dst_p.size())
    throw CheckpointError("copy_weights: parameter lists differ");
  for (size_t i = 0; i < src_p.size(); ++i)
    dst_p[i].var->value.data = src_p[i].var->value.data;
  auto src_b = from.named_buffers();
  auto dst_b = to.named_buffers();
  for (size_t i = 0; i < src_b.size(); ++i)
    dst_b[i].tensor->data = src_b[i].tensor->data;
}

std::vector<Eigen::ArrayXd> snapshot_weights(nn::Module& m) {
  std::vector<Eigen::ArrayXd> snap;
  for (auto& p : m.parameters()) snap.push_back(p.var->value.data);
  for (auto& b : m.named_buffers()) snap.push_back(b.tensor->data);
  return snap;
}

void restore_weights(nn::Module& m, const std::vector<Eigen::ArrayXd>& snap) {
  size_t i = 0;
  for (auto& p : m.parameters()) p.var->value.data = snap[i++];
  for (auto& b : m.named_buffers()) b.tensor->data = snap[i++];
}

}  // namespace

void PipelineParams::collect(const std::string& prefix,
                             std::vector<nn::NamedParam>& params,
                             std::vector<nn::NamedBuffer>& buffers) {
  p_.encoder->collect(prefix + "se.", params, buffers);
  p_.jscc_encoder->collect(prefix + "je.", params, buffers);
  p_.jscc_decoder->collect(prefix + "jd.", params, buffers);
  p_.task_decoder->collect(prefix + "sd.", params, buffers);
}

Var mse_loss(const Var& x, const Var& x_hat) {
  if (x->value.shape != x_hat->value.shape)
    throw BatchMismatch("mse_loss: batch shapes differ");
  return ag::mean_row_sqnorm_diff(x, x_hat);
}

Var ce_loss(const Var& probs, const ag::Tensor& onehot) {
  if (probs->value.size() != onehot.size())
    throw BatchMismatch("ce_loss: batch shapes differ");
  return ag::ce_from_probs(probs, onehot);
}

Var app_loss(const Var& mse, const Var& ce, double mu) {
  return ag::add(mse, ag::scale(ce, mu));
}

ag::Tensor one_hot(const Dataset& ds, const std::vector<long>& indices, int classes) {
  long B = static_cast<long>(indices.size());
  ag::Tensor t({B, classes});
  for (long b = 0; b < B; ++b) {
    std::int16_t lab = ds.label(indices[b]);
    if (lab < 0 || lab >= classes)
      throw DataError("one_hot: sample without a valid label");
    t.data[b * classes + lab] = 1.0;
  }
  return t;
}

std::uint64_t weights_checksum(nn::Module& module) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const Eigen::ArrayXd& a) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(a.data());
    for (long i = 0; i < a.size() * static_cast<long>(sizeof(double)); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ull;
    }
  };
  for (auto& p : module.parameters()) mix(p.var->value.data);
  for (auto& b : module.named_buffers()) mix(b.tensor->data);
  return h;
}

SlscomPipeline::SlscomPipeline(const ExperimentConfig& cfg, std::mt19937_64& init_rng,
                               std::mt19937_64& pilot_rng)
    : cfg_(cfg), dims_(derive_dimensions(cfg)) {
  encoder = std::make_shared<SemanticEncoder>(cfg.preset, cfg.image_channels, init_rng);
  jscc_encoder = std::make_shared<JsccEncoder>(dims_.semantic_len, dims_.channel_len,
                                               cfg.jscc, init_rng);
  const int total_syms = cfg.ofdm.data_symbols * dims_.frames_per_image;
  jscc_decoder = std::make_shared<JsccDecoder>(dims_.semantic_len, cfg.ofdm.subcarriers,
                                               total_syms, cfg.jscc, init_rng);
  task_decoder = std::make_shared<SemanticDecoder>(dims_.semantic_len, cfg.class_count,
                                                   init_rng);
  pilots = make_pilot_grid(cfg.ofdm, pilot_rng);

  // z-row gather maps, in decoder plane layout (k major, then frame/symbol).
  const int K = cfg.ofdm.subcarriers, Ns = cfg.ofdm.data_symbols;
  const int F = dims_.frames_per_image;
  gather_re_.resize(static_cast<size_t>(K) * Ns * F);
  gather_im_.resize(gather_re_.size());
  for (int k = 0; k < K; ++k)
    for (int f = 0; f < F; ++f)
      for (int i = 0; i < Ns; ++i) {
        long plane_pos = static_cast<long>(k) * (Ns * F) + (f * Ns + i);
        long slot = static_cast<long>(f) * K * Ns + static_cast<long>(i) * K + k;
        // trailing slots of the last frame repeat the leading symbols
        long c_idx = slot % dims_.channel_len;
        gather_re_[plane_pos] = 2 * c_idx;
        gather_im_[plane_pos] = 2 * c_idx + 1;
      }
}


void SlscomPipeline::draw_channel(ChannelConstants& cc, const ag::Tensor& z_re_val,
                                  const ag::Tensor& z_im_val, double snr_db,
                                  std::mt19937_64& channel_rng,
                                  std::mt19937_64& noise_rng) const {
  const int K = cfg_.ofdm.subcarriers, Ns = cfg_.ofdm.data_symbols;
  const int Np = cfg_.ofdm.pilot_symbols;
  const int F = dims_.frames_per_image;
  const long S = static_cast<long>(K) * Ns * F;
  const long B = z_re_val.dim(0);
  const double snr_lin = std::pow(10.0, snr_db / 10.0);
  ag::Tensor& h_re = cc.h_re;
  ag::Tensor& h_im = cc.h_im;
  ag::Tensor& n_re = cc.n_re;
  ag::Tensor& n_im = cc.n_im;
  ag::Tensor& hhat_re = cc.hhat_re;
  ag::Tensor& hhat_im = cc.hhat_im;
  ag::Tensor& sig_plane = cc.sig;

  for (long b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      ChannelRealization ch = sample_channel(cfg_.channel, K, channel_rng);

      // noise power from the average-SNR definition, using current Z values
      double num = 0;
      for (int i = 0; i < Ns; ++i)
        for (int k = 0; k < K; ++k) {
          long plane_pos = static_cast<long>(k) * (Ns * F) + (f * Ns + i);
          cplx zv{z_re_val.data[b * S + plane_pos],
                  z_im_val.data[b * S + plane_pos]};
          num += std::norm(ch.freq[k] * zv);
        }
      double sigma2 = num / (static_cast<double>(K) * Ns * snr_lin);
      double sigma = std::sqrt(sigma2);

      // pilot transmission + LS estimate (receiver side, constant wrt weights)
      CGrid pilots_hat(K, Np);
      for (int j = 0; j < Np; ++j)
        for (int k = 0; k < K; ++k)
          pilots_hat.at(k, j) =
              ch.freq[k] * pilots.at(k, j) + draw_cn(sigma2, noise_rng);
      cvec freq_hat = ls_estimate(pilots_hat, pilots);

      for (int i = 0; i < Ns; ++i)
        for (int k = 0; k < K; ++k) {
          long p = b * S + static_cast<long>(k) * (Ns * F) + (f * Ns + i);
          h_re.data[p] = ch.freq[k].real();
          h_im.data[p] = ch.freq[k].imag();
          cplx n = sigma > 0 ? draw_cn(sigma2, noise_rng) : cplx{0, 0};
          n_re.data[p] = n.real();
          n_im.data[p] = n.imag();
          hhat_re.data[p] = freq_hat[k].real();
          hhat_im.data[p] = freq_hat[k].imag();
          sig_plane.data[p] = sigma2;
        }
    }
  }
}

SlscomPipeline::ForwardOut SlscomPipeline::forward(const ag::Tensor& images,
                                                   bool training, double snr_db,
                                                   std::mt19937_64& channel_rng,
                                                   std::mt19937_64& noise_rng,
                                                   ChannelConstants* capture,
                                                   const ChannelConstants* fixed) {
  const long B = images.dim(0);
  const int K = cfg_.ofdm.subcarriers, Ns = cfg_.ofdm.data_symbols;
  const int Np = cfg_.ofdm.pilot_symbols;
  const int F = dims_.frames_per_image;
  const long S = static_cast<long>(K) * Ns * F;
  const double snr_lin = std::pow(10.0, snr_db / 10.0);

  // a frozen f_se keeps its batchnorm statistics fixed even while the rest
  // of the pipeline trains
  Var x = encoder->forward(ag::constant(images),
                           training && !frozen_encoder(cfg_.mode));
  Var z = jscc_encoder->forward(x, training);
  Var z_re = ag::gather_cols(z, gather_re_);
  Var z_im = ag::gather_cols(z, gather_im_);

  // per-frame channel realizations and noise, entering the graph as constants
  ChannelConstants cc;
  if (fixed) {
    cc = *fixed;
  } else {
    cc.h_re = ag::Tensor({B, S});
    cc.h_im = ag::Tensor({B, S});
    cc.n_re = ag::Tensor({B, S});
    cc.n_im = ag::Tensor({B, S});
    cc.hhat_re = ag::Tensor({B, S});
    cc.hhat_im = ag::Tensor({B, S});
    cc.sig = ag::Tensor({B, S});
    draw_channel(cc, z_re->value, z_im->value, snr_db, channel_rng, noise_rng);
  }
  if (capture) *capture = cc;
  const ag::Tensor& h_re = cc.h_re;
  const ag::Tensor& h_im = cc.h_im;
  const ag::Tensor& n_re = cc.n_re;
  const ag::Tensor& n_im = cc.n_im;
  const ag::Tensor& hhat_re = cc.hhat_re;
  const ag::Tensor& hhat_im = cc.hhat_im;
  const ag::Tensor& sig_plane = cc.sig;


  // Zhat = H.Z + N elementwise, complex arithmetic on real planes
  Var zhat_re = ag::add_const(
      ag::sub(ag::mul_const(z_re, h_re), ag::mul_const(z_im, h_im)), n_re);
  Var zhat_im = ag::add_const(
      ag::add(ag::mul_const(z_re, h_im), ag::mul_const(z_im, h_re)), n_im);

  Var features = ag::concat_cols({zhat_re, zhat_im, ag::constant(hhat_re),
                                  ag::constant(hhat_im), ag::constant(sig_plane)});
  features = ag::reshape(features, {B, 5, K, static_cast<long>(Ns) * F});

  ForwardOut out;
  out.semantic = x;
  out.recovered = jscc_decoder->forward(features, training);
  out.probs = task_decoder->forward(out.recovered);
  return out;
}

double evaluate_accuracy(SlscomPipeline& pipeline, const Dataset& test,
                         const ExperimentConfig& cfg, double snr_db,
                         std::uint64_t eval_seed) {
  std::mt19937_64 channel_rng(splitmix64(eval_seed ^ 0x6368616e6e656cull));
  std::mt19937_64 noise_rng(splitmix64(eval_seed ^ 0x6e6f697365ull));
  long correct = 0, total = 0;
  long n = test.count();
  for (long start = 0; start < n; start += cfg.hyper.batch_size) {
    long end = std::min(n, start + cfg.hyper.batch_size);
    std::vector<long> idx;
    for (long i = start; i < end; ++i) idx.push_back(i);
    ag::Tensor batch = batch_tensor(test, idx);
    auto out = pipeline.forward(batch, /*training=*/false, snr_db, channel_rng,
                                noise_rng);
    long B = end - start;
    const int C = cfg.class_count;
    for (long b = 0; b < B; ++b) {
      const double* row = out.probs->value.data.data() + b * C;
      int arg = 0;
      for (int c = 1; c < C; ++c)
        if (row[c] > row[arg]) arg = c;  // ties keep the lowest class index
      if (arg == test.label(idx[b])) ++correct;
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / total : 0.0;
}

FinetuneResult finetune_run(const Dataset& labeled, const Dataset& val,
                            const ExperimentConfig& cfg,
                            std::shared_ptr<SemanticEncoder> pretrained,
                            const std::string& out_dir, std::uint64_t run_seed) {
  std::filesystem::create_directories(out_dir);
  RngStreams streams(run_seed);
  std::mt19937_64 pilot_rng(RngStreams::substream_seed(cfg.seed, "pilot", 0));

  auto pipeline = std::make_shared<SlscomPipeline>(cfg, streams.init(), pilot_rng);

  if (cfg.mode == TrainMode::rscom) {
    if (pretrained || !cfg.pretrained_weights.empty())
      throw ConfigError("rscom trains from scratch; no pretrained encoder allowed");
  } else if (needs_pretrained(cfg.mode)) {
    if (pretrained) {
      copy_weights(*pretrained, *pipeline->encoder);
    } else if (!cfg.pretrained_weights.empty()) {
      load_checkpoint(cfg.pretrained_weights, *pipeline->encoder);
    } else {
      throw MissingCheckpoint(std::string("mode ") + to_string(cfg.mode) +
                              " requires pretrained encoder weights");
    }
  }

  const bool frozen = frozen_encoder(cfg.mode);
  std::vector<nn::NamedParam> params;
  if (!frozen)
    for (auto& p : pipeline->encoder->parameters()) params.push_back(p);
  for (auto& p : pipeline->jscc_encoder->parameters()) params.push_back(p);
  for (auto& p : pipeline->jscc_decoder->parameters()) params.push_back(p);
  // W_sd's lr-eta update on L_app equals the mu*eta update on L_ce exactly
  for (auto& p : pipeline->task_decoder->parameters()) params.push_back(p);
  nn::Adam opt(params, cfg.hyper.lr, cfg.hyper.beta1, cfg.hyper.beta2);

  FinetuneResult result;
  result.pipeline = pipeline;
  result.trace_path = out_dir + "/finetune_trace.csv";
  std::ofstream trace(result.trace_path);
  trace << "step,L_app,L_mse,L_ce,train_acc\n";

  PipelineParams pm(*pipeline);
  std::vector<Eigen::ArrayXd> best_snapshot;
  long step = 0;

  for (int epoch = 0; epoch < cfg.hyper.epochs_finetune; ++epoch) {
    auto batches = minibatches(labeled.count(), cfg.hyper.batch_size, streams.data());
    for (const auto& idx : batches) {
      ag::Tensor batch = batch_tensor(labeled, idx);
      ag::Tensor labels = one_hot(labeled, idx, cfg.class_count);

      // frozen f_se also keeps its BN statistics fixed
      auto out = pipeline->forward(batch, /*training=*/true, cfg.hyper.train_snr_db,
                                   streams.channel(), streams.noise());
      Var l_mse = mse_loss(out.semantic, out.recovered);
      Var l_ce = ce_loss(out.probs, labels);
      Var l_app = app_loss(l_mse, l_ce, cfg.hyper.mu);

      double la = l_app->value.data[0];
      if (!std::isfinite(la))
        throw NaNLoss("finetune_run: non-finite loss at step " + std::to_string(step));

      long B = static_cast<long>(idx.size());
      long correct = 0;
      for (long b = 0; b < B; ++b) {
        const double* row = out.probs->value.data.data() + b * cfg.class_count;
        int arg = 0;
        for (int c = 1; c < cfg.class_count; ++c)
          if (row[c] > row[arg]) arg = c;
        if (arg == labeled.label(idx[b])) ++correct;
      }
      double acc = static_cast<double>(correct) / B;

      result.trace.push_back({step, la, l_mse->value.data[0], l_ce->value.data[0], acc});
      trace << step << "," << la << "," << l_mse->value.data[0] << ","
            << l_ce->value.data[0] << "," << acc << "\n";

      opt.zero_grad();
      ag::backward(l_app);
      opt.step();
      ++step;
    }

    if (val.count() > 0) {
      double vacc = evaluate_accuracy(*pipeline, val, cfg, cfg.hyper.train_snr_db,
                                      RngStreams::substream_seed(run_seed, "val", epoch));
      if (vacc > result.best_val_acc || result.best_epoch < 0) {
        result.best_val_acc = vacc;
        result.best_epoch = epoch;
        best_snapshot = snapshot_weights(pm);
      }
    }
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      CheckpointMeta meta{"pipeline", to_string(cfg.preset), cfg.fingerprint()};
      std::string path = out_dir + "/pipeline_epoch" + std::to_string(epoch + 1) + ".ckpt";
      save_checkpoint(path, meta, pm);
      result.checkpoint_paths.push_back(path);
    }
  }

  if (!best_snapshot.empty()) restore_weights(pm, best_snapshot);

  CheckpointMeta meta{"pipeline", to_string(cfg.preset), cfg.fingerprint()};
  std::string final_path = out_dir + "/pipeline_final.ckpt";
  save_checkpoint(final_path, meta, pm);
  result.checkpoint_paths.push_back(final_path);

  CheckpointMeta enc_meta{"semantic_encoder", to_string(cfg.preset), cfg.fingerprint()};
  save_checkpoint(out_dir + "/encoder_final.ckpt", enc_meta, *pipeline->encoder);
  return result;
}

std::string pretrain_supervised_encoder(const Dataset& labeled,
                                        const ExperimentConfig& cfg,
                                        const std::string& out_dir,
                                        std::uint64_t run_seed) {
  std::filesystem::create_directories(out_dir);
  RngStreams streams(run_seed);
  auto encoder = std::make_shared<SemanticEncoder>(cfg.preset, cfg.image_channels,
                                                   streams.init());
  SemanticDecoder head(encoder->output_dim(), cfg.class_count, streams.init());

  std::vector<nn::NamedParam> params = encoder->parameters();
  for (auto& p : head.parameters()) params.push_back(p);
  nn::Adam opt(params, cfg.hyper.lr, cfg.hyper.beta1, cfg.hyper.beta2);

  for (int epoch = 0; epoch < cfg.hyper.epochs_finetune; ++epoch) {
    auto batches = minibatches(labeled.count(), cfg.hyper.batch_size, streams.data());
    for (const auto& idx : batches) {
      ag::Tensor batch = batch_tensor(labeled, idx);
      ag::Tensor labels = one_hot(labeled, idx, cfg.class_count);
      Var x = encoder->forward(ag::constant(batch), /*training=*/true);
      Var probs = head.forward(x);
      Var loss = ce_loss(probs, labels);
      if (!std::isfinite(loss->value.data[0]))
        throw NaNLoss("pretrain_supervised_encoder: non-finite loss");
      opt.zero_grad();
      ag::backward(loss);
      opt.step();
    }
  }

  std::string path = out_dir + "/encoder_supervised.ckpt";
  CheckpointMeta meta{"semantic_encoder", to_string(cfg.preset), cfg.fingerprint()};
  save_checkpoint(path, meta, *encoder);
  return path;
}

}  // namespace slscom
