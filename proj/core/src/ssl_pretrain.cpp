#include "slscom/ssl_pretrain.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "slscom/augment.hpp"
#include "slscom/checkpoint.hpp"
#include "slscom/rng.hpp"

namespace slscom {

Var infonce_loss(const Var& proj, const Var& proj_r) {
  if (proj->value.shape != proj_r->value.shape)
    throw BatchMismatch("infonce_loss: batch shapes differ");
  return ag::infonce_from_scores(ag::matmul(proj, proj_r, false, true));
}

Var reconstruction_loss(const Var& x, const Var& x_r) {
  if (x->value.shape != x_r->value.shape)
    throw BatchMismatch("reconstruction_loss: batch shapes differ");
  return ag::scale(ag::mean_row_sqnorm_diff(x, x_r), -1.0);
}

Var pretrain_loss(const Var& contrastive, const Var& reconstruction, double lambda) {
  return ag::scale(ag::add(ag::scale(reconstruction, lambda), contrastive), -1.0);
}

ag::Tensor batch_tensor(const Dataset& ds, const std::vector<long>& indices) {
  long B = static_cast<long>(indices.size());
  long len = ds.sample_len();
  ag::Tensor t({B, ds.channels, ds.height, ds.width});
  for (long b = 0; b < B; ++b) {
    const float* s = ds.sample(indices[b]);
    double* dst = t.data.data() + b * len;
    for (long i = 0; i < len; ++i) dst[i] = s[i];
  }
  return t;
}

PretrainResult pretrain_run(const Dataset& unlabeled, const ExperimentConfig& cfg,
                            const std::string& out_dir, std::uint64_t run_seed) {
  if (unlabeled.count() == 0) throw DataError("pretrain_run: empty unlabeled split");
  std::filesystem::create_directories(out_dir);

  RngStreams streams(run_seed);
  auto encoder = std::make_shared<SemanticEncoder>(cfg.preset, cfg.image_channels,
                                                   streams.init());
  AuxProjection projection(encoder->output_dim(), 512, cfg.projection_dim,
                           streams.init());

  std::vector<nn::NamedParam> params = encoder->parameters();
  if (!cfg.no_aux_projection)
    for (auto& p : projection.parameters()) params.push_back(p);
  nn::Adam opt(params, cfg.hyper.lr, cfg.hyper.beta1, cfg.hyper.beta2);

  AugmentPolicy policy = cfg.augment;
  if (cfg.no_color_transforms) policy.color_enabled = false;

  PretrainResult result;
  result.encoder = encoder;
  result.trace_path = out_dir + "/pretrain_trace.csv";
  std::ofstream trace(result.trace_path);
  trace << "step,L_pre,L_c,L_r\n";

  long step = 0;
  for (int epoch = 0; epoch < cfg.hyper.epochs_pretrain; ++epoch) {
    auto batches = minibatches(unlabeled.count(), cfg.hyper.batch_size, streams.data());
    for (const auto& idx : batches) {
      ag::Tensor anchor = batch_tensor(unlabeled, idx);
      ag::Tensor views = construct_views(anchor, policy, streams.augment());

      Var x = encoder->forward(ag::constant(anchor), /*training=*/true);
      Var x_r = encoder->forward(ag::constant(views), /*training=*/true);

      Var px, pr;
      if (cfg.no_aux_projection) {
        // ablation: InfoNCE directly on unit-normalized semantic vectors
        px = ag::row_l2_normalize(x);
        pr = ag::row_l2_normalize(x_r);
      } else {
        px = projection.forward(x);
        pr = projection.forward(x_r);
      }

      Var l_c = infonce_loss(px, pr);
      Var l_r = reconstruction_loss(x, x_r);
      double lambda = cfg.no_reconstruction ? 0.0 : cfg.hyper.lambda;
      Var l_pre = pretrain_loss(l_c, l_r, lambda);

      double lp = l_pre->value.data[0];
      if (!std::isfinite(lp))
        throw NaNLoss("pretrain_run: non-finite loss at step " + std::to_string(step));
      result.trace.push_back({step, lp, l_c->value.data[0], l_r->value.data[0]});
      trace << step << "," << lp << "," << l_c->value.data[0] << ","
            << l_r->value.data[0] << "\n";

      opt.zero_grad();
      ag::backward(l_pre);
      opt.step();
      ++step;
    }
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      CheckpointMeta meta{"semantic_encoder", to_string(cfg.preset), cfg.fingerprint()};
      save_checkpoint(out_dir + "/encoder_epoch" + std::to_string(epoch + 1) + ".ckpt",
                      meta, *encoder);
    }
  }

  result.checkpoint_path = out_dir + "/encoder_pretrained.ckpt";
  CheckpointMeta meta{"semantic_encoder", to_string(cfg.preset), cfg.fingerprint()};
  save_checkpoint(result.checkpoint_path, meta, *encoder);
  return result;
}

}  // namespace slscom
