#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slscom/channel.hpp"
#include "slscom/config.hpp"
#include "slscom/dataio.hpp"
#include "slscom/networks.hpp"
#include "slscom/ssl_pretrain.hpp"

namespace slscom {

// (1/N_b) sum_i ||x_i - xhat_i||^2 (per-sample squared norm, batch-averaged).
Var mse_loss(const Var& x, const Var& x_hat);
// -(1/N_b) sum_i t_i . log y_i over probability rows, log floored at 1e-12.
Var ce_loss(const Var& probs, const ag::Tensor& onehot);
// L_app = L_mse + mu * L_ce.
Var app_loss(const Var& mse, const Var& ce, double mu);

ag::Tensor one_hot(const Dataset& ds, const std::vector<long>& indices, int classes);

std::uint64_t weights_checksum(nn::Module& module);

// The full transceiver: f_se -> f_je -> OFDM frequency-domain channel ->
// f_jd -> f_sd, with the channel entering the graph as per-frame constants
// (reparameterized noise; gradients flow through Z only).
class SlscomPipeline {
public:
  SlscomPipeline(const ExperimentConfig& cfg, std::mt19937_64& init_rng,
                 std::mt19937_64& pilot_rng);

  struct ForwardOut {
    Var semantic;   // x  (B, L_s)
    Var recovered;  // xhat (B, L_s)
    Var probs;      // y (B, N_cls)
  };

  // Everything the channel contributes to one forward pass, as plane-layout
  // (B, S) constants.  Reusable to re-run a pass with an identical channel.
  struct ChannelConstants {
    ag::Tensor h_re, h_im, n_re, n_im, hhat_re, hhat_im, sig;
  };

  // One fresh channel realization per frame per image, drawn from channel_rng;
  // noise from noise_rng; snr_db sets the per-frame calibrated noise power.
  // `capture` stores the drawn constants; `fixed` replays a previous draw
  // instead of consuming the rngs.
  ForwardOut forward(const ag::Tensor& images, bool training, double snr_db,
                     std::mt19937_64& channel_rng, std::mt19937_64& noise_rng,
                     ChannelConstants* capture = nullptr,
                     const ChannelConstants* fixed = nullptr);

  std::shared_ptr<SemanticEncoder> encoder;
  std::shared_ptr<JsccEncoder> jscc_encoder;
  std::shared_ptr<JsccDecoder> jscc_decoder;
  std::shared_ptr<SemanticDecoder> task_decoder;
  CGrid pilots;

  const DerivedDims& dims() const { return dims_; }

private:
  void draw_channel(ChannelConstants& cc, const ag::Tensor& z_re_val,
                    const ag::Tensor& z_im_val, double snr_db,
                    std::mt19937_64& channel_rng, std::mt19937_64& noise_rng) const;

  ExperimentConfig cfg_;
  DerivedDims dims_;
  std::vector<long> gather_re_, gather_im_;  // z-row index maps, plane layout
};

// Parameter/buffer view over all four pipeline components, for
// checkpointing the trained transceiver as one archive.
class PipelineParams : public nn::Module {
public:
  explicit PipelineParams(SlscomPipeline& p) : p_(p) {}
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& params,
               std::vector<nn::NamedBuffer>& buffers) override;

private:
  SlscomPipeline& p_;
};

struct FinetuneTraceRow {
  long step;
  double l_app, l_mse, l_ce, train_acc;
};

struct FinetuneResult {
  std::shared_ptr<SlscomPipeline> pipeline;
  std::vector<FinetuneTraceRow> trace;
  double best_val_acc = 0.0;
  int best_epoch = -1;
  std::string trace_path;
  std::vector<std::string> checkpoint_paths;
};

// Algorithm-2 style end-to-end supervised training in any of the baseline
// modes.  slscom*/tscom* need pretrained encoder weights (path in
// cfg.pretrained_weights or an in-memory encoder); rscom forbids them.
// In *_fw modes W_se receives no update.  Validation selects the best epoch.
FinetuneResult finetune_run(const Dataset& labeled, const Dataset& val,
                            const ExperimentConfig& cfg,
                            std::shared_ptr<SemanticEncoder> pretrained,
                            const std::string& out_dir, std::uint64_t run_seed);

// Top-1 accuracy of the pipeline over a dataset at one test SNR.
double evaluate_accuracy(SlscomPipeline& pipeline, const Dataset& test,
                         const ExperimentConfig& cfg, double snr_db,
                         std::uint64_t eval_seed);

// Supervised encoder pretraining on (typically disjoint) labeled data; the
// desk-scale stand-in for transfer-learning weights.  Writes an encoder
// checkpoint compatible with tscom modes.
std::string pretrain_supervised_encoder(const Dataset& labeled,
                                        const ExperimentConfig& cfg,
                                        const std::string& out_dir,
                                        std::uint64_t run_seed);

}  // namespace slscom
