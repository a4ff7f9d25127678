#pragma once

#include <memory>
#include <string>
#include <vector>

#include "slscom/config.hpp"
#include "slscom/dataio.hpp"
#include "slscom/networks.hpp"

namespace slscom {

struct BatchMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NaNLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// InfoNCE over unit-norm projections with inner-product similarity;
// L_c <= 0, maximized during training.
Var infonce_loss(const Var& proj, const Var& proj_r);

// L_r = -(1/N_b) sum_i ||x_i - x_i_r||^2; maximized during training.
Var reconstruction_loss(const Var& x, const Var& x_r);

// L_pre = -(lambda * L_r + L_c); minimized.
Var pretrain_loss(const Var& contrastive, const Var& reconstruction, double lambda);

struct PretrainTraceRow {
  long step;
  double l_pre, l_c, l_r;
};

struct PretrainResult {
  std::shared_ptr<SemanticEncoder> encoder;  // W_se^p; the projection is discarded
  std::vector<PretrainTraceRow> trace;
  std::string checkpoint_path;
  std::string trace_path;
};

// Local self-supervised pre-training of f_se (+ f_ap).  Channel-free and
// label-free.  Writes the encoder checkpoint and a loss-trace CSV
// (step,L_pre,L_c,L_r) under out_dir.
PretrainResult pretrain_run(const Dataset& unlabeled, const ExperimentConfig& cfg,
                            const std::string& out_dir, std::uint64_t run_seed);

// Builds a (B,C,H,W) double tensor from dataset rows.
ag::Tensor batch_tensor(const Dataset& ds, const std::vector<long>& indices);

}  // namespace slscom
