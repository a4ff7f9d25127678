#pragma once

#include <memory>
#include <random>
#include <vector>

#include "slscom/config.hpp"
#include "slscom/nn.hpp"

namespace slscom {

using ag::Tensor;
using ag::Var;

// Semantic encoder f_se: image batch (B,C,H,W) -> semantic vectors (B, L_s).
// Presets: desk_cnn -> 128, paper_r34 -> 512 (ResNet-34 torso),
// paper_r50 -> 2048 (ResNet-50 torso); paper presets drop the final FC layer.
class SemanticEncoder : public nn::Module {
public:
  SemanticEncoder(EncoderPreset preset, int in_channels, std::mt19937_64& init_rng);
  Var forward(const Var& images, bool training);
  long output_dim() const { return output_dim_; }
  EncoderPreset preset() const { return preset_; }
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& params,
               std::vector<nn::NamedBuffer>& buffers) override;

private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  EncoderPreset preset_;
  long output_dim_;
};

// Auxiliary projection f_ap: (B, L_s) -> unit-norm rows (B, d_ap).
// Discarded after pre-training.
class AuxProjection : public nn::Module {
public:
  AuxProjection(long in_dim, int hidden, int out_dim, std::mt19937_64& init_rng);
  Var forward(const Var& x);
  int output_dim() const { return out_dim_; }
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& params,
               std::vector<nn::NamedBuffer>& buffers) override;

private:
  std::shared_ptr<nn::Linear> fc1_, fc2_;
  int out_dim_;
};

// JSCC encoder f_je: (B, L_s) -> (B, 2*L_c) real pairs (re, im interleaved),
// power-normalized per image so ||z||^2 / L_c == 1.
class JsccEncoder : public nn::Module {
public:
  JsccEncoder(long semantic_len, long channel_len, const JsccSpec& spec,
              std::mt19937_64& init_rng);
  Var forward(const Var& x, bool training);
  long channel_len() const { return channel_len_; }
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& params,
               std::vector<nn::NamedBuffer>& buffers) override;

private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  long semantic_len_, channel_len_;
  std::vector<long> grid_;  // (C,H,W) reshape of the semantic vector
};

// JSCC decoder f_jd: feature grid (B, 5, K, N_tot) -> (B, L_s).
// Input planes: Re/Im of the received data grid, Re/Im of the LS channel
// estimate broadcast over data symbols, and a constant noise-variance plane.
class JsccDecoder : public nn::Module {
public:
  JsccDecoder(long semantic_len, int subcarriers, int total_data_symbols,
              const JsccSpec& spec, std::mt19937_64& init_rng);
  Var forward(const Var& features, bool training);
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& params,
               std::vector<nn::NamedBuffer>& buffers) override;

private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Semantic decoder f_sd: (B, L_s) -> class probabilities (B, N_cls).
class SemanticDecoder : public nn::Module {
public:
  SemanticDecoder(long in_dim, int class_count, std::mt19937_64& init_rng);
  Var forward(const Var& x);  // softmax rows
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& params,
               std::vector<nn::NamedBuffer>& buffers) override;

private:
  std::shared_ptr<nn::Linear> fc_;
};

// The grid shape the JSCC encoder reshapes the semantic vector into.
std::vector<long> jscc_input_grid(long semantic_len);

}  // namespace slscom
