#include "slscom/networks.hpp"

#include <cmath>

namespace slscom {

using nn::BatchNorm2d;
using nn::Conv2d;
using nn::ConvTranspose2d;
using nn::Linear;
using nn::NamedBuffer;
using nn::NamedParam;

namespace {

// Residual block; bottleneck (1x1 -> 3x3 -> 1x1, expansion 4) or basic
// (3x3 -> 3x3).  A 1x1 projection joins the skip path when shapes change.
struct ResBlock {
  bool bottleneck;
  std::shared_ptr<Conv2d> c1, c2, c3, proj;
  std::shared_ptr<BatchNorm2d> b1, b2, b3, bproj;

  ResBlock(bool bottleneck, int cin, int width, int stride, std::mt19937_64& rng)
      : bottleneck(bottleneck) {
    int cout = bottleneck ? width * 4 : width;
    if (bottleneck) {
      c1 = std::make_shared<Conv2d>(cin, width, 1, 1, 0, rng);
      c2 = std::make_shared<Conv2d>(width, width, 3, stride, 1, rng);
      c3 = std::make_shared<Conv2d>(width, cout, 1, 1, 0, rng);
      b1 = std::make_shared<BatchNorm2d>(width);
      b2 = std::make_shared<BatchNorm2d>(width);
      b3 = std::make_shared<BatchNorm2d>(cout);
    } else {
      c1 = std::make_shared<Conv2d>(cin, width, 3, stride, 1, rng);
      c2 = std::make_shared<Conv2d>(width, width, 3, 1, 1, rng);
      b1 = std::make_shared<BatchNorm2d>(width);
      b2 = std::make_shared<BatchNorm2d>(width);
    }
    if (stride != 1 || cin != cout) {
      proj = std::make_shared<Conv2d>(cin, cout, 1, stride, 0, rng);
      bproj = std::make_shared<BatchNorm2d>(cout);
    }
  }

  Var forward(const Var& x, bool training) const {
    Var skip = proj ? bproj->forward(proj->forward(x), training) : x;
    Var y = ag::relu(b1->forward(c1->forward(x), training));
    y = b2->forward(c2->forward(y), training);
    if (bottleneck) {
      y = ag::relu(y);
      y = b3->forward(c3->forward(y), training);
    }
    return ag::relu(ag::add(y, skip));
  }

  void collect(const std::string& p, std::vector<NamedParam>& params,
               std::vector<NamedBuffer>& buffers) const {
    c1->collect(p + "c1.", params, buffers);
    b1->collect(p + "b1.", params, buffers);
    c2->collect(p + "c2.", params, buffers);
    b2->collect(p + "b2.", params, buffers);
    if (bottleneck) {
      c3->collect(p + "c3.", params, buffers);
      b3->collect(p + "b3.", params, buffers);
    }
    if (proj) {
      proj->collect(p + "proj.", params, buffers);
      bproj->collect(p + "bproj.", params, buffers);
    }
  }
};

}  // namespace

std::vector<long> jscc_input_grid(long semantic_len) {
  switch (semantic_len) {
    case 2048: return {8, 16, 16};
    case 512: return {2, 16, 16};
    case 128: return {8, 4, 4};
    default: break;
  }
  throw ag::ShapeMismatch("jscc_input_grid: unsupported semantic length " +
                          std::to_string(semantic_len));
}

// ---- SemanticEncoder ----

struct SemanticEncoder::Impl {
  // desk_cnn path
  std::shared_ptr<Conv2d> dc1, dc2, dc3;
  std::shared_ptr<BatchNorm2d> db1, db2, db3;
  std::shared_ptr<Linear> dhead;
  // resnet path
  std::shared_ptr<Conv2d> stem;
  std::shared_ptr<BatchNorm2d> stem_bn;
  std::vector<ResBlock> blocks;
};

SemanticEncoder::SemanticEncoder(EncoderPreset preset, int in_channels,
                                 std::mt19937_64& rng)
    : impl_(std::make_shared<Impl>()), preset_(preset) {
  auto& im = *impl_;
  if (preset == EncoderPreset::desk_cnn) {
    output_dim_ = 128;
    im.dc1 = std::make_shared<Conv2d>(in_channels, 16, 3, 2, 1, rng);
    im.db1 = std::make_shared<BatchNorm2d>(16);
    im.dc2 = std::make_shared<Conv2d>(16, 32, 3, 2, 1, rng);
    im.db2 = std::make_shared<BatchNorm2d>(32);
    im.dc3 = std::make_shared<Conv2d>(32, 64, 3, 2, 1, rng);
    im.db3 = std::make_shared<BatchNorm2d>(64);
    im.dhead = std::make_shared<Linear>(64, 128, rng);
    return;
  }
  bool bottleneck = preset == EncoderPreset::paper_r50;
  output_dim_ = bottleneck ? 2048 : 512;
  const int counts[4] = {3, 4, 6, 3};
  const int widths[4] = {64, 128, 256, 512};
  im.stem = std::make_shared<Conv2d>(in_channels, 64, 7, 2, 3, rng);
  im.stem_bn = std::make_shared<BatchNorm2d>(64);
  int cin = 64;
  for (int stage = 0; stage < 4; ++stage) {
    for (int i = 0; i < counts[stage]; ++i) {
      int stride = (i == 0 && stage > 0) ? 2 : 1;
      im.blocks.emplace_back(bottleneck, cin, widths[stage], stride, rng);
      cin = bottleneck ? widths[stage] * 4 : widths[stage];
    }
  }
}

Var SemanticEncoder::forward(const Var& images, bool training) {
  auto& im = *impl_;
  if (preset_ == EncoderPreset::desk_cnn) {
    Var y = ag::relu(im.db1->forward(im.dc1->forward(images), training));
    y = ag::relu(im.db2->forward(im.dc2->forward(y), training));
    y = ag::relu(im.db3->forward(im.dc3->forward(y), training));
    return im.dhead->forward(nn::global_avg_pool(y));
  }
  Var y = ag::relu(im.stem_bn->forward(im.stem->forward(images), training));
  for (const auto& b : im.blocks) y = b.forward(y, training);
  return nn::global_avg_pool(y);
}

void SemanticEncoder::collect(const std::string& prefix,
                              std::vector<NamedParam>& params,
                              std::vector<NamedBuffer>& buffers) {
  auto& im = *impl_;
  if (preset_ == EncoderPreset::desk_cnn) {
    im.dc1->collect(prefix + "c1.", params, buffers);
    im.db1->collect(prefix + "b1.", params, buffers);
    im.dc2->collect(prefix + "c2.", params, buffers);
    im.db2->collect(prefix + "b2.", params, buffers);
    im.dc3->collect(prefix + "c3.", params, buffers);
    im.db3->collect(prefix + "b3.", params, buffers);
    im.dhead->collect(prefix + "head.", params, buffers);
    return;
  }
  im.stem->collect(prefix + "stem.", params, buffers);
  im.stem_bn->collect(prefix + "stem_bn.", params, buffers);
  for (size_t i = 0; i < im.blocks.size(); ++i)
    im.blocks[i].collect(prefix + "block" + std::to_string(i) + ".", params, buffers);
}

// ---- AuxProjection ----

AuxProjection::AuxProjection(long in_dim, int hidden, int out_dim,
                             std::mt19937_64& rng)
    : out_dim_(out_dim) {
  fc1_ = std::make_shared<Linear>(static_cast<int>(in_dim), hidden, rng);
  fc2_ = std::make_shared<Linear>(hidden, out_dim, rng);
}

Var AuxProjection::forward(const Var& x) {
  return ag::row_l2_normalize(fc2_->forward(ag::relu(fc1_->forward(x))));
}

void AuxProjection::collect(const std::string& prefix, std::vector<NamedParam>& params,
                            std::vector<NamedBuffer>& buffers) {
  fc1_->collect(prefix + "fc1.", params, buffers);
  fc2_->collect(prefix + "fc2.", params, buffers);
}

// ---- JsccEncoder ----

struct JsccEncoder::Impl {
  std::shared_ptr<Conv2d> conv_in, conv_out;
  std::shared_ptr<BatchNorm2d> bn_in;
  std::shared_ptr<ResBlock> res;
  std::shared_ptr<Linear> head;
};

JsccEncoder::JsccEncoder(long semantic_len, long channel_len, const JsccSpec& spec,
                         std::mt19937_64& rng)
    : impl_(std::make_shared<Impl>()),
      semantic_len_(semantic_len),
      channel_len_(channel_len),
      grid_(jscc_input_grid(semantic_len)) {
  auto& im = *impl_;
  int cin = static_cast<int>(grid_[0]);
  int nf = spec.initial_filters, nfc = spec.channel_filters, nsa = spec.sampling_factor;
  im.conv_in = std::make_shared<Conv2d>(cin, nf, 3, nsa, 1, rng);
  im.bn_in = std::make_shared<BatchNorm2d>(nf);
  im.res = std::make_shared<ResBlock>(false, nf, nf, 1, rng);
  im.conv_out = std::make_shared<Conv2d>(nf, nfc, 3, 1, 1, rng);
  long ho = (grid_[1] + 2 - 3) / nsa + 1;
  long wo = (grid_[2] + 2 - 3) / nsa + 1;
  im.head = std::make_shared<Linear>(static_cast<int>(nfc * ho * wo),
                                     static_cast<int>(2 * channel_len), rng);
}

Var JsccEncoder::forward(const Var& x, bool training) {
  auto& im = *impl_;
  long B = x->value.dim(0);
  if (x->value.dim(1) != semantic_len_)
    throw ag::ShapeMismatch("jscc_encode: semantic length mismatch");
  Var y = ag::reshape(x, {B, grid_[0], grid_[1], grid_[2]});
  y = ag::relu(im.bn_in->forward(im.conv_in->forward(y), training));
  y = im.res->forward(y, training);
  y = im.conv_out->forward(y);
  y = ag::reshape(y, {B, y->value.size() / B});
  y = im.head->forward(y);
  // average complex power constraint: ||z||^2 = L_c per image
  return ag::row_l2_normalize(y, std::sqrt(static_cast<double>(channel_len_)));
}

void JsccEncoder::collect(const std::string& prefix, std::vector<NamedParam>& params,
                          std::vector<NamedBuffer>& buffers) {
  auto& im = *impl_;
  im.conv_in->collect(prefix + "conv_in.", params, buffers);
  im.bn_in->collect(prefix + "bn_in.", params, buffers);
  im.res->collect(prefix + "res.", params, buffers);
  im.conv_out->collect(prefix + "conv_out.", params, buffers);
  im.head->collect(prefix + "head.", params, buffers);
}

// ---- JsccDecoder ----

struct JsccDecoder::Impl {
  std::shared_ptr<Conv2d> conv_in, conv_out;
  std::shared_ptr<BatchNorm2d> bn_in, bn_up;
  std::shared_ptr<ResBlock> res;
  std::shared_ptr<ConvTranspose2d> up;
  std::shared_ptr<Linear> head;
  long semantic_len;
};

JsccDecoder::JsccDecoder(long semantic_len, int subcarriers, int total_data_symbols,
                         const JsccSpec& spec, std::mt19937_64& rng)
    : impl_(std::make_shared<Impl>()) {
  auto& im = *impl_;
  im.semantic_len = semantic_len;
  int nf = spec.initial_filters, nfc = spec.channel_filters;
  im.conv_in = std::make_shared<Conv2d>(5, nf, 3, 1, 1, rng);
  im.bn_in = std::make_shared<BatchNorm2d>(nf);
  im.res = std::make_shared<ResBlock>(false, nf, nf, 1, rng);
  im.up = std::make_shared<ConvTranspose2d>(nf, nf, 3, 1, 1, rng);
  im.bn_up = std::make_shared<BatchNorm2d>(nf);
  im.conv_out = std::make_shared<Conv2d>(nf, nfc, 3, 1, 1, rng);
  im.head = std::make_shared<Linear>(
      static_cast<int>(static_cast<long>(nfc) * subcarriers * total_data_symbols),
      static_cast<int>(semantic_len), rng);
}

Var JsccDecoder::forward(const Var& features, bool training) {
  auto& im = *impl_;
  long B = features->value.dim(0);
  Var y = ag::relu(im.bn_in->forward(im.conv_in->forward(features), training));
  y = im.res->forward(y, training);
  y = ag::relu(im.bn_up->forward(im.up->forward(y), training));
  y = im.conv_out->forward(y);
  y = ag::reshape(y, {B, y->value.size() / B});
  return im.head->forward(y);
}

void JsccDecoder::collect(const std::string& prefix, std::vector<NamedParam>& params,
                          std::vector<NamedBuffer>& buffers) {
  auto& im = *impl_;
  im.conv_in->collect(prefix + "conv_in.", params, buffers);
  im.bn_in->collect(prefix + "bn_in.", params, buffers);
  im.res->collect(prefix + "res.", params, buffers);
  im.up->collect(prefix + "up.", params, buffers);
  im.bn_up->collect(prefix + "bn_up.", params, buffers);
  im.conv_out->collect(prefix + "conv_out.", params, buffers);
  im.head->collect(prefix + "head.", params, buffers);
}

// ---- SemanticDecoder ----

SemanticDecoder::SemanticDecoder(long in_dim, int class_count, std::mt19937_64& rng) {
  fc_ = std::make_shared<Linear>(static_cast<int>(in_dim), class_count, rng);
}

Var SemanticDecoder::forward(const Var& x) {
  return ag::softmax_rows(fc_->forward(x));
}

void SemanticDecoder::collect(const std::string& prefix, std::vector<NamedParam>& params,
                              std::vector<NamedBuffer>& buffers) {
  fc_->collect(prefix + "fc.", params, buffers);
}

}  // namespace slscom
