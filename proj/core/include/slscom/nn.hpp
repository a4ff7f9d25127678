#pragma once

#include <random>
#include <string>
#include <vector>

#include "slscom/tensor.hpp"

namespace slscom::nn {

using ag::Tensor;
using ag::Var;

struct NamedParam {
  std::string name;
  Var var;
};

struct NamedBuffer {
  std::string name;
  Tensor* tensor;  // owned by the layer (running statistics etc.)
};

// Base for anything holding trainable parameters and/or running buffers.
class Module {
public:
  virtual ~Module() = default;
  virtual void collect(const std::string& prefix, std::vector<NamedParam>& params,
                       std::vector<NamedBuffer>& buffers) = 0;

  std::vector<NamedParam> parameters() {
    std::vector<NamedParam> p;
    std::vector<NamedBuffer> b;
    collect("", p, b);
    return p;
  }
  std::vector<NamedBuffer> named_buffers() {
    std::vector<NamedParam> p;
    std::vector<NamedBuffer> b;
    collect("", p, b);
    return b;
  }
  long param_count();
};

// ---- functional ops carrying their own backward ----
// x: (B, C, H, W); w: (Cout, Cin*k*k); b: (Cout)
Var conv2d(const Var& x, const Var& w, const Var& b, int k, int stride, int pad);
// transposed convolution; w: (Cin, Cout*k*k); output (B, Cout, Ho, Wo) with
// Ho = (H-1)*stride + k - 2*pad
Var conv2d_transpose(const Var& x, const Var& w, const Var& b, int k, int stride,
                     int pad);
Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
                Tensor& running_var, bool training, double momentum = 0.1,
                double eps = 1e-5);
Var global_avg_pool(const Var& x);  // (B,C,H,W) -> (B,C)

class Linear : public Module {
public:
  Linear(int in, int out, std::mt19937_64& init_rng);
  Var forward(const Var& x) const;  // (B,in) -> (B,out)
  void collect(const std::string& prefix, std::vector<NamedParam>& params,
               std::vector<NamedBuffer>& buffers) override;
  Var weight, bias;
  int in_features, out_features;
};

class Conv2d : public Module {
public:
  Conv2d(int cin, int cout, int k, int stride, int pad, std::mt19937_64& init_rng);
  Var forward(const Var& x) const;
  void collect(const std::string& prefix, std::vector<NamedParam>& params,
               std::vector<NamedBuffer>& buffers) override;
  Var weight, bias;
  int cin, cout, k, stride, pad;
};

class ConvTranspose2d : public Module {
public:
  ConvTranspose2d(int cin, int cout, int k, int stride, int pad,
                  std::mt19937_64& init_rng);
  Var forward(const Var& x) const;
  void collect(const std::string& prefix, std::vector<NamedParam>& params,
               std::vector<NamedBuffer>& buffers) override;
  Var weight, bias;
  int cin, cout, k, stride, pad;
};

class BatchNorm2d : public Module {
public:
  explicit BatchNorm2d(int channels);
  Var forward(const Var& x, bool training) const;
  void collect(const std::string& prefix, std::vector<NamedParam>& params,
               std::vector<NamedBuffer>& buffers) override;
  Var gamma, beta;
  mutable Tensor running_mean, running_var;
  int channels;
};

// Adam with bias correction; one shared step counter.
class Adam {
public:
  Adam(std::vector<NamedParam> params, double lr, double beta1, double beta2,
       double eps = 1e-8);
  void zero_grad();
  void step();
  const std::vector<NamedParam>& params() const { return params_; }

private:
  std::vector<NamedParam> params_;
  std::vector<Eigen::ArrayXd> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Kaiming-uniform init over fan_in, matching the conv/linear constructors.
Tensor kaiming_uniform(std::vector<long> shape, long fan_in, std::mt19937_64& rng);

}  // namespace slscom::nn
