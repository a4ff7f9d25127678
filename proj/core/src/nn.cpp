#include "slscom/nn.hpp"

#include <cmath>

namespace slscom::nn {

using ag::MatRM;

namespace {

struct ConvDims {
  long B, C, H, W, Ho, Wo;
};

ConvDims conv_dims(const Var& x, int k, int stride, int pad) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw ag::ShapeMismatch("conv: input must be (B,C,H,W)");
  ConvDims d;
  d.B = s[0];
  d.C = s[1];
  d.H = s[2];
  d.W = s[3];
  d.Ho = (d.H + 2 * pad - k) / stride + 1;
  d.Wo = (d.W + 2 * pad - k) / stride + 1;
  if (d.Ho < 1 || d.Wo < 1) throw ag::ShapeMismatch("conv: kernel larger than input");
  return d;
}

// (B,C,H,W) -> (B*Ho*Wo, C*k*k)
MatRM im2col(const Tensor& x, const ConvDims& d, int k, int stride, int pad) {
  MatRM col(d.B * d.Ho * d.Wo, d.C * k * k);
  const double* src = x.data.data();
#pragma omp parallel for
  for (long b = 0; b < d.B; ++b) {
    for (long oh = 0; oh < d.Ho; ++oh)
      for (long ow = 0; ow < d.Wo; ++ow) {
        long row = (b * d.Ho + oh) * d.Wo + ow;
        double* dst = col.data() + row * col.cols();
        for (long c = 0; c < d.C; ++c) {
          const double* plane = src + (b * d.C + c) * d.H * d.W;
          for (int kh = 0; kh < k; ++kh) {
            long ih = oh * stride + kh - pad;
            for (int kw = 0; kw < k; ++kw) {
              long iw = ow * stride + kw - pad;
              *dst++ = (ih >= 0 && ih < d.H && iw >= 0 && iw < d.W)
                           ? plane[ih * d.W + iw]
                           : 0.0;
            }
          }
        }
      }
  }
  return col;
}

// adjoint of im2col
void col2im_add(const MatRM& col, Tensor& x, const ConvDims& d, int k, int stride,
                int pad) {
  double* dst = x.data.data();
#pragma omp parallel for
  for (long b = 0; b < d.B; ++b) {
    for (long oh = 0; oh < d.Ho; ++oh)
      for (long ow = 0; ow < d.Wo; ++ow) {
        long row = (b * d.Ho + oh) * d.Wo + ow;
        const double* src = col.data() + row * col.cols();
        for (long c = 0; c < d.C; ++c) {
          double* plane = dst + (b * d.C + c) * d.H * d.W;
          for (int kh = 0; kh < k; ++kh) {
            long ih = oh * stride + kh - pad;
            for (int kw = 0; kw < k; ++kw) {
              long iw = ow * stride + kw - pad;
              double v = *src++;
              if (ih >= 0 && ih < d.H && iw >= 0 && iw < d.W)
                plane[ih * d.W + iw] += v;
            }
          }
        }
      }
  }
}

Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(ag::Node&)> backprop) {
  auto n = std::make_shared<ag::Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int k, int stride, int pad) {
  ConvDims d = conv_dims(x, k, stride, pad);
  long Cout = w->value.dim(0);
  if (w->value.dim(1) != d.C * k * k) throw ag::ShapeMismatch("conv2d: weight shape");
  if (b->value.size() != Cout) throw ag::ShapeMismatch("conv2d: bias shape");

  MatRM col = im2col(x->value, d, k, stride, pad);
  auto W = w->value.mat(Cout, d.C * k * k);
  MatRM out_mat = col * W.transpose();  // (B*Ho*Wo, Cout)
  out_mat.rowwise() += Eigen::RowVectorXd::Map(b->value.data.data(), Cout);

  Tensor out({d.B, Cout, d.Ho, d.Wo});
  double* dst = out.data.data();
  for (long bb = 0; bb < d.B; ++bb)
    for (long co = 0; co < Cout; ++co)
      for (long p = 0; p < d.Ho * d.Wo; ++p)
        dst[(bb * Cout + co) * d.Ho * d.Wo + p] = out_mat((bb * d.Ho * d.Wo) + p, co);

  return make_op(std::move(out), {x, w, b}, [=](ag::Node& n) {
    auto& xv = n.parents[0];
    auto& wv = n.parents[1];
    auto& bv = n.parents[2];
    // reassemble dOut as (B*Ho*Wo, Cout)
    MatRM dout(d.B * d.Ho * d.Wo, Cout);
    const double* g = n.grad.data.data();
    for (long bb = 0; bb < d.B; ++bb)
      for (long co = 0; co < Cout; ++co)
        for (long p = 0; p < d.Ho * d.Wo; ++p)
          dout((bb * d.Ho * d.Wo) + p, co) = g[(bb * Cout + co) * d.Ho * d.Wo + p];

    auto W = wv->value.mat(Cout, d.C * k * k);
    if (wv->requires_grad || xv->requires_grad) {
      MatRM col = im2col(xv->value, d, k, stride, pad);
      if (wv->requires_grad) {
        wv->ensure_grad();
        wv->grad.mat(Cout, d.C * k * k) += dout.transpose() * col;
      }
      if (xv->requires_grad) {
        xv->ensure_grad();
        MatRM dcol = dout * W;
        col2im_add(dcol, xv->grad, d, k, stride, pad);
      }
    }
    if (bv->requires_grad) {
      bv->ensure_grad();
      Eigen::RowVectorXd::Map(bv->grad.data.data(), Cout) += dout.colwise().sum();
    }
  });
}

Var conv2d_transpose(const Var& x, const Var& w, const Var& b, int k, int stride,
                     int pad) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw ag::ShapeMismatch("conv2d_transpose: input must be 4-D");
  long B = s[0], Cin = s[1], H = s[2], W_ = s[3];
  if (w->value.dim(0) != Cin) throw ag::ShapeMismatch("conv2d_transpose: weight shape");
  long Cout = w->value.dim(1) / (k * k);
  if (Cout * k * k != w->value.dim(1))
    throw ag::ShapeMismatch("conv2d_transpose: weight shape");
  long Ho = (H - 1) * stride + k - 2 * pad;
  long Wo = (W_ - 1) * stride + k - 2 * pad;
  if (Ho < 1 || Wo < 1) throw ag::ShapeMismatch("conv2d_transpose: output underflow");
  if (b->value.size() != Cout) throw ag::ShapeMismatch("conv2d_transpose: bias shape");

  // gather x as (B*H*W, Cin)
  MatRM xmat(B * H * W_, Cin);
  const double* src = x->value.data.data();
  for (long bb = 0; bb < B; ++bb)
    for (long c = 0; c < Cin; ++c)
      for (long p = 0; p < H * W_; ++p)
        xmat(bb * H * W_ + p, c) = src[(bb * Cin + c) * H * W_ + p];

  auto Wm = w->value.mat(Cin, Cout * k * k);
  MatRM cols = xmat * Wm;  // (B*H*W, Cout*k*k)

  // scatter into the output grid (the adjoint dims of a conv over the output)
  ConvDims d{B, Cout, Ho, Wo, H, W_};
  Tensor out({B, Cout, Ho, Wo});
  col2im_add(cols, out, d, k, stride, pad);
  double* dst = out.data.data();
  for (long bb = 0; bb < B; ++bb)
    for (long co = 0; co < Cout; ++co)
      for (long p = 0; p < Ho * Wo; ++p)
        dst[(bb * Cout + co) * Ho * Wo + p] += b->value.data[co];

  return make_op(std::move(out), {x, w, b}, [=](ag::Node& n) {
    auto& xv = n.parents[0];
    auto& wv = n.parents[1];
    auto& bv = n.parents[2];
    MatRM dcols = im2col(n.grad, d, k, stride, pad);  // (B*H*W, Cout*k*k)
    auto Wm = wv->value.mat(Cin, Cout * k * k);
    if (xv->requires_grad) {
      xv->ensure_grad();
      MatRM dxmat = dcols * Wm.transpose();
      double* gx = xv->grad.data.data();
      for (long bb = 0; bb < B; ++bb)
        for (long c = 0; c < Cin; ++c)
          for (long p = 0; p < H * W_; ++p)
            gx[(bb * Cin + c) * H * W_ + p] += dxmat(bb * H * W_ + p, c);
    }
    if (wv->requires_grad) {
      wv->ensure_grad();
      MatRM xmat(B * H * W_, Cin);
      const double* src = xv->value.data.data();
      for (long bb = 0; bb < B; ++bb)
        for (long c = 0; c < Cin; ++c)
          for (long p = 0; p < H * W_; ++p)
            xmat(bb * H * W_ + p, c) = src[(bb * Cin + c) * H * W_ + p];
      wv->grad.mat(Cin, Cout * k * k) += xmat.transpose() * dcols;
    }
    if (bv->requires_grad) {
      bv->ensure_grad();
      const double* g = n.grad.data.data();
      for (long bb = 0; bb < B; ++bb)
        for (long co = 0; co < Cout; ++co) {
          double sum = 0;
          for (long p = 0; p < Ho * Wo; ++p) sum += g[(bb * Cout + co) * Ho * Wo + p];
          bv->grad.data[co] += sum;
        }
    }
  });
}

Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
                Tensor& running_var, bool training, double momentum, double eps) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw ag::ShapeMismatch("batchnorm2d: input must be 4-D");
  long B = s[0], C = s[1], HW = s[2] * s[3];
  if (gamma->value.size() != C || beta->value.size() != C ||
      running_mean.size() != C || running_var.size() != C)
    throw ag::ShapeMismatch("batchnorm2d: channel mismatch");

  Eigen::ArrayXd mean(C), var(C);
  if (training) {
    for (long c = 0; c < C; ++c) {
      double m = 0, v = 0;
      for (long b = 0; b < B; ++b) {
        const double* p = x->value.data.data() + (b * C + c) * HW;
        for (long i = 0; i < HW; ++i) m += p[i];
      }
      m /= (B * HW);
      for (long b = 0; b < B; ++b) {
        const double* p = x->value.data.data() + (b * C + c) * HW;
        for (long i = 0; i < HW; ++i) v += (p[i] - m) * (p[i] - m);
      }
      v /= (B * HW);  // biased, consistent with the normalization below
      mean[c] = m;
      var[c] = v;
      running_mean.data[c] = (1 - momentum) * running_mean.data[c] + momentum * m;
      running_var.data[c] = (1 - momentum) * running_var.data[c] + momentum * v;
    }
  } else {
    mean = running_mean.data;
    var = running_var.data;
  }

  Tensor out(x->value.shape);
  Eigen::ArrayXd istd = (var + eps).sqrt().inverse();
  for (long b = 0; b < B; ++b)
    for (long c = 0; c < C; ++c) {
      const double* p = x->value.data.data() + (b * C + c) * HW;
      double* o = out.data.data() + (b * C + c) * HW;
      double g = gamma->value.data[c], bt = beta->value.data[c];
      for (long i = 0; i < HW; ++i) o[i] = g * (p[i] - mean[c]) * istd[c] + bt;
    }

  return make_op(std::move(out), {x, gamma, beta}, [=](ag::Node& n) {
    auto& xv = n.parents[0];
    auto& gv = n.parents[1];
    auto& bv = n.parents[2];
    long N = B * HW;
    for (long c = 0; c < C; ++c) {
      double sum_dy = 0, sum_dy_xhat = 0;
      for (long b = 0; b < B; ++b) {
        const double* gy = n.grad.data.data() + (b * C + c) * HW;
        const double* px = xv->value.data.data() + (b * C + c) * HW;
        for (long i = 0; i < HW; ++i) {
          double xhat = (px[i] - mean[c]) * istd[c];
          sum_dy += gy[i];
          sum_dy_xhat += gy[i] * xhat;
        }
      }
      if (gv->requires_grad) {
        gv->ensure_grad();
        gv->grad.data[c] += sum_dy_xhat;
      }
      if (bv->requires_grad) {
        bv->ensure_grad();
        bv->grad.data[c] += sum_dy;
      }
      if (xv->requires_grad) {
        xv->ensure_grad();
        double g = gv->value.data[c];
        for (long b = 0; b < B; ++b) {
          const double* gy = n.grad.data.data() + (b * C + c) * HW;
          const double* px = xv->value.data.data() + (b * C + c) * HW;
          double* gx = xv->grad.data.data() + (b * C + c) * HW;
          for (long i = 0; i < HW; ++i) {
            double xhat = (px[i] - mean[c]) * istd[c];
            if (training)
              gx[i] += g * istd[c] *
                       (gy[i] - sum_dy / N - xhat * sum_dy_xhat / N);
            else
              gx[i] += g * istd[c] * gy[i];
          }
        }
      }
    }
  });
}

Var global_avg_pool(const Var& x) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw ag::ShapeMismatch("global_avg_pool: input must be 4-D");
  long B = s[0], C = s[1], HW = s[2] * s[3];
  Tensor out({B, C});
  for (long b = 0; b < B; ++b)
    for (long c = 0; c < C; ++c) {
      const double* p = x->value.data.data() + (b * C + c) * HW;
      double sum = 0;
      for (long i = 0; i < HW; ++i) sum += p[i];
      out.data[b * C + c] = sum / HW;
    }
  return make_op(std::move(out), {x}, [=](ag::Node& n) {
    auto& xv = n.parents[0];
    xv->ensure_grad();
    for (long b = 0; b < B; ++b)
      for (long c = 0; c < C; ++c) {
        double g = n.grad.data[b * C + c] / HW;
        double* gx = xv->grad.data.data() + (b * C + c) * HW;
        for (long i = 0; i < HW; ++i) gx[i] += g;
      }
  });
}

Tensor kaiming_uniform(std::vector<long> shape, long fan_in, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (long i = 0; i < t.size(); ++i) t.data[i] = dist(rng);
  return t;
}

long Module::param_count() {
  long n = 0;
  for (auto& p : parameters()) n += p.var->value.size();
  return n;
}

Linear::Linear(int in, int out, std::mt19937_64& rng)
    : in_features(in), out_features(out) {
  weight = ag::make_param(kaiming_uniform({out, in}, in, rng));
  bias = ag::make_param(kaiming_uniform({out}, in, rng));
}

Var Linear::forward(const Var& x) const {
  return ag::add_rowvec(ag::matmul(x, weight, false, true), bias);
}

void Linear::collect(const std::string& prefix, std::vector<NamedParam>& params,
                     std::vector<NamedBuffer>& buffers) {
  params.push_back({prefix + "weight", weight});
  params.push_back({prefix + "bias", bias});
  (void)buffers;
}

Conv2d::Conv2d(int cin, int cout, int k, int stride, int pad, std::mt19937_64& rng)
    : cin(cin), cout(cout), k(k), stride(stride), pad(pad) {
  long fan_in = static_cast<long>(cin) * k * k;
  weight = ag::make_param(kaiming_uniform({cout, fan_in}, fan_in, rng));
  bias = ag::make_param(kaiming_uniform({cout}, fan_in, rng));
}

Var Conv2d::forward(const Var& x) const { return conv2d(x, weight, bias, k, stride, pad); }

void Conv2d::collect(const std::string& prefix, std::vector<NamedParam>& params,
                     std::vector<NamedBuffer>& buffers) {
  params.push_back({prefix + "weight", weight});
  params.push_back({prefix + "bias", bias});
  (void)buffers;
}

ConvTranspose2d::ConvTranspose2d(int cin, int cout, int k, int stride, int pad,
                                 std::mt19937_64& rng)
    : cin(cin), cout(cout), k(k), stride(stride), pad(pad) {
  long fan_in = static_cast<long>(cin) * k * k;
  weight = ag::make_param(kaiming_uniform({cin, static_cast<long>(cout) * k * k},
                                          fan_in, rng));
  bias = ag::make_param(kaiming_uniform({cout}, fan_in, rng));
}

Var ConvTranspose2d::forward(const Var& x) const {
  return conv2d_transpose(x, weight, bias, k, stride, pad);
}

void ConvTranspose2d::collect(const std::string& prefix, std::vector<NamedParam>& params,
                              std::vector<NamedBuffer>& buffers) {
  params.push_back({prefix + "weight", weight});
  params.push_back({prefix + "bias", bias});
  (void)buffers;
}

BatchNorm2d::BatchNorm2d(int channels) : channels(channels) {
  gamma = ag::make_param(Tensor::full({channels}, 1.0));
  beta = ag::make_param(Tensor::zeros({channels}));
  running_mean = Tensor::zeros({channels});
  running_var = Tensor::full({channels}, 1.0);
}

Var BatchNorm2d::forward(const Var& x, bool training) const {
  return batchnorm2d(x, gamma, beta, running_mean, running_var, training);
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<NamedParam>& params,
                          std::vector<NamedBuffer>& buffers) {
  params.push_back({prefix + "gamma", gamma});
  params.push_back({prefix + "beta", beta});
  buffers.push_back({prefix + "running_mean", &running_mean});
  buffers.push_back({prefix + "running_var", &running_var});
}

Adam::Adam(std::vector<NamedParam> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto& p : params_) {
    m_.push_back(Eigen::ArrayXd::Zero(p.var->value.size()));
    v_.push_back(Eigen::ArrayXd::Zero(p.var->value.size()));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) {
    p.var->ensure_grad();
    p.var->grad.data.setZero();
  }
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    p.var->ensure_grad();
    const auto& g = p.var->grad.data;
    m_[i] = beta1_ * m_[i] + (1 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1 - beta2_) * g.square();
    p.var->value.data -= lr_ * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + eps_);
  }
}

}  // namespace slscom::nn
