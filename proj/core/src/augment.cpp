#include "slscom/augment.hpp"

#include <algorithm>
#include <cmath>

namespace slscom {

namespace {

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  double d = mx - mn;
  s = mx == 0 ? 0 : d / mx;
  if (d == 0) {
    h = 0;
    return;
  }
  if (mx == r) h = std::fmod((g - b) / d, 6.0);
  else if (mx == g) h = (b - r) / d + 2.0;
  else h = (r - g) / d + 4.0;
  h /= 6.0;
  if (h < 0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  double i = std::floor(h * 6.0);
  double f = h * 6.0 - i;
  double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  switch (static_cast<int>(i) % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace

void flip_horizontal(double* img, int C, int H, int W) {
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y) {
      double* row = img + (static_cast<long>(c) * H + y) * W;
      std::reverse(row, row + W);
    }
}

void to_grayscale(double* img, int C, int H, int W) {
  if (C != 3) return;
  long plane = static_cast<long>(H) * W;
  for (long i = 0; i < plane; ++i) {
    double l = kLumaR * img[i] + kLumaG * img[plane + i] + kLumaB * img[2 * plane + i];
    img[i] = img[plane + i] = img[2 * plane + i] = l;
  }
}

void gaussian_blur(double* img, int C, int H, int W, int kernel, double sigma) {
  if (sigma <= 0.0 || kernel <= 1) return;  // identity kernel
  int r = kernel / 2;
  std::vector<double> w(kernel);
  double sum = 0;
  for (int i = -r; i <= r; ++i) {
    w[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += w[i + r];
  }
  for (double& v : w) v /= sum;
  std::vector<double> tmp(static_cast<size_t>(H) * W);
  for (int c = 0; c < C; ++c) {
    double* plane = img + static_cast<long>(c) * H * W;
    // horizontal pass, replicate padding
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double acc = 0;
        for (int i = -r; i <= r; ++i)
          acc += w[i + r] * plane[y * W + std::clamp(x + i, 0, W - 1)];
        tmp[static_cast<size_t>(y) * W + x] = acc;
      }
    // vertical pass
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double acc = 0;
        for (int i = -r; i <= r; ++i)
          acc += w[i + r] * tmp[static_cast<size_t>(std::clamp(y + i, 0, H - 1)) * W + x];
        plane[y * W + x] = acc;
      }
  }
}

void adjust_hue(double* img, int C, int H, int W, double delta) {
  if (C != 3 || delta == 0.0) return;
  long plane = static_cast<long>(H) * W;
  for (long i = 0; i < plane; ++i) {
    double h, s, v;
    rgb_to_hsv(img[i], img[plane + i], img[2 * plane + i], h, s, v);
    h = std::fmod(h + delta + 1.0, 1.0);
    hsv_to_rgb(h, s, v, img[i], img[plane + i], img[2 * plane + i]);
  }
}

ag::Tensor construct_views(const ag::Tensor& batch, const AugmentPolicy& policy,
                           std::mt19937_64& rng) {
  const auto& s = batch.shape;
  if (s.size() != 4) throw ag::ShapeMismatch("construct_views: input must be (B,C,H,W)");
  long B = s[0];
  int C = static_cast<int>(s[1]), H = static_cast<int>(s[2]), W = static_cast<int>(s[3]);
  long len = static_cast<long>(C) * H * W;
  long plane = static_cast<long>(H) * W;

  ag::Tensor out = batch;
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  for (long b = 0; b < B; ++b) {
    // one fixed block of draws per sample
    double u_flip = uni(rng);
    double u_jitter = uni(rng);
    double f_bright = uni(rng), f_contrast = uni(rng), f_sat = uni(rng), f_hue = uni(rng);
    double u_gray = uni(rng);
    double u_sigma = uni(rng);

    double* img = out.data.data() + b * len;

    if (u_flip < policy.flip_prob) flip_horizontal(img, C, H, W);

    if (policy.color_enabled && u_jitter < policy.jitter_prob) {
      const auto& st = policy.jitter_strengths;
      double bright = 1.0 - st[0] + 2.0 * st[0] * f_bright;
      double contrast = 1.0 - st[1] + 2.0 * st[1] * f_contrast;
      double sat = 1.0 - st[2] + 2.0 * st[2] * f_sat;
      double hue = -st[3] + 2.0 * st[3] * f_hue;

      for (long i = 0; i < len; ++i) img[i] *= bright;

      double mean = 0;
      if (C == 3)
        for (long i = 0; i < plane; ++i)
          mean += kLumaR * img[i] + kLumaG * img[plane + i] + kLumaB * img[2 * plane + i];
      else
        for (long i = 0; i < len; ++i) mean += img[i];
      mean /= (C == 3) ? plane : len;
      for (long i = 0; i < len; ++i) img[i] = mean + contrast * (img[i] - mean);

      if (C == 3) {
        for (long i = 0; i < plane; ++i) {
          double l = kLumaR * img[i] + kLumaG * img[plane + i] + kLumaB * img[2 * plane + i];
          img[i] = l + sat * (img[i] - l);
          img[plane + i] = l + sat * (img[plane + i] - l);
          img[2 * plane + i] = l + sat * (img[2 * plane + i] - l);
        }
        for (long i = 0; i < len; ++i) img[i] = std::clamp(img[i], 0.0, 1.0);
        adjust_hue(img, C, H, W, hue);
      }
    }

    if (policy.color_enabled && u_gray < policy.gray_prob) to_grayscale(img, C, H, W);

    double sigma = policy.blur_sigma_min +
                   u_sigma * (policy.blur_sigma_max - policy.blur_sigma_min);
    gaussian_blur(img, C, H, W, policy.blur_kernel, sigma);

    for (long i = 0; i < len; ++i) img[i] = std::clamp(img[i], 0.0, 1.0);
  }
  return out;
}

}  // namespace slscom
