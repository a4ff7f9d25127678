#pragma once

#include <random>

#include "slscom/config.hpp"
#include "slscom/tensor.hpp"

namespace slscom {

// The data construction block: produces the self-supervised counterpart of
// each sample in the batch.  batch: (B, C, H, W), pixels in [0,1]; output is
// clamped back to [0,1].  Transform parameters are drawn per sample from the
// augment stream; the draw count per sample is fixed so stream positions do
// not depend on which transforms fire.
ag::Tensor construct_views(const ag::Tensor& batch, const AugmentPolicy& policy,
                           std::mt19937_64& augment_rng);

// Helpers exposed for tests.
void flip_horizontal(double* img, int C, int H, int W);
void to_grayscale(double* img, int C, int H, int W);
void gaussian_blur(double* img, int C, int H, int W, int kernel, double sigma);
void adjust_hue(double* img, int C, int H, int W, double delta);

}  // namespace slscom
