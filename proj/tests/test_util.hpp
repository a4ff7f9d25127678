#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "slscom/tensor.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// central finite difference of a scalar-valued function wrt one entry of t
inline double fd_grad(slscom::ag::Tensor& t, long idx,
                      const std::function<double()>& eval, double h = 1e-5) {
  double keep = t.data[idx];
  t.data[idx] = keep + h;
  double up = eval();
  t.data[idx] = keep - h;
  double dn = eval();
  t.data[idx] = keep;
  return (up - dn) / (2 * h);
}

inline slscom::ag::Tensor random_tensor(std::vector<long> shape, std::mt19937_64& rng,
                                        double scale = 1.0) {
  slscom::ag::Tensor t(std::move(shape));
  std::normal_distribution<double> g(0.0, scale);
  for (long i = 0; i < t.size(); ++i) t.data[i] = g(rng);
  return t;
}

}  // namespace testutil
