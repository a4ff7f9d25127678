#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace slscom::ag {

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense double tensor, flat row-major storage with an explicit shape.
struct Tensor {
  std::vector<long> shape;
  Eigen::ArrayXd data;

  Tensor() = default;
  explicit Tensor(std::vector<long> s) : shape(std::move(s)) {
    data = Eigen::ArrayXd::Zero(count(shape));
  }
  Tensor(std::vector<long> s, Eigen::ArrayXd d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != count(shape)) throw ShapeMismatch("tensor data/shape size mismatch");
  }

  static long count(const std::vector<long>& s) {
    long n = 1;
    for (long d : s) n *= d;
    return n;
  }
  long size() const { return data.size(); }
  long dim(int i) const { return shape.at(i); }

  static Tensor zeros(std::vector<long> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<long> s, double v) {
    Tensor t(std::move(s));
    t.data.setConstant(v);
    return t;
  }
  static Tensor scalar(double v) { return full({1}, v); }
  static Tensor from_vector(std::vector<long> s, const std::vector<double>& v) {
    Tensor t(std::move(s));
    if (static_cast<long>(v.size()) != t.size()) throw ShapeMismatch("from_vector size");
    for (long i = 0; i < t.size(); ++i) t.data[i] = v[i];
    return t;
  }

  // 2-D view (rows x cols must cover the flat buffer)
  Eigen::Map<MatRM> mat(long rows, long cols) {
    if (rows * cols != size()) throw ShapeMismatch("mat view size");
    return Eigen::Map<MatRM>(data.data(), rows, cols);
  }
  Eigen::Map<const MatRM> mat(long rows, long cols) const {
    if (rows * cols != size()) throw ShapeMismatch("mat view size");
    return Eigen::Map<const MatRM>(data.data(), rows, cols);
  }
};

class Node;
using Var = std::shared_ptr<Node>;

// One node of the backward tape.
class Node {
public:
  Tensor value;
  Tensor grad;  // allocated on demand, same shape as value
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents

  void ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor(value.shape);
  }
};

Var constant(Tensor t);
Var make_param(Tensor t);

// Backpropagate from a scalar root through the whole reachable graph.
void backward(const Var& root);

// ---- elementwise / linear algebra ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double k);
Var square(const Var& a);
Var add_const(const Var& a, const Tensor& c);   // c broadcast-free, same size
Var mul_const(const Var& a, const Tensor& c);
Var relu(const Var& a);
Var sum_all(const Var& a);                       // -> scalar
Var reshape(const Var& a, std::vector<long> shape);
Var matmul(const Var& a, const Var& b, bool trans_a = false, bool trans_b = false);
Var add_rowvec(const Var& a, const Var& bias);   // (R x C) + (C)
Var gather_cols(const Var& a, std::vector<long> idx);  // (R x C) -> (R x idx.size())
Var concat_cols(const std::vector<Var>& parts);        // row-count preserved

// Rows rescaled to Euclidean norm `target`.  Throws on an all-zero row.
Var row_l2_normalize(const Var& a, double target = 1.0);

Var softmax_rows(const Var& a);

// ---- fused losses ----
// (1/N) sum_i [S_ii - log sum_j exp(S_ij)]  for square score matrix S.
Var infonce_from_scores(const Var& scores);
// -(1/N) sum_i t_i . log(max(y_i, floor)) for probability rows y, one-hot t.
Var ce_from_probs(const Var& probs, const Tensor& onehot, double floor = 1e-12);
// (1/N) sum_i ||x_i - y_i||^2 over rows.
Var mean_row_sqnorm_diff(const Var& x, const Var& y);

}  // namespace slscom::ag
