#include "slscom/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace slscom::ag {

namespace {

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

void check_same_size(const Var& a, const Var& b, const char* op) {
  if (a->value.size() != b->value.size())
    throw ShapeMismatch(std::string(op) + ": operand sizes differ");
}

}  // namespace

Var constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  return n;
}

Var make_param(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->requires_grad = true;
  return n;
}

void backward(const Var& root) {
  if (root->value.size() != 1)
    throw ShapeMismatch("backward: root must be scalar");
  // iterative post-order topological sort
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order) n->ensure_grad();
  root->grad.data[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);
}

Var add(const Var& a, const Var& b) {
  check_same_size(a, b, "add");
  return make_node(Tensor(a->value.shape, a->value.data + b->value.data), {a, b},
                   [](Node& n) {
                     for (auto& p : n.parents)
                       if (p->requires_grad) {
                         p->ensure_grad();
                         p->grad.data += n.grad.data;
                       }
                   });
}

Var sub(const Var& a, const Var& b) {
  check_same_size(a, b, "sub");
  return make_node(Tensor(a->value.shape, a->value.data - b->value.data), {a, b},
                   [](Node& n) {
                     auto& a = n.parents[0];
                     auto& b = n.parents[1];
                     if (a->requires_grad) {
                       a->ensure_grad();
                       a->grad.data += n.grad.data;
                     }
                     if (b->requires_grad) {
                       b->ensure_grad();
                       b->grad.data -= n.grad.data;
                     }
                   });
}

Var mul(const Var& a, const Var& b) {
  check_same_size(a, b, "mul");
  return make_node(Tensor(a->value.shape, a->value.data * b->value.data), {a, b},
                   [](Node& n) {
                     auto& a = n.parents[0];
                     auto& b = n.parents[1];
                     if (a->requires_grad) {
                       a->ensure_grad();
                       a->grad.data += n.grad.data * b->value.data;
                     }
                     if (b->requires_grad) {
                       b->ensure_grad();
                       b->grad.data += n.grad.data * a->value.data;
                     }
                   });
}

Var scale(const Var& a, double k) {
  return make_node(Tensor(a->value.shape, a->value.data * k), {a}, [k](Node& n) {
    auto& a = n.parents[0];
    a->ensure_grad();
    a->grad.data += n.grad.data * k;
  });
}

Var square(const Var& a) {
  return make_node(Tensor(a->value.shape, a->value.data.square()), {a}, [](Node& n) {
    auto& a = n.parents[0];
    a->ensure_grad();
    a->grad.data += 2.0 * n.grad.data * a->value.data;
  });
}

Var add_const(const Var& a, const Tensor& c) {
  if (a->value.size() != c.size()) throw ShapeMismatch("add_const size");
  return make_node(Tensor(a->value.shape, a->value.data + c.data), {a}, [](Node& n) {
    auto& a = n.parents[0];
    a->ensure_grad();
    a->grad.data += n.grad.data;
  });
}

Var mul_const(const Var& a, const Tensor& c) {
  if (a->value.size() != c.size()) throw ShapeMismatch("mul_const size");
  Eigen::ArrayXd cdata = c.data;
  return make_node(Tensor(a->value.shape, a->value.data * c.data), {a},
                   [cdata](Node& n) {
                     auto& a = n.parents[0];
                     a->ensure_grad();
                     a->grad.data += n.grad.data * cdata;
                   });
}

Var relu(const Var& a) {
  return make_node(Tensor(a->value.shape, a->value.data.max(0.0)), {a}, [](Node& n) {
    auto& a = n.parents[0];
    a->ensure_grad();
    a->grad.data += (a->value.data > 0.0).cast<double>() * n.grad.data;
  });
}

Var sum_all(const Var& a) {
  return make_node(Tensor::scalar(a->value.data.sum()), {a}, [](Node& n) {
    auto& a = n.parents[0];
    a->ensure_grad();
    a->grad.data += n.grad.data[0];
  });
}

Var reshape(const Var& a, std::vector<long> shape) {
  if (Tensor::count(shape) != a->value.size()) throw ShapeMismatch("reshape size");
  return make_node(Tensor(std::move(shape), a->value.data), {a}, [](Node& n) {
    auto& a = n.parents[0];
    a->ensure_grad();
    a->grad.data += n.grad.data;
  });
}

Var matmul(const Var& a, const Var& b, bool trans_a, bool trans_b) {
  if (a->value.shape.size() != 2 || b->value.shape.size() != 2)
    throw ShapeMismatch("matmul: operands must be 2-D");
  long am = a->value.dim(0), an = a->value.dim(1);
  long bm = b->value.dim(0), bn = b->value.dim(1);
  long M = trans_a ? an : am, K = trans_a ? am : an;
  long Kb = trans_b ? bn : bm, N = trans_b ? bm : bn;
  if (K != Kb) throw ShapeMismatch("matmul: inner dimensions differ");

  auto A = a->value.mat(am, an);
  auto B = b->value.mat(bm, bn);
  Tensor out({M, N});
  auto O = out.mat(M, N);
  if (!trans_a && !trans_b) O = A * B;
  else if (trans_a && !trans_b) O = A.transpose() * B;
  else if (!trans_a && trans_b) O = A * B.transpose();
  else O = A.transpose() * B.transpose();

  return make_node(std::move(out), {a, b}, [=](Node& n) {
    auto G = n.grad.mat(M, N);
    auto& av = n.parents[0];
    auto& bv = n.parents[1];
    auto A = av->value.mat(am, an);
    auto B = bv->value.mat(bm, bn);
    if (av->requires_grad) {
      av->ensure_grad();
      auto GA = av->grad.mat(am, an);
      if (!trans_a && !trans_b) GA += G * B.transpose();
      else if (trans_a && !trans_b) GA += B * G.transpose();
      else if (!trans_a && trans_b) GA += G * B;
      else GA += B.transpose() * G.transpose();
    }
    if (bv->requires_grad) {
      bv->ensure_grad();
      auto GB = bv->grad.mat(bm, bn);
      if (!trans_a && !trans_b) GB += A.transpose() * G;
      else if (trans_a && !trans_b) GB += A * G;
      else if (!trans_a && trans_b) GB += G.transpose() * A;
      else GB += G.transpose() * A.transpose();
    }
  });
}

Var add_rowvec(const Var& a, const Var& bias) {
  if (a->value.shape.size() != 2) throw ShapeMismatch("add_rowvec: lhs must be 2-D");
  long R = a->value.dim(0), C = a->value.dim(1);
  if (bias->value.size() != C) throw ShapeMismatch("add_rowvec: bias length");
  Tensor out({R, C});
  out.mat(R, C) = a->value.mat(R, C).rowwise() +
                  Eigen::RowVectorXd::Map(bias->value.data.data(), C);
  return make_node(std::move(out), {a, bias}, [=](Node& n) {
    auto G = n.grad.mat(R, C);
    auto& av = n.parents[0];
    auto& bv = n.parents[1];
    if (av->requires_grad) {
      av->ensure_grad();
      av->grad.data += n.grad.data;
    }
    if (bv->requires_grad) {
      bv->ensure_grad();
      Eigen::RowVectorXd::Map(bv->grad.data.data(), C) += G.colwise().sum();
    }
  });
}

Var gather_cols(const Var& a, std::vector<long> idx) {
  if (a->value.shape.size() != 2) throw ShapeMismatch("gather_cols: input must be 2-D");
  long R = a->value.dim(0), C = a->value.dim(1);
  long M = static_cast<long>(idx.size());
  for (long j : idx)
    if (j < 0 || j >= C) throw ShapeMismatch("gather_cols: index out of range");
  Tensor out({R, M});
  auto A = a->value.mat(R, C);
  auto O = out.mat(R, M);
  for (long j = 0; j < M; ++j) O.col(j) = A.col(idx[j]);
  return make_node(std::move(out), {a}, [=](Node& n) {
    auto& av = n.parents[0];
    av->ensure_grad();
    auto G = n.grad.mat(R, M);
    auto GA = av->grad.mat(R, C);
    for (long j = 0; j < M; ++j) GA.col(idx[j]) += G.col(j);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: empty");
  long R = parts[0]->value.dim(0);
  long C = 0;
  for (const auto& p : parts) {
    if (p->value.shape.size() != 2 || p->value.dim(0) != R)
      throw ShapeMismatch("concat_cols: row counts differ");
    C += p->value.dim(1);
  }
  Tensor out({R, C});
  auto O = out.mat(R, C);
  long off = 0;
  for (const auto& p : parts) {
    long c = p->value.dim(1);
    O.middleCols(off, c) = p->value.mat(R, c);
    off += c;
  }
  std::vector<long> widths;
  for (const auto& p : parts) widths.push_back(p->value.dim(1));
  return make_node(std::move(out), parts, [=](Node& n) {
    auto G = n.grad.mat(R, C);
    long off = 0;
    for (size_t i = 0; i < n.parents.size(); ++i) {
      auto& p = n.parents[i];
      if (p->requires_grad) {
        p->ensure_grad();
        p->grad.mat(R, widths[i]) += G.middleCols(off, widths[i]);
      }
      off += widths[i];
    }
  });
}

Var row_l2_normalize(const Var& a, double target) {
  if (a->value.shape.size() != 2) throw ShapeMismatch("row_l2_normalize: input must be 2-D");
  long R = a->value.dim(0), C = a->value.dim(1);
  auto A = a->value.mat(R, C);
  Eigen::VectorXd norms = A.rowwise().norm();
  for (long i = 0; i < R; ++i)
    if (norms[i] == 0.0) throw ShapeMismatch("row_l2_normalize: zero row");
  Tensor out({R, C});
  auto O = out.mat(R, C);
  O = target * norms.cwiseInverse().asDiagonal() * A;
  return make_node(std::move(out), {a}, [=](Node& n) {
    auto& av = n.parents[0];
    av->ensure_grad();
    auto A = av->value.mat(R, C);
    auto G = n.grad.mat(R, C);
    auto GA = av->grad.mat(R, C);
    for (long i = 0; i < R; ++i) {
      double nn = norms[i];
      Eigen::RowVectorXd u = A.row(i) / nn;
      double gu = G.row(i).dot(u);
      GA.row(i) += (target / nn) * (G.row(i) - gu * u);
    }
  });
}

Var softmax_rows(const Var& a) {
  if (a->value.shape.size() != 2) throw ShapeMismatch("softmax_rows: input must be 2-D");
  long R = a->value.dim(0), C = a->value.dim(1);
  Tensor out({R, C});
  auto A = a->value.mat(R, C);
  auto O = out.mat(R, C);
  for (long i = 0; i < R; ++i) {
    Eigen::RowVectorXd e = (A.row(i).array() - A.row(i).maxCoeff()).exp();
    O.row(i) = e / e.sum();
  }
  return make_node(std::move(out), {a}, [=](Node& n) {
    auto& av = n.parents[0];
    av->ensure_grad();
    auto Y = n.value.mat(R, C);
    auto G = n.grad.mat(R, C);
    auto GA = av->grad.mat(R, C);
    for (long i = 0; i < R; ++i) {
      double dot = G.row(i).dot(Y.row(i));
      GA.row(i) += Y.row(i).cwiseProduct(G.row(i).array().matrix() -
                                         Eigen::RowVectorXd::Constant(C, dot));
    }
  });
}

Var infonce_from_scores(const Var& scores) {
  if (scores->value.shape.size() != 2 ||
      scores->value.dim(0) != scores->value.dim(1))
    throw ShapeMismatch("infonce_from_scores: scores must be square");
  long N = scores->value.dim(0);
  auto S = scores->value.mat(N, N);
  double loss = 0.0;
  MatRM P(N, N);
  for (long i = 0; i < N; ++i) {
    double m = S.row(i).maxCoeff();
    Eigen::RowVectorXd e = (S.row(i).array() - m).exp();
    double Z = e.sum();
    P.row(i) = e / Z;
    loss += S(i, i) - (m + std::log(Z));
  }
  loss /= N;
  return make_node(Tensor::scalar(loss), {scores}, [=](Node& n) {
    auto& sv = n.parents[0];
    sv->ensure_grad();
    double g = n.grad.data[0] / N;
    auto GS = sv->grad.mat(N, N);
    GS -= g * P;
    for (long i = 0; i < N; ++i) GS(i, i) += g;
  });
}

Var ce_from_probs(const Var& probs, const Tensor& onehot, double floor) {
  if (probs->value.size() != onehot.size())
    throw ShapeMismatch("ce_from_probs: label shape");
  long R = probs->value.dim(0), C = probs->value.dim(1);
  auto Y = probs->value.mat(R, C);
  auto T = onehot.mat(R, C);
  double loss = 0.0;
  for (long i = 0; i < R; ++i)
    for (long j = 0; j < C; ++j)
      if (T(i, j) != 0.0) loss -= T(i, j) * std::log(std::max(Y(i, j), floor));
  loss /= R;
  Eigen::ArrayXd t = onehot.data;
  return make_node(Tensor::scalar(loss), {probs}, [=](Node& n) {
    auto& pv = n.parents[0];
    pv->ensure_grad();
    double g = n.grad.data[0] / R;
    for (long k = 0; k < pv->value.size(); ++k) {
      double y = pv->value.data[k];
      if (t[k] != 0.0 && y > floor) pv->grad.data[k] -= g * t[k] / y;
    }
  });
}

Var mean_row_sqnorm_diff(const Var& x, const Var& y) {
  check_same_size(x, y, "mean_row_sqnorm_diff");
  if (x->value.shape.size() != 2) throw ShapeMismatch("mean_row_sqnorm_diff: 2-D expected");
  long R = x->value.dim(0);
  double loss = (x->value.data - y->value.data).square().sum() / R;
  return make_node(Tensor::scalar(loss), {x, y}, [=](Node& n) {
    auto& xv = n.parents[0];
    auto& yv = n.parents[1];
    Eigen::ArrayXd d = (2.0 * n.grad.data[0] / R) * (xv->value.data - yv->value.data);
    if (xv->requires_grad) {
      xv->ensure_grad();
      xv->grad.data += d;
    }
    if (yv->requires_grad) {
      yv->ensure_grad();
      yv->grad.data -= d;
    }
  });
}

}  // namespace slscom::ag
