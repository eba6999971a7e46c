// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "na/errors.hpp"

namespace na::train {

// Scalar reverse-mode autodiff on a flat tape. Values are computed eagerly
// as nodes are pushed; backward() runs the reverse sweep. Nodes are plain
// indices, which keeps the tape reusable across sequences without any
// allocation churn.
//
// The Dot op reads two contiguous index ranges, so weight vectors and state
// vectors must be materialized contiguously (see copy_range).
class Tape {
 public:
  enum class Op : std::uint8_t {
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sigmoid,
    Tanh,
    Exp,
    Log,
    Id,
    Dot,          // a = weight range start, b = input range start, c = length
    SoftmaxXent,  // a = logit range start, b = class count, c = target index
  };

  int size() const { return static_cast<int>(nodes_.size()); }
  void clear() {
    nodes_.clear();
    val_.clear();
  }

  double val(int i) const { return val_[i]; }
  double grad(int i) const { return grad_[i]; }

  int constant(double v) { return push(Op::Const, -1, -1, 0, v); }
  int add(int a, int b) { return push(Op::Add, a, b, 0, val_[a] + val_[b]); }
  int sub(int a, int b) { return push(Op::Sub, a, b, 0, val_[a] - val_[b]); }
  int mul(int a, int b) { return push(Op::Mul, a, b, 0, val_[a] * val_[b]); }
  int div(int a, int b) { return push(Op::Div, a, b, 0, val_[a] / val_[b]); }
  int neg(int a) { return push(Op::Neg, a, -1, 0, -val_[a]); }
  int sigmoid(int a) { return push(Op::Sigmoid, a, -1, 0, 1.0 / (1.0 + std::exp(-val_[a]))); }
  int tanh_(int a) { return push(Op::Tanh, a, -1, 0, std::tanh(val_[a])); }
  int exp_(int a) { return push(Op::Exp, a, -1, 0, std::exp(val_[a])); }
  int log_(int a) { return push(Op::Log, a, -1, 0, std::log(val_[a])); }
  int id(int a) { return push(Op::Id, a, -1, 0, val_[a]); }

  // Inner product of val[w..w+len) and val[x..x+len).
  int dot(int w, int x, int len) {
    double acc = 0.0;
    for (int i = 0; i < len; ++i) acc += val_[w + i] * val_[x + i];
    return push(Op::Dot, w, x, len, acc);
  }

  // Cross-entropy of a softmax over val[logits..logits+k) against target.
  int softmax_xent(int logits, int k, int target) {
    double mx = val_[logits];
    for (int i = 1; i < k; ++i) mx = std::max(mx, val_[logits + i]);
    double z = 0.0;
    for (int i = 0; i < k; ++i) z += std::exp(val_[logits + i] - mx);
    const double loss = std::log(z) - (val_[logits + target] - mx);
    return push(Op::SoftmaxXent, logits, k, target, loss);
  }

  // Re-emit a range of nodes contiguously (for Dot inputs).
  int copy_range(const std::vector<int>& src) {
    const int start = size();
    for (int s : src) id(s);
    return start;
  }

  void backward(int loss);

 private:
  struct Node {
    Op op;
    int a, b, c;
  };

  int push(Op op, int a, int b, int c, double v) {
    nodes_.push_back({op, a, b, c});
    val_.push_back(v);
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  std::vector<double> val_;
  std::vector<double> grad_;
};

}  // namespace na::train
