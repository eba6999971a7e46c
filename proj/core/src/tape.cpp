// SPDX-License-Identifier: Apache-2.0
#include "na/tape.hpp"

#include <cmath>

namespace na::train {

void Tape::backward(int loss) {
  grad_.assign(val_.size(), 0.0);
  if (loss < 0 || loss >= size()) throw EvalError("backward target out of range");
  grad_[loss] = 1.0;
  for (int i = loss; i >= 0; --i) {
    const double g = grad_[i];
    if (g == 0.0) continue;
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Const:
        break;
      case Op::Add:
        grad_[n.a] += g;
        grad_[n.b] += g;
        break;
      case Op::Sub:
        grad_[n.a] += g;
        grad_[n.b] -= g;
        break;
      case Op::Mul:
        grad_[n.a] += g * val_[n.b];
        grad_[n.b] += g * val_[n.a];
        break;
      case Op::Div:
        grad_[n.a] += g / val_[n.b];
        grad_[n.b] -= g * val_[i] / val_[n.b];
        break;
      case Op::Neg:
        grad_[n.a] -= g;
        break;
      case Op::Sigmoid: {
        const double s = val_[i];
        grad_[n.a] += g * s * (1.0 - s);
        break;
      }
      case Op::Tanh: {
        const double t = val_[i];
        grad_[n.a] += g * (1.0 - t * t);
        break;
      }
      case Op::Exp:
        grad_[n.a] += g * val_[i];
        break;
      case Op::Log:
        grad_[n.a] += g / val_[n.a];
        break;
      case Op::Id:
        grad_[n.a] += g;
        break;
      case Op::Dot:
        for (int j = 0; j < n.c; ++j) {
          grad_[n.a + j] += g * val_[n.b + j];
          grad_[n.b + j] += g * val_[n.a + j];
        }
        break;
      case Op::SoftmaxXent: {
        double mx = val_[n.a];
        for (int j = 1; j < n.b; ++j) mx = std::max(mx, val_[n.a + j]);
        double z = 0.0;
        for (int j = 0; j < n.b; ++j) z += std::exp(val_[n.a + j] - mx);
        for (int j = 0; j < n.b; ++j) {
          const double p = std::exp(val_[n.a + j] - mx) / z;
          grad_[n.a + j] += g * (p - (j == n.c ? 1.0 : 0.0));
        }
        break;
      }
    }
  }
}

}  // namespace na::train
