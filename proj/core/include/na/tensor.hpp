// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "na/errors.hpp"

namespace na {

// Dense row-major matrix of doubles; a column vector is rows x 1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}
  Tensor(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
    if (v.size() != static_cast<std::size_t>(r) * c) throw ShapeError("tensor data size mismatch");
  }

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  bool same_shape(int r, int c) const { return rows == r && cols == c; }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.rows == b.rows && a.cols == b.cols && a.v == b.v;
  }
};

// y = M x
inline std::vector<double> matvec(const Tensor& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.cols) throw ShapeError("matvec dimension mismatch");
  std::vector<double> y(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c) acc += m.at(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

}  // namespace na
