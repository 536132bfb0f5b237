#pragma once

#include <cstddef>
#include <vector>

namespace inkslt {

// Row-major dense matrix of doubles; the numeric carrier for the network.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
};

// Mutable window into a flat parameter vector.
struct MatView {
  double* base = nullptr;
  int rows = 0;
  int cols = 0;

  double& at(int r, int c) const { return base[static_cast<size_t>(r) * cols + c]; }
};

struct ConstMatView {
  const double* base = nullptr;
  int rows = 0;
  int cols = 0;

  double at(int r, int c) const { return base[static_cast<size_t>(r) * cols + c]; }
};

}  // namespace inkslt
