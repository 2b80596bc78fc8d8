#pragma once

#include <cstddef>
#include <vector>

namespace apcdet {

/// Dense row-major matrix of doubles. Small helper used for class/offset
/// target tables and similarity matrices; not a linear-algebra library.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix& other) const = default;
};

}  // namespace apcdet
