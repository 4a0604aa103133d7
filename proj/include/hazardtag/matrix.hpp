#ifndef HAZARDTAG_MATRIX_HPP
#define HAZARDTAG_MATRIX_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hazardtag {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Small and desk-scale by intent.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) {
    return {data.data() + r * cols, cols};
  }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool operator==(const Matrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

// y = M x
inline Vec matvec(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols) throw std::invalid_argument("matvec: shape mismatch");
  Vec y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.data.data() + r * m.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

// y += M^T x  (x has m.rows entries, y has m.cols entries)
inline void matvec_transposed_add(const Matrix& m, std::span<const double> x,
                                  std::span<double> y) {
  if (x.size() != m.rows || y.size() != m.cols)
    throw std::invalid_argument("matvec_transposed_add: shape mismatch");
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.data.data() + r * m.cols;
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < m.cols; ++c) y[c] += xr * row[c];
  }
}

// M += a b^T (outer product accumulate)
inline void outer_add(Matrix& m, std::span<const double> a,
                      std::span<const double> b) {
  if (a.size() != m.rows || b.size() != m.cols)
    throw std::invalid_argument("outer_add: shape mismatch");
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* row = m.data.data() + r * m.cols;
    const double ar = a[r];
    if (ar == 0.0) continue;
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

}  // namespace hazardtag

#endif  // HAZARDTAG_MATRIX_HPP
