#include "pointaugment/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pointaugment/errors.hpp"

namespace pointaugment {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidInput("matrix data size does not match its shape");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix hconcat(std::span<const Matrix* const> blocks) {
  if (blocks.empty()) return {};
  const std::size_t rows = blocks.front()->rows();
  std::size_t cols = 0;
  for (const Matrix* b : blocks) {
    if (b->rows() != rows) throw InvalidInput("hconcat: row counts differ");
    cols += b->cols();
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = out.row(r).data();
    for (const Matrix* b : blocks) {
      std::memcpy(dst, b->row(r).data(), b->cols() * sizeof(double));
      dst += b->cols();
    }
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput("max_abs_diff: shape mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

}  // namespace pointaugment
