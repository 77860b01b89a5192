#include "pointaugment/kernels_reference.hpp"

#include <cmath>

#include "pointaugment/errors.hpp"

namespace pointaugment::kernels::reference {

void dense_forward(const Matrix& x, std::span<const double> w, std::span<const double> bias,
                   std::size_t out, Matrix& y) {
  const std::size_t in = x.cols();
  if (w.size() != in * out || bias.size() != out) throw ConfigError("dense_forward: shape");
  y = Matrix(x.rows(), out);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < out; ++j) {
      double s = bias[j];
      for (std::size_t k = 0; k < in; ++k) s += x(i, k) * w[k * out + j];
      y(i, j) = s;
    }
  }
}

void dense_backward_input(const Matrix& dy, std::span<const double> w, std::size_t in,
                          Matrix& dx) {
  const std::size_t out = dy.cols();
  if (w.size() != in * out) throw ConfigError("dense_backward_input: shape");
  dx = Matrix(dy.rows(), in);
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    for (std::size_t k = 0; k < in; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < out; ++j) s += dy(i, j) * w[k * out + j];
      dx(i, k) = s;
    }
  }
}

void dense_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dw,
                           std::span<double> db) {
  const std::size_t in = x.cols();
  const std::size_t out = dy.cols();
  if (dw.size() != in * out || db.size() != out) throw ConfigError("dense_backward_params");
  for (std::size_t k = 0; k < in; ++k) {
    for (std::size_t j = 0; j < out; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, k) * dy(i, j);
      dw[k * out + j] += s;
    }
  }
  for (std::size_t j = 0; j < out; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < dy.rows(); ++i) s += dy(i, j);
    db[j] += s;
  }
}

void relu_inplace(Matrix& x) {
  for (double& v : x.values()) v = v < 0.0 ? 0.0 : v;
}

void relu_backward_inplace(Matrix& grad, const Matrix& activation) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activation.data()[i] > 0.0)) grad.data()[i] = 0.0;
  }
}

void max_pool_rows(const Matrix& x, std::span<double> out, std::span<std::size_t> argmax) {
  if (x.rows() == 0) throw InvalidInput("max_pool_rows: no rows");
  for (std::size_t j = 0; j < x.cols(); ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.rows(); ++i) {
      if (std::isnan(x(best, j))) break;
      if (x(i, j) > x(best, j) || std::isnan(x(i, j))) best = i;
    }
    out[j] = x(best, j);
    argmax[j] = best;
  }
}

}  // namespace pointaugment::kernels::reference
