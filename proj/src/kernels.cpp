#include "pointaugment/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pointaugment/errors.hpp"

namespace pointaugment::kernels {

namespace {

// Below this many multiply-adds the fork/join cost outweighs the work.
constexpr std::size_t kParallelThreshold = std::size_t{1} << 15;

}  // namespace

void dense_forward(const Matrix& x, std::span<const double> w, std::span<const double> bias,
                   std::size_t out, Matrix& y) {
  const std::size_t n = x.rows();
  const std::size_t in = x.cols();
  if (w.size() != in * out || bias.size() != out) {
    throw ConfigError("dense_forward: weight shape does not match input width");
  }
  if (y.rows() != n || y.cols() != out) y = Matrix(n, out);
  const double* wp = w.data();
  const double* bp = bias.data();
  const bool parallel = n * in * out >= kParallelThreshold;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t i = 0; i < n; ++i) {
    double* yr = y.data() + i * out;
    const double* xr = x.data() + i * in;
    for (std::size_t j = 0; j < out; ++j) yr[j] = bp[j];
    for (std::size_t k = 0; k < in; ++k) {
      const double xk = xr[k];
      const double* wr = wp + k * out;
#pragma omp simd
      for (std::size_t j = 0; j < out; ++j) yr[j] += xk * wr[j];
    }
  }
}

void dense_backward_input(const Matrix& dy, std::span<const double> w, std::size_t in,
                          Matrix& dx) {
  const std::size_t n = dy.rows();
  const std::size_t out = dy.cols();
  if (w.size() != in * out) throw ConfigError("dense_backward_input: weight shape mismatch");
  if (dx.rows() != n || dx.cols() != in) dx = Matrix(n, in);
  const double* wp = w.data();
  const bool parallel = n * in * out >= kParallelThreshold;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t i = 0; i < n; ++i) {
    const double* g = dy.data() + i * out;
    double* dxr = dx.data() + i * in;
    for (std::size_t k = 0; k < in; ++k) {
      const double* wr = wp + k * out;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t j = 0; j < out; ++j) s += g[j] * wr[j];
      dxr[k] = s;
    }
  }
}

void dense_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dw,
                           std::span<double> db) {
  const std::size_t n = x.rows();
  const std::size_t in = x.cols();
  const std::size_t out = dy.cols();
  if (dy.rows() != n || dw.size() != in * out || db.size() != out) {
    throw ConfigError("dense_backward_params: shape mismatch");
  }
  double* dwp = dw.data();
  const bool parallel = n * in * out >= kParallelThreshold;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t k = 0; k < in; ++k) {
    double* dwr = dwp + k * out;
    for (std::size_t i = 0; i < n; ++i) {
      const double xk = x.data()[i * in + k];
      if (xk == 0.0) continue;
      const double* g = dy.data() + i * out;
#pragma omp simd
      for (std::size_t j = 0; j < out; ++j) dwr[j] += xk * g[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double* g = dy.data() + i * out;
#pragma omp simd
    for (std::size_t j = 0; j < out; ++j) db[j] += g[j];
  }
}

void relu_inplace(Matrix& x) {
  double* p = x.data();
  const std::size_t len = x.size();
#pragma omp simd
  for (std::size_t i = 0; i < len; ++i) p[i] = p[i] < 0.0 ? 0.0 : p[i];  // NaN passes through
}

void relu_backward_inplace(Matrix& grad, const Matrix& activation) {
  double* g = grad.data();
  const double* a = activation.data();
  const std::size_t len = grad.size();
#pragma omp simd
  for (std::size_t i = 0; i < len; ++i) g[i] = a[i] > 0.0 ? g[i] : 0.0;
}

void max_pool_rows(const Matrix& x, std::span<double> out, std::span<std::size_t> argmax) {
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  if (n == 0) throw InvalidInput("max_pool_rows: no rows");
  if (out.size() != c || argmax.size() != c) throw ConfigError("max_pool_rows: output width");
  std::copy_n(x.data(), c, out.data());
  std::fill(argmax.begin(), argmax.end(), std::size_t{0});
  for (std::size_t i = 1; i < n; ++i) {
    const double* r = x.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) {
      if (!std::isnan(out[j]) && (r[j] > out[j] || std::isnan(r[j]))) {
        out[j] = r[j];
        argmax[j] = i;
      }
    }
  }
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace pointaugment::kernels
