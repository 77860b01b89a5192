#pragma once

// Dense-layer kernels used by every network in the project.
//
// Weights are stored row-major as an (in x out) block so that a row vector x
// maps to x * W + b. The optimized kernels split work across OpenMP threads
// by output element; each output element is always accumulated by one thread
// in ascending index order, so results do not depend on the thread count.
// kernels_reference.hpp holds the plain serial versions the tests compare
// against.

#include <cstddef>
#include <span>

#include "pointaugment/matrix.hpp"

namespace pointaugment::kernels {

/// y = x * w + bias. y is resized to (x.rows() x out).
void dense_forward(const Matrix& x, std::span<const double> w, std::span<const double> bias,
                   std::size_t out, Matrix& y);

/// dx = dy * w^T. dx is resized to (dy.rows() x in).
void dense_backward_input(const Matrix& dy, std::span<const double> w, std::size_t in,
                          Matrix& dx);

/// dw += x^T * dy, db += column sums of dy.
void dense_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dw,
                           std::span<double> db);

void relu_inplace(Matrix& x);

/// grad *= (activation > 0), where activation is the ReLU output.
void relu_backward_inplace(Matrix& grad, const Matrix& activation);

/// Column-wise maximum over rows; argmax keeps the first row attaining it.
void max_pool_rows(const Matrix& x, std::span<double> out, std::span<std::size_t> argmax);

/// Number of OpenMP threads the kernels will use.
int thread_count();

}  // namespace pointaugment::kernels
