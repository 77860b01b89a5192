#pragma once

// Serial textbook implementations of the kernels in kernels.hpp. Kept only
// as test and benchmark oracles; nothing on the training path calls them.

#include <cstddef>
#include <span>

#include "pointaugment/matrix.hpp"

namespace pointaugment::kernels::reference {

void dense_forward(const Matrix& x, std::span<const double> w, std::span<const double> bias,
                   std::size_t out, Matrix& y);
void dense_backward_input(const Matrix& dy, std::span<const double> w, std::size_t in,
                          Matrix& dx);
void dense_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dw,
                           std::span<double> db);
void relu_inplace(Matrix& x);
void relu_backward_inplace(Matrix& grad, const Matrix& activation);
void max_pool_rows(const Matrix& x, std::span<double> out, std::span<std::size_t> argmax);

}  // namespace pointaugment::kernels::reference
