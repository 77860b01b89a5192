#include "pointaugment/netblocks.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "pointaugment/errors.hpp"
#include "pointaugment/kernels.hpp"

namespace pointaugment {

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ParameterSet::hash() const {
  return fnv1a({reinterpret_cast<const unsigned char*>(values.data()),
                values.size() * sizeof(double)});
}

Mlp::Mlp(MlpSpec spec, std::size_t offset) : spec_(std::move(spec)), offset_(offset) {
  if (spec_.widths.size() < 2) throw ConfigError("MLP needs at least one layer");
  for (std::size_t w : spec_.widths) {
    if (w == 0) throw ConfigError("MLP widths must be positive");
  }
  std::size_t at = offset_;
  for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
    layer_offsets_.push_back(at);
    at += spec_.widths[l] * spec_.widths[l + 1] + spec_.widths[l + 1];
    if (normalized(l)) at += 2 * spec_.widths[l + 1];
  }
  count_ = at - offset_;
}

std::span<const double> Mlp::weight(std::span<const double> p, std::size_t l) const {
  return p.subspan(layer_offsets_[l], spec_.widths[l] * spec_.widths[l + 1]);
}
std::span<const double> Mlp::bias(std::span<const double> p, std::size_t l) const {
  return p.subspan(layer_offsets_[l] + spec_.widths[l] * spec_.widths[l + 1], spec_.widths[l + 1]);
}
std::span<double> Mlp::weight(std::span<double> p, std::size_t l) const {
  return p.subspan(layer_offsets_[l], spec_.widths[l] * spec_.widths[l + 1]);
}
std::span<double> Mlp::bias(std::span<double> p, std::size_t l) const {
  return p.subspan(layer_offsets_[l] + spec_.widths[l] * spec_.widths[l + 1], spec_.widths[l + 1]);
}

bool Mlp::activated(std::size_t l) const {
  return l + 1 < layer_count() || spec_.final_activation;
}

std::span<const double> Mlp::gain(std::span<const double> p, std::size_t l) const {
  const std::size_t out = spec_.widths[l + 1];
  return p.subspan(layer_offsets_[l] + spec_.widths[l] * out + out, out);
}
std::span<const double> Mlp::shift(std::span<const double> p, std::size_t l) const {
  const std::size_t out = spec_.widths[l + 1];
  return p.subspan(layer_offsets_[l] + spec_.widths[l] * out + 2 * out, out);
}
std::span<double> Mlp::gain(std::span<double> p, std::size_t l) const {
  const std::size_t out = spec_.widths[l + 1];
  return p.subspan(layer_offsets_[l] + spec_.widths[l] * out + out, out);
}
std::span<double> Mlp::shift(std::span<double> p, std::size_t l) const {
  const std::size_t out = spec_.widths[l + 1];
  return p.subspan(layer_offsets_[l] + spec_.widths[l] * out + 2 * out, out);
}

namespace {

// Standardizes each column of z over its rows in place, then applies gain and
// shift. Returns the standardized values and per-column 1/std.
void normalize_columns(Matrix& z, std::span<const double> gain, std::span<const double> shift,
                       Matrix* standardized, std::vector<double>* inv_std_out) {
  const std::size_t n = z.rows(), c = z.cols();
  std::vector<double> mean(c, 0.0), var(c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) mean[j] += z(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double d = z(i, j) - mean[j];
      var[j] += d * d;
    }
  }
  std::vector<double> inv_std(c);
  for (std::size_t j = 0; j < c; ++j) {
    inv_std[j] = 1.0 / std::sqrt(var[j] / static_cast<double>(n) + kNormEpsilon);
  }
  if (standardized) *standardized = Matrix(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (z(i, j) - mean[j]) * inv_std[j];
      if (standardized) (*standardized)(i, j) = h;
      z(i, j) = gain[j] * h + shift[j];
    }
  }
  if (inv_std_out) *inv_std_out = std::move(inv_std);
}

// Turns dy (w.r.t. the normalized output) into the gradient w.r.t. the raw
// pre-activation, accumulating gain/shift gradients when requested.
void normalize_backward(Matrix& dy, const Matrix& standardized, std::span<const double> inv_std,
                        std::span<const double> gain, std::span<double> d_gain,
                        std::span<double> d_shift) {
  const std::size_t n = dy.rows(), c = dy.cols();
  std::vector<double> sum_dh(c, 0.0), sum_dh_h(c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double g = dy(i, j);
      if (!d_gain.empty()) {
        d_gain[j] += g * standardized(i, j);
        d_shift[j] += g;
      }
      const double dh = g * gain[j];
      sum_dh[j] += dh;
      sum_dh_h[j] += dh * standardized(i, j);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double dh = dy(i, j) * gain[j];
      dy(i, j) = inv_std[j] * (dh - inv_n * sum_dh[j] - standardized(i, j) * inv_n * sum_dh_h[j]);
    }
  }
}

}  // namespace

void Mlp::initialize(std::span<double> params, Rng& rng) const {
  if (params.size() < end_offset()) throw ConfigError("parameter buffer too small for MLP");
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(spec_.widths[l]));
    for (double& w : weight(params, l)) w = rng.uniform(-bound, bound);
    for (double& b : bias(params, l)) b = 0.0;
    if (normalized(l)) {
      for (double& g : gain(params, l)) g = 1.0;
      for (double& s : shift(params, l)) s = 0.0;
    }
  }
}

Matrix Mlp::forward(std::span<const double> params, const Matrix& x, MlpTrace* trace) const {
  if (x.cols() != in_width()) {
    throw ConfigError("MLP input width " + std::to_string(x.cols()) + " does not match expected " +
                      std::to_string(in_width()));
  }
  if (params.size() < end_offset()) throw ConfigError("parameter buffer too small for MLP");
  if (trace) {
    trace->activations.resize(layer_count() + 1);
    trace->activations[0] = x;
    trace->normalized.assign(layer_count(), Matrix());
    trace->inv_std.assign(layer_count(), {});
  }
  Matrix cur;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    Matrix next;
    kernels::dense_forward(l == 0 ? x : cur, weight(params, l), bias(params, l),
                           spec_.widths[l + 1], next);
    if (normalized(l)) {
      normalize_columns(next, gain(params, l), shift(params, l),
                        trace ? &trace->normalized[l] : nullptr,
                        trace ? &trace->inv_std[l] : nullptr);
    }
    if (activated(l)) kernels::relu_inplace(next);
    if (trace) trace->activations[l + 1] = next;
    cur = std::move(next);
  }
  return cur;
}

void Mlp::backward(std::span<const double> params, const MlpTrace& trace, Matrix dy,
                   std::span<double> grad, Matrix* dx) const {
  if (trace.activations.size() != layer_count() + 1) throw ConfigError("MLP trace is incomplete");
  if (dy.cols() != out_width()) throw ConfigError("MLP output gradient has the wrong width");
  for (std::size_t l = layer_count(); l-- > 0;) {
    if (activated(l)) kernels::relu_backward_inplace(dy, trace.activations[l + 1]);
    if (normalized(l)) {
      if (trace.normalized.size() != layer_count()) throw ConfigError("MLP trace is incomplete");
      normalize_backward(dy, trace.normalized[l], trace.inv_std[l], gain(params, l),
                         grad.empty() ? std::span<double>() : gain(grad, l),
                         grad.empty() ? std::span<double>() : shift(grad, l));
    }
    if (!grad.empty()) {
      kernels::dense_backward_params(trace.activations[l], dy, weight(grad, l), bias(grad, l));
    }
    if (l > 0 || dx != nullptr) {
      Matrix dprev;
      kernels::dense_backward_input(dy, weight(params, l), spec_.widths[l], dprev);
      dy = std::move(dprev);
    }
  }
  if (dx) *dx = std::move(dy);
}

PerPointFeatures shared_mlp_forward(const Mlp& mlp, std::span<const double> params,
                                    const PerPointFeatures& input) {
  return mlp.forward(params, input);
}

ShapeFeature max_pool_points(const PerPointFeatures& input) {
  if (input.rows() == 0) throw InvalidInput("max_pool_points: no points");
  ShapeFeature out{std::vector<double>(input.cols()), std::vector<std::size_t>(input.cols())};
  kernels::max_pool_rows(input, out.values, out.argmax);
  return out;
}

void max_pool_backward(const ShapeFeature& pooled, std::span<const double> d_pooled,
                       PerPointFeatures& d_input) {
  if (d_pooled.size() != pooled.argmax.size() || d_input.cols() != pooled.argmax.size()) {
    throw ConfigError("max_pool_backward: width mismatch");
  }
  for (std::size_t c = 0; c < d_pooled.size(); ++c) d_input(pooled.argmax[c], c) += d_pooled[c];
}

std::vector<double> fc_head_forward(const Mlp& mlp, std::span<const double> params,
                                    std::span<const double> input) {
  Matrix x(1, input.size(), std::vector<double>(input.begin(), input.end()));
  Matrix y = mlp.forward(params, x);
  return {y.values().begin(), y.values().end()};
}

}  // namespace pointaugment
