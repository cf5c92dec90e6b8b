#include "mriq/nn/dn_layer.hpp"

#include <algorithm>

#include "mriq/error.hpp"

namespace mriq::nn {

namespace {

RowMatrix denominator(const ConstMatrixMap& z, const DnLayer& layer) {
  const int c = layer.channels();
  const RowMatrix z2 = z.array().square().matrix();
  // Channel mixing as row updates rather than a GEMM: the small-matrix
  // kernels round differently depending on buffer alignment.
  RowMatrix d(c, z.cols());
  for (int j = 0; j < c; ++j) {
    d.row(j).setConstant(layer.beta.value[j]);
    for (int k = 0; k < c; ++k) d.row(j) += layer.gamma.value[static_cast<std::size_t>(j) * c + k] * z2.row(k);
  }
  return d;
}

}  // namespace

DnLayer::DnLayer(const std::string& name, int channels, ParamGroup group)
    : beta(name + ".beta", {channels}, group, Constraint::kDnBeta),
      gamma(name + ".gamma", {channels, channels}, group, Constraint::kNonNegative),
      channels_(channels) {
  if (channels < 1) throw InvalidArgument("DnLayer: channels < 1");
  std::fill(beta.value.begin(), beta.value.end(), 1.0);
  for (int j = 0; j < channels; ++j) gamma.value[static_cast<std::size_t>(j) * channels + j] = 0.1;
}

Tensor DnLayer::forward(const Tensor& z, Cache* cache) const {
  if (z.channels != channels_) throw InvalidArgument("DnLayer: channel mismatch");
  RowMatrix d = denominator(z.matrix(), *this);
  Tensor a(z.channels, z.height, z.width);
  // sqrt then divide: both are correctly rounded in packet and scalar code,
  // unlike Eigen's fast rsqrt, so results do not depend on buffer alignment.
  a.matrix() = z.matrix().array() / d.array().sqrt();
  if (cache) {
    cache->input = z;
    cache->denominator = std::move(d);
  }
  return a;
}

Tensor DnLayer::backward(const Tensor& grad_out, const Cache& cache) {
  const int c = channels_;
  const auto z = cache.input.matrix();
  const auto g = grad_out.matrix();
  const auto& d = cache.denominator;
  // dL/dD_j = -1/2 g_j z_j D_j^{-3/2}
  RowMatrix q = -0.5 * g.array() * z.array() / (d.array().sqrt() * d.array());
  RowMatrix mixed = RowMatrix::Zero(c, z.cols());  // gamma^T q
  for (int j = 0; j < c; ++j)
    for (int k = 0; k < c; ++k) mixed.row(k) += gamma.value[static_cast<std::size_t>(j) * c + k] * q.row(j);

  Tensor dz(c, cache.input.height, cache.input.width);
  dz.matrix() = g.array() / d.array().sqrt() + 2.0 * z.array() * mixed.array();

  const RowMatrix z2 = z.array().square().matrix();
  for (int j = 0; j < c; ++j) {
    beta.grad[j] += row_sum(q.row(j));
    for (int k = 0; k < c; ++k) {
      double acc = 0.0;
      for (Eigen::Index p = 0; p < z2.cols(); ++p) acc += q(j, p) * z2(k, p);
      gamma.grad[static_cast<std::size_t>(j) * c + k] += acc;
    }
  }
  return dz;
}

Tensor dn_forward(const Tensor& z, const DnLayer& layer) { return layer.forward(z); }

DnGradients dn_backward(const Tensor& upstream, const Tensor& z, const DnLayer& layer) {
  DnLayer scratch = layer;
  scratch.beta.zero_grad();
  scratch.gamma.zero_grad();
  DnLayer::Cache cache;
  scratch.forward(z, &cache);
  DnGradients out;
  out.input = scratch.backward(upstream, cache);
  out.beta = scratch.beta.grad;
  out.gamma = scratch.gamma.grad;
  return out;
}

}  // namespace mriq::nn
