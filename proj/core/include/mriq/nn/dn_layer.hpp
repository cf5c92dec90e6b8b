#pragma once

#include <string>

#include "mriq/nn/parameter.hpp"
#include "mriq/nn/tensor.hpp"

namespace mriq::nn {

/// Divisive normalization across channels at every spatial location:
///   a_j = z_j / sqrt(beta_j + sum_k gamma_jk z_k^2)
/// beta (C) and gamma (C x C) are shared over space.
class DnLayer {
 public:
  struct Cache {
    Tensor input;
    RowMatrix denominator;  // C x P, beta + gamma * z^2
  };

  DnLayer() = default;
  DnLayer(const std::string& name, int channels, ParamGroup group);

  int channels() const { return channels_; }

  Tensor forward(const Tensor& z, Cache* cache = nullptr) const;
  /// Accumulates d beta / d gamma into the parameters' grad buffers and
  /// returns dL/dz.
  Tensor backward(const Tensor& grad_out, const Cache& cache);

  Parameter beta;   // C, >= kDnBetaMin
  Parameter gamma;  // C x C row-major, >= 0

 private:
  int channels_ = 0;
};

struct DnGradients {
  Tensor input;
  std::vector<double> beta;
  std::vector<double> gamma;
};

Tensor dn_forward(const Tensor& z, const DnLayer& layer);
/// Stateless gradient of the layer at z for the given upstream gradient.
DnGradients dn_backward(const Tensor& upstream, const Tensor& z, const DnLayer& layer);

}  // namespace mriq::nn
