#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mriq/nn/parameter.hpp"
#include "mriq/nn/tensor.hpp"

namespace mriq::nn {

/// 2D convolution with zero padding k/2, lowered to a GEMM over im2col
/// columns.
class Conv2D {
 public:
  struct Cache {
    RowMatrix columns;  // (cin*k*k) x (out_h*out_w)
    int in_h = 0, in_w = 0;
  };

  Conv2D() = default;
  Conv2D(const std::string& name, int in_channels, int out_channels, int kernel, int stride, ParamGroup group);

  void init_uniform(std::mt19937_64& rng);

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }
  int padding() const { return kernel_ / 2; }
  int out_size(int in) const { return (in + 2 * padding() - kernel_) / stride_ + 1; }

  Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
  /// Accumulates weight/bias gradients; returns the input gradient when
  /// requested (empty tensor otherwise).
  Tensor backward(const Tensor& grad_out, const Cache& cache, bool want_input_grad);

  Parameter weight;  // out x in x k x k
  Parameter bias;    // out

 private:
  int in_channels_ = 0, out_channels_ = 0, kernel_ = 1, stride_ = 1;
};

/// Per-channel batch standardization with affine scale/shift. Training mode
/// normalizes with the batch statistics and updates running estimates.
class BatchNorm {
 public:
  struct Cache {
    std::vector<Tensor> normalized;
    std::vector<double> inv_std;
  };

  BatchNorm() = default;
  BatchNorm(const std::string& name, int channels, ParamGroup group);

  std::vector<Tensor> forward_train(const std::vector<Tensor>& x, Cache& cache);
  Tensor forward_infer(const Tensor& x) const;
  std::vector<Tensor> backward(const std::vector<Tensor>& grad_out, const Cache& cache);

  Parameter scale;
  Parameter shift;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
};

/// Affine map from pooled features to one scalar.
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, int inputs, ParamGroup group);

  void init_uniform(std::mt19937_64& rng, double scale);
  double forward(const std::vector<double>& x) const;
  std::vector<double> backward(double grad_out, const std::vector<double>& x);

  Parameter weight;
  Parameter bias;
};

std::vector<double> global_average_pool(const Tensor& x);
Tensor global_average_pool_backward(const std::vector<double>& grad, int channels, int height, int width);

void relu_inplace(Tensor& x);
/// Zeroes gradient where the forward output was not positive.
void relu_backward_inplace(Tensor& grad, const Tensor& output);

}  // namespace mriq::nn
