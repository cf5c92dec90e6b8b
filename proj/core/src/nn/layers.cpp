#include "mriq/nn/layers.hpp"

#include <cmath>

#include "mriq/error.hpp"

namespace mriq::nn {

namespace {

void im2col(const Tensor& x, int k, int stride, int pad, int oh, int ow, RowMatrix& cols) {
  cols.resize(static_cast<Eigen::Index>(x.channels) * k * k, static_cast<Eigen::Index>(oh) * ow);
  for (int c = 0; c < x.channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols.row((c * k + ky) * k + kx).data();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          double* dst = row + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= x.height) {
            std::fill(dst, dst + ow, 0.0);
            continue;
          }
          const double* src = &x.data[(static_cast<std::size_t>(c) * x.height + iy) * x.width];
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < x.width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const RowMatrix& cols, int k, int stride, int pad, int oh, int ow, Tensor& x) {
  std::fill(x.data.begin(), x.data.end(), 0.0);
  for (int c = 0; c < x.channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols.row((c * k + ky) * k + kx).data();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= x.height) continue;
          double* dst = &x.data[(static_cast<std::size_t>(c) * x.height + iy) * x.width];
          const double* src = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < x.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Conv2D::Conv2D(const std::string& name, int in_channels, int out_channels, int kernel, int stride,
               ParamGroup group)
    : weight(name + ".weight", {out_channels, in_channels, kernel, kernel}, group),
      bias(name + ".bias", {out_channels}, group),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1)
    throw InvalidArgument("Conv2D: non-positive dimension");
}

void Conv2D::init_uniform(std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(in_channels_) * kernel_ * kernel_;
  const double bound = std::sqrt(6.0 / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& w : weight.value) w = dist(rng);
  std::fill(bias.value.begin(), bias.value.end(), 0.0);
}

Tensor Conv2D::forward(const Tensor& x, Cache* cache) const {
  if (x.channels != in_channels_) throw InvalidArgument("Conv2D: channel mismatch");
  const int oh = out_size(x.height), ow = out_size(x.width);
  RowMatrix local;
  RowMatrix& cols = cache ? cache->columns : local;
  im2col(x, kernel_, stride_, padding(), oh, ow, cols);
  if (cache) {
    cache->in_h = x.height;
    cache->in_w = x.width;
  }
  Tensor out(out_channels_, oh, ow);
  ConstMatrixMap w(weight.value.data(), out_channels_, static_cast<Eigen::Index>(in_channels_) * kernel_ * kernel_);
  Eigen::Map<const Eigen::VectorXd> b(bias.value.data(), out_channels_);
  auto y = out.matrix();
  y.noalias() = w * cols;
  y.colwise() += b;
  return out;
}

Tensor Conv2D::backward(const Tensor& grad_out, const Cache& cache, bool want_input_grad) {
  const Eigen::Index kk = static_cast<Eigen::Index>(in_channels_) * kernel_ * kernel_;
  auto g = grad_out.matrix();
  MatrixMap dw(weight.grad.data(), out_channels_, kk);
  dw.noalias() += g * cache.columns.transpose();
  for (int o = 0; o < out_channels_; ++o) bias.grad[o] += row_sum(g.row(o));
  if (!want_input_grad) return {};
  ConstMatrixMap w(weight.value.data(), out_channels_, kk);
  RowMatrix dcols = w.transpose() * g;
  Tensor dx(in_channels_, cache.in_h, cache.in_w);
  col2im(dcols, kernel_, stride_, padding(), grad_out.height, grad_out.width, dx);
  return dx;
}

BatchNorm::BatchNorm(const std::string& name, int channels, ParamGroup group)
    : scale(name + ".scale", {channels}, group),
      shift(name + ".shift", {channels}, group),
      running_mean(static_cast<std::size_t>(channels), 0.0),
      running_var(static_cast<std::size_t>(channels), 1.0) {
  std::fill(scale.value.begin(), scale.value.end(), 1.0);
}

std::vector<Tensor> BatchNorm::forward_train(const std::vector<Tensor>& x, Cache& cache) {
  if (x.empty()) throw InvalidArgument("BatchNorm: empty batch");
  const int c = x.front().channels;
  const int p = x.front().spatial();
  const double m = static_cast<double>(p) * static_cast<double>(x.size());
  cache.normalized.assign(x.size(), Tensor());
  cache.inv_std.assign(static_cast<std::size_t>(c), 0.0);
  std::vector<Tensor> out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    cache.normalized[n] = Tensor(c, x[n].height, x[n].width);
    out[n] = Tensor(c, x[n].height, x[n].width);
  }
  for (int ch = 0; ch < c; ++ch) {
    double mean = 0.0;
    for (const auto& t : x) mean += row_sum(t.matrix().row(ch));
    mean /= m;
    double var = 0.0;
    for (const auto& t : x)
      for (double v : t.matrix().row(ch)) var += (v - mean) * (v - mean);
    var /= m;
    const double inv = 1.0 / std::sqrt(var + epsilon);
    cache.inv_std[ch] = inv;
    for (std::size_t n = 0; n < x.size(); ++n) {
      auto xn = cache.normalized[n].matrix().row(ch);
      xn = (x[n].matrix().row(ch).array() - mean) * inv;
      out[n].matrix().row(ch) = xn.array() * scale.value[ch] + shift.value[ch];
    }
    running_mean[ch] = (1.0 - momentum) * running_mean[ch] + momentum * mean;
    const double unbiased = m > 1.0 ? var * m / (m - 1.0) : var;
    running_var[ch] = (1.0 - momentum) * running_var[ch] + momentum * unbiased;
  }
  return out;
}

Tensor BatchNorm::forward_infer(const Tensor& x) const {
  Tensor out(x.channels, x.height, x.width);
  for (int ch = 0; ch < x.channels; ++ch) {
    const double inv = 1.0 / std::sqrt(running_var[ch] + epsilon);
    out.matrix().row(ch) =
        (x.matrix().row(ch).array() - running_mean[ch]) * (inv * scale.value[ch]) + shift.value[ch];
  }
  return out;
}

std::vector<Tensor> BatchNorm::backward(const std::vector<Tensor>& grad_out, const Cache& cache) {
  const int c = grad_out.front().channels;
  const double m = static_cast<double>(grad_out.front().spatial()) * static_cast<double>(grad_out.size());
  std::vector<Tensor> dx(grad_out.size());
  for (std::size_t n = 0; n < grad_out.size(); ++n)
    dx[n] = Tensor(c, grad_out[n].height, grad_out[n].width);
  for (int ch = 0; ch < c; ++ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < grad_out.size(); ++n) {
      auto g = grad_out[n].matrix().row(ch);
      sum_g += row_sum(g);
      const auto xn = cache.normalized[n].matrix().row(ch);
      for (Eigen::Index i = 0; i < g.size(); ++i) sum_gx += g[i] * xn[i];
    }
    scale.grad[ch] += sum_gx;
    shift.grad[ch] += sum_g;
    const double k = scale.value[ch] * cache.inv_std[ch] / m;
    for (std::size_t n = 0; n < grad_out.size(); ++n) {
      dx[n].matrix().row(ch) = k * (m * grad_out[n].matrix().row(ch).array() - sum_g -
                                    cache.normalized[n].matrix().row(ch).array() * sum_gx);
    }
  }
  return dx;
}

Dense::Dense(const std::string& name, int inputs, ParamGroup group)
    : weight(name + ".weight", {inputs}, group), bias(name + ".bias", {1}, group) {}

void Dense::init_uniform(std::mt19937_64& rng, double scale) {
  const double bound = scale * std::sqrt(3.0 / static_cast<double>(weight.size()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& w : weight.value) w = dist(rng);
  bias.value[0] = 0.0;
}

double Dense::forward(const std::vector<double>& x) const {
  double acc = bias.value[0];
  for (std::size_t i = 0; i < x.size(); ++i) acc += weight.value[i] * x[i];
  return acc;
}

std::vector<double> Dense::backward(double grad_out, const std::vector<double>& x) {
  std::vector<double> dx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    weight.grad[i] += grad_out * x[i];
    dx[i] = grad_out * weight.value[i];
  }
  bias.grad[0] += grad_out;
  return dx;
}

std::vector<double> global_average_pool(const Tensor& x) {
  std::vector<double> out(static_cast<std::size_t>(x.channels));
  const auto m = x.matrix();
  for (int c = 0; c < x.channels; ++c) out[c] = row_sum(m.row(c)) / static_cast<double>(m.cols());
  return out;
}

Tensor global_average_pool_backward(const std::vector<double>& grad, int channels, int height, int width) {
  Tensor dx(channels, height, width);
  const double inv = 1.0 / (static_cast<double>(height) * width);
  for (int c = 0; c < channels; ++c) dx.matrix().row(c).setConstant(grad[c] * inv);
  return dx;
}

void relu_inplace(Tensor& x) {
  for (auto& v : x.data) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(Tensor& grad, const Tensor& output) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(output.data[i] > 0.0)) grad.data[i] = 0.0;
}

}  // namespace mriq::nn
