#pragma once

#include <Eigen/Core>
#include <vector>

#include "mriq/grid.hpp"

namespace mriq::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Tensor buffers start on Eigen's maximum alignment. Vectorized loops peel
/// scalar iterations up to the first aligned element, and the packet (FMA)
/// and scalar paths round differently, so a fixed alignment is what keeps
/// training bit-reproducible.
using TensorStorage = std::vector<double, Eigen::aligned_allocator<double>>;

/// Channel-major feature map (C x H x W).
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  TensorStorage data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  int spatial() const { return height * width; }
  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

  /// C x (H*W) view.
  MatrixMap matrix() { return MatrixMap(data.data(), channels, spatial()); }
  ConstMatrixMap matrix() const { return ConstMatrixMap(data.data(), channels, spatial()); }

  static Tensor from_image(const RealImage& img);
};

/// Sequential sum of a row. Eigen's vectorized reductions peel elements up
/// to the first aligned address, so their rounding depends on where the
/// buffer happens to live; training must not.
template <typename Row>
double row_sum(const Row& row) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) acc += row[i];
  return acc;
}

}  // namespace mriq::nn
