#include "mriq/nn/tensor.hpp"

#include <algorithm>

namespace mriq::nn {

Tensor Tensor::from_image(const RealImage& img) {
  Tensor t(1, img.rows(), img.cols());
  std::copy(img.values().begin(), img.values().end(), t.data.begin());
  return t;
}

}  // namespace mriq::nn
