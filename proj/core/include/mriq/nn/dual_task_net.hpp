#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "mriq/grid.hpp"
#include "mriq/nn/dn_layer.hpp"
#include "mriq/nn/layers.hpp"

namespace mriq::nn {

struct NetConfig {
  int input_size = 128;
  std::array<int, 3> trunk_channels{16, 32, 64};
  std::array<int, 3> trunk_kernels{5, 3, 3};
  int branch_channels = 64;
  int branch_kernel = 3;
  bool noise_branch = true;
  bool motion_branch = true;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

enum class Task { kNoise, kMotion };

struct NetOutput {
  double noise_score = std::numeric_limits<double>::quiet_NaN();
  double motion_probability = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr double kMotionThreshold = 0.5;

/// Shared conv+DN trunk (three stride-2 stages) feeding a noise branch
/// (conv+DN, pool, affine -> raw score) and a motion branch (conv, batch
/// standardization, rectifier, pool, affine, sigmoid -> probability).
class DualTaskNet {
 public:
  explicit DualTaskNet(const NetConfig& config = {}, std::uint64_t seed = 0);

  const NetConfig& config() const { return config_; }

  /// Inference mode (running statistics in the motion branch).
  NetOutput forward(const RealImage& image) const;

  struct Batch {
    Task task = Task::kNoise;
    std::vector<const RealImage*> images;
    std::vector<double> targets;  // calibrated scores, or 1 = clean / 0 = motion
  };

  /// Loss and gradients for one batch; gradients land in the trunk and the
  /// batch's branch only (all grads are zeroed first).
  double compute_gradients(const Batch& batch);

  /// compute_gradients + Adam on the trunk and the active branch, followed
  /// by DN projection. Returns the batch loss.
  double train_step(const Batch& batch, const AdamConfig& adam);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<Parameter*> parameters(ParamGroup group);

  /// Non-trainable buffers (batch-standardization running statistics).
  std::vector<std::pair<std::string, std::vector<double>*>> buffers();

  void set_noise_bias(double value);

  // Exposed for tests and the checkpoint writer.
  Conv2D conv[3];
  DnLayer dn[3];
  Conv2D noise_conv;
  DnLayer noise_dn;
  Dense noise_head;
  Conv2D motion_conv;
  BatchNorm motion_bn;
  Dense motion_head;

 private:
  struct TrunkCache {
    Conv2D::Cache conv[3];
    DnLayer::Cache dn[3];
  };

  Tensor trunk_forward(const Tensor& x, TrunkCache* cache) const;
  void trunk_backward(const Tensor& grad, const TrunkCache& cache);
  void check_input(const RealImage& image) const;

  NetConfig config_;
};

}  // namespace mriq::nn
