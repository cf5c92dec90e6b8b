#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mriq/grid.hpp"
#include "mriq/nn/dual_task_net.hpp"

namespace mriq::nn {

/// One slice's graded versions with their calibrated targets.
struct NoiseSet {
  std::vector<RealImage> images;
  std::vector<double> targets;
};

struct MotionPair {
  RealImage corrupted;
  RealImage original;
};

enum class TrainMode { kNoise, kMotion, kDual };

struct EpochStats {
  int epoch = 0;
  double noise_loss = 0.0;   // mean over the epoch's noise batches
  double motion_loss = 0.0;  // mean over the epoch's motion batches
  int noise_steps = 0;
  int motion_steps = 0;
};

struct TrainConfig {
  TrainMode mode = TrainMode::kDual;
  int epochs = 30;
  AdamConfig adam{};
  std::uint64_t seed = 0;
  int sets_per_noise_batch = 2;
  int pairs_per_motion_batch = 5;
  NetConfig net{};
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  DualTaskNet net;
  std::vector<EpochStats> history;
};

/// The network train() starts from: seeded initialization with the noise
/// head's bias at the mean training target.
DualTaskNet initial_net(const std::vector<NoiseSet>& noise_data, const TrainConfig& config);

/// Alternates noise and motion mini-batches (dual mode) or runs a single
/// task. Deterministic for a fixed seed.
TrainResult train(const std::vector<NoiseSet>& noise_data, const std::vector<MotionPair>& motion_data,
                  const TrainConfig& config);

}  // namespace mriq::nn
