#include "mriq/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mriq/error.hpp"
#include "mriq/rng.hpp"

namespace mriq::nn {

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::size_t count, int per_batch, std::mt19937_64& rng) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < count; i += static_cast<std::size_t>(per_batch)) {
    const std::size_t end = std::min(count, i + static_cast<std::size_t>(per_batch));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

void check_noise_data(const std::vector<NoiseSet>& data) {
  for (const auto& s : data) {
    if (s.images.size() != s.targets.size()) throw MissingLabel("noise set without one target per version");
    for (double t : s.targets)
      if (!std::isfinite(t)) throw MissingLabel("noise set has a non-finite calibrated target");
  }
}

}  // namespace

DualTaskNet initial_net(const std::vector<NoiseSet>& noise_data, const TrainConfig& config) {
  NetConfig net_cfg = config.net;
  net_cfg.noise_branch = config.mode != TrainMode::kMotion;
  net_cfg.motion_branch = config.mode != TrainMode::kNoise;
  DualTaskNet net(net_cfg, derive_seed(config.seed, {1}));
  if (net_cfg.noise_branch) {
    // Start the regression head at the mean target so early steps shape
    // features instead of chasing the offset.
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : noise_data) {
      sum += std::accumulate(s.targets.begin(), s.targets.end(), 0.0);
      count += s.targets.size();
    }
    if (count > 0) net.set_noise_bias(sum / static_cast<double>(count));
  }
  return net;
}

TrainResult train(const std::vector<NoiseSet>& noise_data, const std::vector<MotionPair>& motion_data,
                  const TrainConfig& config) {
  if (config.epochs < 0) throw InvalidArgument("train: epochs < 0");
  if (config.sets_per_noise_batch < 1 || config.pairs_per_motion_batch < 1)
    throw InvalidArgument("train: batch sizes must be positive");
  const bool use_noise = config.mode != TrainMode::kMotion;
  const bool use_motion = config.mode != TrainMode::kNoise;
  if (use_noise && noise_data.empty()) throw MissingLabel("train: no calibrated noise data");
  if (use_motion && motion_data.empty()) throw MissingLabel("train: no motion pairs");
  if (use_noise) check_noise_data(noise_data);

  TrainResult result{initial_net(noise_data, config), {}};
  DualTaskNet& net = result.net;

  std::mt19937_64 rng(derive_seed(config.seed, {2}));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::vector<std::size_t>> noise_batches, motion_batches;
    if (use_noise) noise_batches = make_batches(noise_data.size(), config.sets_per_noise_batch, rng);
    if (use_motion) motion_batches = make_batches(motion_data.size(), config.pairs_per_motion_batch, rng);

    EpochStats stats;
    stats.epoch = epoch;
    const std::size_t rounds = std::max(noise_batches.size(), motion_batches.size());
    for (std::size_t r = 0; r < rounds; ++r) {
      if (r < noise_batches.size()) {
        DualTaskNet::Batch b;
        b.task = Task::kNoise;
        for (std::size_t idx : noise_batches[r]) {
          for (std::size_t v = 0; v < noise_data[idx].images.size(); ++v) {
            b.images.push_back(&noise_data[idx].images[v]);
            b.targets.push_back(noise_data[idx].targets[v]);
          }
        }
        stats.noise_loss += net.train_step(b, config.adam);
        ++stats.noise_steps;
      }
      if (r < motion_batches.size()) {
        DualTaskNet::Batch b;
        b.task = Task::kMotion;
        for (std::size_t idx : motion_batches[r]) {
          b.images.push_back(&motion_data[idx].corrupted);
          b.targets.push_back(0.0);
          b.images.push_back(&motion_data[idx].original);
          b.targets.push_back(1.0);
        }
        stats.motion_loss += net.train_step(b, config.adam);
        ++stats.motion_steps;
      }
    }
    if (stats.noise_steps > 0) stats.noise_loss /= stats.noise_steps;
    if (stats.motion_steps > 0) stats.motion_loss /= stats.motion_steps;
    result.history.push_back(stats);
    if (config.on_epoch) config.on_epoch(stats);
  }
  return result;
}

}  // namespace mriq::nn
