#include "mriq/nn/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mriq/error.hpp"

namespace mriq::nn {

namespace {

void check(std::size_t a, std::size_t b) {
  if (a == 0) throw InvalidArgument("loss: empty batch");
  if (a != b) throw InvalidArgument("loss: length mismatch");
}

}  // namespace

double loss_noise(std::span<const double> predictions, std::span<const double> targets) {
  check(predictions.size(), targets.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = targets[i] - predictions[i];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(predictions.size()));
}

std::vector<double> loss_noise_grad(std::span<const double> predictions, std::span<const double> targets) {
  const double l = loss_noise(predictions, targets);
  std::vector<double> g(predictions.size(), 0.0);
  if (l == 0.0) return g;
  const double k = 1.0 / (static_cast<double>(predictions.size()) * l);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = k * (predictions[i] - targets[i]);
  return g;
}

double loss_motion(std::span<const double> probabilities, std::span<const double> targets) {
  check(probabilities.size(), targets.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = std::clamp(probabilities[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    acc -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
  }
  return acc / static_cast<double>(probabilities.size());
}

}  // namespace mriq::nn
