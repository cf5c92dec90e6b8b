#pragma once

#include <span>
#include <vector>

namespace mriq::nn {

inline constexpr double kProbabilityEpsilon = 1e-7;

/// sqrt(mean (target - prediction)^2).
double loss_noise(std::span<const double> predictions, std::span<const double> targets);
/// dL/dprediction for loss_noise; zero when the loss is zero.
std::vector<double> loss_noise_grad(std::span<const double> predictions, std::span<const double> targets);

/// Mean binary cross-entropy with probabilities clamped to [eps, 1-eps].
double loss_motion(std::span<const double> probabilities, std::span<const double> targets);

}  // namespace mriq::nn
