#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mriq/kspace.hpp"

namespace mriq {

enum class HeuristicMethod { kSnr, kBlockDct };

std::string_view to_string(HeuristicMethod m);
HeuristicMethod heuristic_method_from_string(std::string_view name);

/// y = Q(x), higher means cleaner.
struct HeuristicScore {
  double value = 0.0;
  HeuristicMethod method = HeuristicMethod::kSnr;
  std::string slice_id;
  int version = 0;
};

/// Reference-based SNR over a version set ordered v = 1..m_t, the last one
/// being the reference. The reference's own score is extrapolated linearly
/// from the two versions below it.
std::vector<HeuristicScore> snr_heuristic(std::span<const MagnitudeImage> set);

/// Noise standard deviation from 8x8 block DCTs: keep the half of the blocks
/// with least low-frequency (1 <= u+v <= 4) energy, pool their u+v >= 8
/// coefficients and take 1.4826 * median(|c|).
double block_dct_sigma(const RealImage& img);

inline constexpr double kBlockDctEpsilon = 1e-8;

/// -10 log10(max(sigma^2, 1e-8)).
double block_dct_score(double sigma);
HeuristicScore block_dct_heuristic(const MagnitudeImage& img);

std::vector<HeuristicScore> compute_heuristics(std::span<const MagnitudeImage> set, HeuristicMethod method);

}  // namespace mriq
