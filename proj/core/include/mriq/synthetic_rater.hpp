#pragma once

#include <random>
#include <span>

namespace mriq {

/// Stand-in for a human rater on simulated data: the "minimum acceptable"
/// version is the first whose noise level clears a personal standard that
/// wobbles from set to set.
struct RaterModel {
  double standard_db = 21.0;
  double jitter_db = 1.5;
};

/// levels_db[v-1] is the SNR of version v (v = 1..m_t, +inf allowed for the
/// clean one). The virtual version 0 sits at 2*L1 - L2. Returns h in
/// [0, m_t + 1].
int rater_pick(std::span<const double> levels_db, double standard_db);
int rater_pick(std::span<const double> levels_db, const RaterModel& model, std::mt19937_64& rng);

/// Index of the ruler level closest to `level_db` (ties to the larger index).
int proxy_ruler_score(std::span<const double> ruler_levels_db, double level_db);

}  // namespace mriq
