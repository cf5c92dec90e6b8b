#include "mriq/synthetic_rater.hpp"

#include <cmath>

#include "mriq/error.hpp"

namespace mriq {

int rater_pick(std::span<const double> levels_db, double standard_db) {
  const int m_t = static_cast<int>(levels_db.size());
  if (m_t < 2) throw InvalidArgument("rater_pick: need at least two versions");
  if (2.0 * levels_db[0] - levels_db[1] >= standard_db) return 0;
  for (int v = 1; v <= m_t; ++v)
    if (levels_db[v - 1] >= standard_db) return v;
  return m_t + 1;
}

int rater_pick(std::span<const double> levels_db, const RaterModel& model, std::mt19937_64& rng) {
  std::normal_distribution<double> jitter(0.0, model.jitter_db);
  return rater_pick(levels_db, model.standard_db + jitter(rng));
}

int proxy_ruler_score(std::span<const double> ruler_levels_db, double level_db) {
  if (ruler_levels_db.empty()) throw InvalidArgument("proxy_ruler_score: empty ruler");
  int best = 0;
  double best_d = std::abs(ruler_levels_db[0] - level_db);
  for (int v = 1; v < static_cast<int>(ruler_levels_db.size()); ++v) {
    const double d = std::abs(ruler_levels_db[v] - level_db);
    if (d <= best_d) {
      best = v;
      best_d = d;
    }
  }
  return best;
}

}  // namespace mriq
