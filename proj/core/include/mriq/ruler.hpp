#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mriq/kspace.hpp"
#include "mriq/nn/dual_task_net.hpp"

namespace mriq {

struct RulerThreshold {
  int t_a = 0;
  int t_b = 0;
  friend bool operator==(const RulerThreshold&, const RulerThreshold&) = default;
};

/// m_r graded versions of one reference slice, v = 0 (noisiest) .. m_r-1
/// (the acquired image), with the network's raw score for each.
struct ImageRuler {
  std::string scan_type;
  std::vector<MagnitudeImage> versions;
  std::vector<double> target_db;  // +inf for the last version
  std::optional<std::vector<double>> scores;
  std::optional<RulerThreshold> threshold;
  std::string checkpoint_hash;

  int m_r() const { return static_cast<int>(versions.size()); }
};

struct DbRange {
  double low_db = 0.0;
  double high_db = 0.0;
};

/// Ruler range must strictly contain the training range at both ends.
void check_ruler_range(const DbRange& ruler, const DbRange& training);

/// Noisy versions at linearly spaced targets over `range` plus the clean
/// version. Pixels are rounded to float32 so the IMG files reproduce them.
ImageRuler build_ruler(const KSpaceVolume& acquired, int m_r, const DbRange& range, const DbRange& training,
                       std::uint64_t seed);
ImageRuler build_ruler(const Phantom& phantom, const CoilMaps& maps, int m_r, const DbRange& range,
                       const DbRange& training, std::uint64_t seed, int etl = 8);

void cache_scores(ImageRuler& ruler, const nn::DualTaskNet& net);

void set_threshold(ImageRuler& ruler, RulerThreshold t);

/// argmin_v |S[v] - raw|, ties to the larger v.
int ruler_score(const ImageRuler& ruler, double raw);

/// (S[t_a] + S[t_b]) / 2.
double pass_threshold(const ImageRuler& ruler);
bool pass_fail(const ImageRuler& ruler, double raw);

/// Default for rulers nobody has thresholded yet: both ends at version 3,
/// clipped for short rulers.
RulerThreshold default_threshold(int m_r);

using RulerRegistry = std::map<std::string, ImageRuler>;

enum class RulerMatch {
  kExactOnly,
  kFatSuppressionFallback,
};

/// Exact scan-type match, else (unless strict) the first registered ruler
/// with the same fat-suppression tag.
const ImageRuler& select_ruler(const RulerRegistry& registry, const std::string& scan_type,
                               RulerMatch mode = RulerMatch::kFatSuppressionFallback);

/// Registry layout: <dir>/<scan_type>/ruler.json + v<k>.img/.json.
void save_ruler(const std::filesystem::path& dir, const ImageRuler& ruler);
ImageRuler load_ruler(const std::filesystem::path& dir);
void save_registry(const std::filesystem::path& dir, const RulerRegistry& registry);
RulerRegistry load_registry(const std::filesystem::path& dir);

}  // namespace mriq
