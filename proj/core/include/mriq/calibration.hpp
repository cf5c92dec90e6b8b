#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mriq {

/// Heuristic scores of one slice's m_t graded versions plus the rater's
/// "minimum acceptable" pick h. h = 0 and h = m_t + 1 are the two
/// out-of-range choices (everything acceptable / nothing acceptable).
struct VersionSet {
  std::string slice_id;
  std::string scan_type;
  std::string subject_id;
  int slice_index = 0;
  std::vector<double> heuristic;  // y^[v] for v = 1..m_t at index v-1
  std::optional<int> human_label;

  int m_t() const { return static_cast<int>(heuristic.size()); }
};

struct CalibratedLabels {
  std::vector<std::vector<double>> scores;  // per set, per version
  double mu_h = 0.0;
  double eta = 1.0;
};

inline constexpr double kDefaultEta = 0.85;

enum class CalibrationScope {
  kGlobal,
  kPerScanType,  // experimental: one anchor per scan type
};

/// Unlabeled sets copy h from the nearest labeled set of the same subject;
/// ties go to the lower slice index.
std::vector<VersionSet> propagate_labels(std::span<const VersionSet> sets);

/// The value the set is anchored with: y^[h] in range, linear
/// extrapolation beyond either end.
double anchor_score(const VersionSet& set);

/// Mean of y^[h] over sets with an in-range label.
double calibration_mean(std::span<const VersionSet> sets);

/// Shifts every version of set i by eta * (mu_h - anchor_i).
CalibratedLabels calibrate(std::span<const VersionSet> sets, double eta = kDefaultEta,
                           CalibrationScope scope = CalibrationScope::kGlobal);

/// The shift alone, with a caller-provided anchor and no range check on eta.
std::vector<std::vector<double>> apply_calibration_shift(std::span<const VersionSet> sets, double mu_h,
                                                         double eta);

}  // namespace mriq
