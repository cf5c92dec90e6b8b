#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mriq {

struct BinaryMetrics {
  double accuracy = 0.0;
  // confusion[label][prediction], index 1 = pass
  std::array<std::array<long, 2>, 2> confusion{};
  long total() const { return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1]; }
};

BinaryMetrics binary_metrics(const std::vector<bool>& predicted, const std::vector<bool>& labels);

double ruler_score_mae(std::span<const int> predicted, std::span<const int> labels);

/// counts[label][prediction] over categories 0..categories-1.
std::vector<std::vector<long>> ruler_confusion(std::span<const int> predicted, std::span<const int> labels,
                                               int categories);

/// Interval-metric Krippendorff's alpha for two raters rating the same items.
double krippendorff_alpha(std::span<const double> rater_a, std::span<const double> rater_b);

struct AlphaEstimate {
  double alpha = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Point estimate plus a 95% interval alpha +- 1.96 * (bootstrap standard
/// error over item resamples). Resamples with no expected disagreement are
/// skipped.
AlphaEstimate krippendorff_alpha_ci(std::span<const double> rater_a, std::span<const double> rater_b,
                                    int resamples = 1000, std::uint64_t seed = 0);

/// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> x);

double spearman(std::span<const double> x, std::span<const double> y);

struct EvalReport {
  double accuracy = 0.0;
  double score_mae = 0.0;
  BinaryMetrics binary;
  std::vector<std::vector<long>> confusion_ruler;
  AlphaEstimate krippendorff;
  bool has_alpha = false;
  double spearman = 0.0;
  double motion_accuracy = 0.0;
  bool has_motion = false;
  long test_size = 0;
};

std::string report_json(const EvalReport& r);
std::string report_table(const EvalReport& r);

}  // namespace mriq
