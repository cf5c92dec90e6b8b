#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "mriq/dataset.hpp"
#include "mriq/metrics.hpp"
#include "mriq/nn/trainer.hpp"
#include "mriq/ruler.hpp"

namespace mriq {

/// Reads a manifest entry's images back from a dataset directory.
SimulatedSlice load_slice(const std::filesystem::path& dataset_dir, const SliceRecord& record);

/// Version sets of one split with calibrated (or raw heuristic) targets.
std::vector<nn::NoiseSet> noise_sets(std::span<const SimulatedSlice> slices, Split split, bool calibrated);
std::vector<nn::MotionPair> motion_pairs(std::span<const SimulatedSlice> slices, Split split);

/// Pass level implied by a ruler's threshold: the mean effective SNR of
/// versions t_a and t_b.
double standard_level_db(const DatasetConfig& config, const ImageRuler& ruler);

/// Every version of every slice in `split`, scored and labeled with the
/// injected-level proxies (nearest ruler level, level >= standard).
struct NoiseEvaluation {
  std::vector<double> raw;
  std::vector<double> level_db;
  std::vector<int> rs_pred, rs_label;
  std::vector<bool> pf_pred, pf_label;
  std::vector<std::string> scan_type;
  std::vector<std::string> image_id;  // "<slice>_v<k>"
  EvalReport report;
};

NoiseEvaluation evaluate_noise(const nn::DualTaskNet& net, const RulerRegistry& registry,
                               const DatasetConfig& config, std::span<const SimulatedSlice> slices, Split split);

/// Recomputes the report from (possibly replaced) label vectors.
void refresh_report(NoiseEvaluation& e, int m_r);

/// Fraction of (corrupted, original) images classified correctly at p = 0.5
/// (p >= 0.5 means "no motion").
double motion_accuracy(const nn::DualTaskNet& net, std::span<const nn::MotionPair> pairs);

}  // namespace mriq
