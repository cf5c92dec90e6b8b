#include "mriq/calibration.hpp"

#include <cmath>
#include <cstdlib>
#include <map>

#include "mriq/error.hpp"

namespace mriq {
namespace {

void check_set(const VersionSet& s) {
  if (s.m_t() < 3) throw InvalidArgument("version set " + s.slice_id + ": need at least 3 versions");
  if (!s.human_label) throw MissingLabel("version set " + s.slice_id + " has no label");
  const int h = *s.human_label;
  if (h < 0 || h > s.m_t() + 1) throw InvalidArgument("version set " + s.slice_id + ": label out of range");
}

bool in_range(const VersionSet& s) { return *s.human_label >= 1 && *s.human_label <= s.m_t(); }

}  // namespace

std::vector<VersionSet> propagate_labels(std::span<const VersionSet> sets) {
  std::vector<VersionSet> out(sets.begin(), sets.end());
  std::map<std::string, std::vector<const VersionSet*>> labeled;
  for (const auto& s : sets)
    if (s.human_label) labeled[s.subject_id].push_back(&s);

  for (auto& s : out) {
    if (s.human_label) continue;
    auto it = labeled.find(s.subject_id);
    if (it == labeled.end()) throw MissingLabel("subject " + s.subject_id + " has no labeled slice");
    const VersionSet* best = nullptr;
    for (const VersionSet* cand : it->second) {
      if (!best) {
        best = cand;
        continue;
      }
      const int d = std::abs(cand->slice_index - s.slice_index);
      const int bd = std::abs(best->slice_index - s.slice_index);
      if (d < bd || (d == bd && cand->slice_index < best->slice_index)) best = cand;
    }
    s.human_label = best->human_label;
  }
  return out;
}

double anchor_score(const VersionSet& s) {
  check_set(s);
  const auto& y = s.heuristic;
  const int h = *s.human_label, m = s.m_t();
  if (h == 0) return 2.0 * y[0] - y[1];
  if (h == m + 1) return 2.0 * y[m - 1] - y[m - 2];
  return y[h - 1];
}

double calibration_mean(std::span<const VersionSet> sets) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : sets) {
    check_set(s);
    if (!in_range(s)) continue;
    sum += s.heuristic[*s.human_label - 1];
    ++n;
  }
  if (n == 0) throw DegenerateInput("calibration_mean: no set has an in-range label");
  return sum / n;
}

std::vector<std::vector<double>> apply_calibration_shift(std::span<const VersionSet> sets, double mu_h,
                                                         double eta) {
  std::vector<std::vector<double>> out;
  out.reserve(sets.size());
  for (const auto& s : sets) {
    const double shift = eta * (mu_h - anchor_score(s));
    std::vector<double> calibrated(s.heuristic);
    for (double& y : calibrated) y += shift;
    out.push_back(std::move(calibrated));
  }
  return out;
}

CalibratedLabels calibrate(std::span<const VersionSet> sets, double eta, CalibrationScope scope) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("calibrate: eta must be in (0, 1]");
  CalibratedLabels out;
  out.eta = eta;
  out.mu_h = calibration_mean(sets);
  if (scope == CalibrationScope::kGlobal) {
    out.scores = apply_calibration_shift(sets, out.mu_h, eta);
    return out;
  }

  std::map<std::string, std::vector<VersionSet>> by_type;
  for (const auto& s : sets) by_type[s.scan_type].push_back(s);
  std::map<std::string, double> anchors;
  for (const auto& [type, group] : by_type) anchors[type] = calibration_mean(group);
  for (const auto& s : sets) {
    const VersionSet one[] = {s};
    out.scores.push_back(apply_calibration_shift(one, anchors.at(s.scan_type), eta).front());
  }
  return out;
}

}  // namespace mriq
