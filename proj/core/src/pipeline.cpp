#include "mriq/pipeline.hpp"

#include <algorithm>

#include "mriq/error.hpp"
#include "mriq/image_io.hpp"

namespace mriq {

SimulatedSlice load_slice(const std::filesystem::path& dataset_dir, const SliceRecord& record) {
  SimulatedSlice s;
  s.record = record;
  for (const auto& f : record.version_files) s.versions.push_back(io::read_img(dataset_dir / f).image);
  s.motion = io::read_img(dataset_dir / record.motion_file).image;
  return s;
}

std::vector<nn::NoiseSet> noise_sets(std::span<const SimulatedSlice> slices, Split split, bool calibrated) {
  std::vector<nn::NoiseSet> out;
  for (const auto& s : slices) {
    if (s.record.split != split) continue;
    nn::NoiseSet set;
    for (const auto& v : s.versions) set.images.push_back(v.pixels);
    if (calibrated) {
      if (!s.record.calibrated) throw MissingLabel("slice " + s.record.slice_id + " has no calibrated scores");
      set.targets = *s.record.calibrated;
    } else {
      set.targets = s.record.heuristic;
    }
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<nn::MotionPair> motion_pairs(std::span<const SimulatedSlice> slices, Split split) {
  std::vector<nn::MotionPair> out;
  for (const auto& s : slices)
    if (s.record.split == split) out.push_back({s.motion.pixels, s.versions.back().pixels});
  return out;
}

double standard_level_db(const DatasetConfig& config, const ImageRuler& ruler) {
  if (!ruler.threshold) throw StateError("ruler " + ruler.scan_type + " has no threshold");
  const auto levels = ruler_levels_db(config, ruler);
  return 0.5 * (levels[ruler.threshold->t_a] + levels[ruler.threshold->t_b]);
}

NoiseEvaluation evaluate_noise(const nn::DualTaskNet& net, const RulerRegistry& registry,
                               const DatasetConfig& config, std::span<const SimulatedSlice> slices, Split split) {
  NoiseEvaluation e;
  int m_r = 0;
  for (const auto& s : slices) {
    if (s.record.split != split) continue;
    const ImageRuler& ruler = select_ruler(registry, s.record.scan_type);
    m_r = std::max(m_r, ruler.m_r());
    const auto levels = ruler_levels_db(config, ruler);
    const double standard = standard_level_db(config, ruler);
    for (std::size_t v = 0; v < s.versions.size(); ++v) {
      const double raw = net.forward(s.versions[v].pixels).noise_score;
      const double level = s.record.level_db.at(v);
      e.raw.push_back(raw);
      e.level_db.push_back(level);
      e.rs_pred.push_back(ruler_score(ruler, raw));
      e.rs_label.push_back(proxy_ruler_score(levels, level));
      e.pf_pred.push_back(pass_fail(ruler, raw));
      e.pf_label.push_back(level >= standard);
      e.scan_type.push_back(s.record.scan_type);
      e.image_id.push_back(s.record.slice_id + "_v" + std::to_string(v + 1));
    }
  }
  if (e.raw.empty()) throw InvalidArgument("evaluate: split " + to_string(split) + " is empty");
  refresh_report(e, m_r);
  return e;
}

void refresh_report(NoiseEvaluation& e, int m_r) {
  auto& r = e.report;
  r.test_size = static_cast<long>(e.raw.size());
  r.binary = binary_metrics(e.pf_pred, e.pf_label);
  r.accuracy = r.binary.accuracy;
  r.score_mae = ruler_score_mae(e.rs_pred, e.rs_label);
  r.confusion_ruler = ruler_confusion(e.rs_pred, e.rs_label, m_r);
  r.spearman = spearman(e.raw, e.level_db);
}

double motion_accuracy(const nn::DualTaskNet& net, std::span<const nn::MotionPair> pairs) {
  if (pairs.empty()) throw InvalidArgument("motion_accuracy: no pairs");
  long correct = 0;
  for (const auto& p : pairs) {
    correct += net.forward(p.corrupted).motion_probability < nn::kMotionThreshold;
    correct += net.forward(p.original).motion_probability >= nn::kMotionThreshold;
  }
  return static_cast<double>(correct) / (2.0 * static_cast<double>(pairs.size()));
}

}  // namespace mriq
