#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace mriq::service {

struct CalibrationPick {
  int h = 0;
  std::string timestamp;
};

struct ThresholdRecord {
  int t_a = 0;
  int t_b = 0;
  std::string rater;
  std::string timestamp;
};

struct TestLabel {
  int rs = 0;
  bool pf = false;
  std::string timestamp;
};

/// Everything the store holds; keys are item id then rater id.
struct LabelSnapshot {
  std::map<std::string, std::map<std::string, CalibrationPick>> picks;
  std::map<std::string, ThresholdRecord> thresholds;
  std::map<std::string, std::map<std::string, TestLabel>> test_labels;
  std::uint64_t last_seq = 0;
};

/// Persistent human decisions. Each write is appended to `<path>.log`
/// (flushed) before the snapshot at `<path>` is rewritten through a
/// temporary file and rename; on open, log entries newer than the snapshot
/// are replayed, so a crash at any point leaves a readable store.
class LabelStore {
 public:
  explicit LabelStore(std::filesystem::path path);

  /// Range checks throw InvalidArgument with the reason.
  void put_pick(const std::string& slice_id, const std::string& rater, int h, int m_t);
  void put_threshold(const std::string& scan_type, int t_a, int t_b, int m_r, const std::string& rater = {});
  void put_test_label(const std::string& image_id, const std::string& rater, int rs, bool pf, int m_r);

  std::optional<CalibrationPick> pick(const std::string& slice_id, const std::string& rater) const;
  std::optional<ThresholdRecord> threshold(const std::string& scan_type) const;
  std::optional<TestLabel> test_label(const std::string& image_id, const std::string& rater) const;

  LabelSnapshot snapshot() const;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path log_path() const;

  /// Size of the audit log in entries.
  std::size_t log_entries() const;

 private:
  void commit(const std::string& entry_json);
  void apply(const std::string& entry_json);
  void write_snapshot() const;

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  LabelSnapshot state_;
};

/// The snapshot serialized as the store file does.
std::string snapshot_to_json(const LabelSnapshot& s);
LabelSnapshot snapshot_from_json(const std::string& text);

}  // namespace mriq::service
