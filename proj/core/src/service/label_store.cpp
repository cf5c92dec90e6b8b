#include "mriq/service/label_store.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mriq/error.hpp"

namespace mriq::service {

namespace {

using nlohmann::json;

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string snapshot_to_json(const LabelSnapshot& s) {
  json j;
  j["format"] = "mriq-labels-1";
  j["last_seq"] = s.last_seq;
  json picks = json::object();
  for (const auto& [item, by_rater] : s.picks)
    for (const auto& [rater, p] : by_rater) picks[item][rater] = {{"h", p.h}, {"timestamp", p.timestamp}};
  j["picks"] = picks;
  json th = json::object();
  for (const auto& [scan, t] : s.thresholds)
    th[scan] = {{"t_a", t.t_a}, {"t_b", t.t_b}, {"rater", t.rater}, {"timestamp", t.timestamp}};
  j["thresholds"] = th;
  json tl = json::object();
  for (const auto& [item, by_rater] : s.test_labels)
    for (const auto& [rater, l] : by_rater) tl[item][rater] = {{"rs", l.rs}, {"pf", l.pf}, {"timestamp", l.timestamp}};
  j["test_labels"] = tl;
  return j.dump(2) + "\n";
}

LabelSnapshot snapshot_from_json(const std::string& text) {
  LabelSnapshot s;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("label store is not valid JSON: ") + e.what());
  }
  s.last_seq = j.value("last_seq", std::uint64_t{0});
  for (const auto& [item, by_rater] : j.at("picks").items())
    for (const auto& [rater, p] : by_rater.items())
      s.picks[item][rater] = {p.at("h").get<int>(), p.at("timestamp").get<std::string>()};
  for (const auto& [scan, t] : j.at("thresholds").items())
    s.thresholds[scan] = {t.at("t_a").get<int>(), t.at("t_b").get<int>(), t.at("rater").get<std::string>(),
                          t.at("timestamp").get<std::string>()};
  for (const auto& [item, by_rater] : j.at("test_labels").items())
    for (const auto& [rater, l] : by_rater.items())
      s.test_labels[item][rater] = {l.at("rs").get<int>(), l.at("pf").get<bool>(), l.at("timestamp").get<std::string>()};
  return s;
}

LabelStore::LabelStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (std::filesystem::exists(path_)) state_ = snapshot_from_json(read_text(path_));
  // Replay entries the snapshot has not absorbed yet.
  if (std::filesystem::exists(log_path())) {
    std::ifstream in(log_path(), std::ios::binary);
    std::string line;
    std::uintmax_t good = 0;
    bool torn = false;
    while (std::getline(in, line)) {
      if (in.eof()) {  // no trailing newline: the append never finished
        torn = true;
        break;
      }
      if (!line.empty()) {
        json e;
        try {
          e = json::parse(line);
        } catch (const json::exception&) {
          torn = true;
          break;
        }
        if (e.at("seq").get<std::uint64_t>() > state_.last_seq) apply(line);
      }
      good += line.size() + 1;
    }
    in.close();
    // Drop the fragment so later appends start on a clean line.
    if (torn) std::filesystem::resize_file(log_path(), good);
  }
  if (!std::filesystem::exists(path_)) write_snapshot();
}

std::filesystem::path LabelStore::log_path() const { return std::filesystem::path(path_.string() + ".log"); }

void LabelStore::apply(const std::string& entry_json) {
  const json e = json::parse(entry_json);
  const std::string kind = e.at("kind").get<std::string>();
  const std::string ts = e.at("timestamp").get<std::string>();
  if (kind == "pick") {
    state_.picks[e.at("item").get<std::string>()][e.at("rater").get<std::string>()] = {e.at("h").get<int>(), ts};
  } else if (kind == "threshold") {
    state_.thresholds[e.at("item").get<std::string>()] = {e.at("t_a").get<int>(), e.at("t_b").get<int>(),
                                                          e.at("rater").get<std::string>(), ts};
  } else if (kind == "test") {
    state_.test_labels[e.at("item").get<std::string>()][e.at("rater").get<std::string>()] = {
        e.at("rs").get<int>(), e.at("pf").get<bool>(), ts};
  } else {
    throw IoError("label log: unknown entry kind '" + kind + "'");
  }
  state_.last_seq = e.at("seq").get<std::uint64_t>();
}

void LabelStore::write_snapshot() const {
  const auto tmp = std::filesystem::path(path_.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << snapshot_to_json(state_);
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path_);
}

void LabelStore::commit(const std::string& entry_json) {
  {
    std::ofstream log(log_path(), std::ios::app | std::ios::binary);
    if (!log) throw IoError("cannot append to " + log_path().string());
    log << entry_json << '\n';
    log.flush();
    if (!log) throw IoError("append failed: " + log_path().string());
  }
  apply(entry_json);
  write_snapshot();
}

void LabelStore::put_pick(const std::string& slice_id, const std::string& rater, int h, int m_t) {
  if (rater.empty()) throw InvalidArgument("rater id is required");
  if (h < 0 || h > m_t + 1)
    throw InvalidArgument("h must be in [0, " + std::to_string(m_t + 1) + "], got " + std::to_string(h));
  std::lock_guard lock(mutex_);
  json e = {{"seq", state_.last_seq + 1}, {"kind", "pick"}, {"item", slice_id}, {"rater", rater},
            {"h", h}, {"timestamp", now_iso8601()}};
  commit(e.dump());
}

void LabelStore::put_threshold(const std::string& scan_type, int t_a, int t_b, int m_r, const std::string& rater) {
  if (t_a < 0 || t_b > m_r - 1)
    throw InvalidArgument("threshold versions must lie in [0, " + std::to_string(m_r - 1) + "]");
  if (t_a > t_b) throw InvalidArgument("t_a must not exceed t_b");
  std::lock_guard lock(mutex_);
  json e = {{"seq", state_.last_seq + 1}, {"kind", "threshold"}, {"item", scan_type}, {"rater", rater},
            {"t_a", t_a}, {"t_b", t_b}, {"timestamp", now_iso8601()}};
  commit(e.dump());
}

void LabelStore::put_test_label(const std::string& image_id, const std::string& rater, int rs, bool pf, int m_r) {
  if (rater.empty()) throw InvalidArgument("rater id is required");
  if (rs < 0 || rs > m_r - 1)
    throw InvalidArgument("rs must be in [0, " + std::to_string(m_r - 1) + "], got " + std::to_string(rs));
  std::lock_guard lock(mutex_);
  json e = {{"seq", state_.last_seq + 1}, {"kind", "test"}, {"item", image_id}, {"rater", rater},
            {"rs", rs}, {"pf", pf}, {"timestamp", now_iso8601()}};
  commit(e.dump());
}

std::optional<CalibrationPick> LabelStore::pick(const std::string& slice_id, const std::string& rater) const {
  std::lock_guard lock(mutex_);
  auto it = state_.picks.find(slice_id);
  if (it == state_.picks.end()) return std::nullopt;
  auto jt = it->second.find(rater);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

std::optional<ThresholdRecord> LabelStore::threshold(const std::string& scan_type) const {
  std::lock_guard lock(mutex_);
  auto it = state_.thresholds.find(scan_type);
  if (it == state_.thresholds.end()) return std::nullopt;
  return it->second;
}

std::optional<TestLabel> LabelStore::test_label(const std::string& image_id, const std::string& rater) const {
  std::lock_guard lock(mutex_);
  auto it = state_.test_labels.find(image_id);
  if (it == state_.test_labels.end()) return std::nullopt;
  auto jt = it->second.find(rater);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

LabelSnapshot LabelStore::snapshot() const {
  std::lock_guard lock(mutex_);
  return state_;
}

std::size_t LabelStore::log_entries() const {
  std::lock_guard lock(mutex_);
  std::ifstream in(log_path());
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace mriq::service
