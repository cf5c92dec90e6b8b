#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <thread>

#include "mriq/error.hpp"
#include "mriq/service/label_store.hpp"

using namespace mriq;
using namespace mriq::service;
namespace fs = std::filesystem;

namespace {

fs::path fresh_store(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mriq_store_" + name);
  fs::remove_all(dir);
  return dir / "labels.json";
}

}  // namespace

TEST(LabelStore, RangeChecks) {
  LabelStore s(fresh_store("range"));
  EXPECT_NO_THROW(s.put_pick("a", "r1", 0, 5));
  EXPECT_NO_THROW(s.put_pick("a", "r1", 6, 5));
  EXPECT_THROW(s.put_pick("a", "r1", 7, 5), InvalidArgument);
  EXPECT_THROW(s.put_pick("a", "r1", -1, 5), InvalidArgument);
  EXPECT_THROW(s.put_pick("a", "", 2, 5), InvalidArgument);
  EXPECT_NO_THROW(s.put_threshold("knee-fs", 2, 2, 8));
  EXPECT_THROW(s.put_threshold("knee-fs", 4, 3, 8), InvalidArgument);
  EXPECT_THROW(s.put_threshold("knee-fs", -1, 3, 8), InvalidArgument);
  EXPECT_THROW(s.put_threshold("knee-fs", 3, 8, 8), InvalidArgument);
  EXPECT_NO_THROW(s.put_test_label("x_v1", "r1", 7, true, 8));
  EXPECT_THROW(s.put_test_label("x_v1", "r1", 8, true, 8), InvalidArgument);
  EXPECT_THROW(s.put_test_label("x_v1", "", 1, true, 8), InvalidArgument);
  // Rejected writes never reach the log.
  EXPECT_EQ(s.log_entries(), 4u);
}

TEST(LabelStore, LatestWriteWinsAndSurvivesReopen) {
  const fs::path p = fresh_store("reopen");
  {
    LabelStore s(p);
    s.put_pick("a", "r1", 2, 5);
    s.put_pick("a", "r1", 3, 5);
    s.put_pick("a", "r2", 4, 5);
    s.put_threshold("knee-fs", 2, 3, 8, "r1");
    s.put_test_label("t_v2", "r1", 5, false, 8);
  }
  LabelStore s(p);
  EXPECT_EQ(s.pick("a", "r1")->h, 3);
  EXPECT_EQ(s.pick("a", "r2")->h, 4);
  EXPECT_FALSE(s.pick("a", "r3"));
  EXPECT_FALSE(s.pick("b", "r1"));
  EXPECT_EQ(s.threshold("knee-fs")->t_a, 2);
  EXPECT_EQ(s.threshold("knee-fs")->t_b, 3);
  EXPECT_EQ(s.threshold("knee-fs")->rater, "r1");
  EXPECT_FALSE(s.threshold("brain-fs"));
  EXPECT_EQ(s.test_label("t_v2", "r1")->rs, 5);
  EXPECT_FALSE(s.test_label("t_v2", "r1")->pf);
  EXPECT_EQ(s.snapshot().last_seq, 5u);
  EXPECT_EQ(s.log_entries(), 5u);
  const std::string ts = s.pick("a", "r1")->timestamp;
  ASSERT_EQ(ts.size(), 24u);
  EXPECT_EQ(ts.back(), 'Z');
}

TEST(LabelStore, ReplaysLogWhenSnapshotIsStale) {
  const fs::path p = fresh_store("stale");
  const fs::path old = p.string() + ".old";
  {
    LabelStore s(p);
    s.put_pick("a", "r1", 2, 5);
    fs::copy_file(p, old);
    s.put_pick("b", "r1", 5, 5);
    s.put_threshold("knee-nfs", 3, 4, 8);
  }
  // A crash between the log append and the snapshot rename leaves an old snapshot behind.
  fs::copy_file(old, p, fs::copy_options::overwrite_existing);
  LabelStore s(p);
  EXPECT_EQ(s.pick("a", "r1")->h, 2);
  EXPECT_EQ(s.pick("b", "r1")->h, 5);
  EXPECT_EQ(s.threshold("knee-nfs")->t_b, 4);
  EXPECT_EQ(s.snapshot().last_seq, 3u);
}

TEST(LabelStore, RecoversFromLogAloneAndIgnoresTornLine) {
  const fs::path p = fresh_store("torn");
  {
    LabelStore s(p);
    s.put_pick("a", "r1", 1, 5);
    s.put_pick("b", "r1", 2, 5);
  }
  fs::remove(p);
  {
    std::ofstream log(p.string() + ".log", std::ios::app);
    log << R"({"seq":3,"kind":"pick","item":"c","rat)";
  }
  LabelStore s(p);
  EXPECT_EQ(s.pick("a", "r1")->h, 1);
  EXPECT_EQ(s.pick("b", "r1")->h, 2);
  EXPECT_FALSE(s.pick("c", "r1"));
  EXPECT_TRUE(fs::exists(p));
  EXPECT_EQ(s.log_entries(), 2u);

  // The fragment is gone, so new entries replay cleanly.
  s.put_pick("c", "r1", 3, 5);
  fs::remove(p);
  LabelStore again(p);
  EXPECT_EQ(again.pick("c", "r1")->h, 3);
  EXPECT_EQ(again.snapshot().last_seq, 3u);
}

TEST(LabelStore, SnapshotJsonRoundTrip) {
  const fs::path p = fresh_store("json");
  LabelStore s(p);
  s.put_pick("a", "r1", 0, 5);
  s.put_threshold("brain-fs", 1, 2, 4, "x");
  s.put_test_label("q_v3", "r2", 1, true, 4);
  const std::string text = snapshot_to_json(s.snapshot());
  EXPECT_EQ(snapshot_to_json(snapshot_from_json(text)), text);
  std::ifstream in(p);
  const std::string on_disk{std::istreambuf_iterator<char>(in), {}};
  EXPECT_EQ(on_disk, text);
  EXPECT_THROW(snapshot_from_json("{"), IoError);
}

TEST(LabelStore, ConcurrentWritersAreSerialized) {
  const fs::path p = fresh_store("concurrent");
  constexpr int kThreads = 8, kWrites = 25;
  {
    LabelStore s(p);
    std::vector<std::thread> pool;
    for (int t = 0; t < kThreads; ++t)
      pool.emplace_back([&s, t] {
        for (int i = 0; i < kWrites; ++i)
          s.put_pick("slice" + std::to_string(i), "rater" + std::to_string(t), (t + i) % 7, 5);
      });
    for (auto& th : pool) th.join();
    EXPECT_EQ(s.log_entries(), static_cast<std::size_t>(kThreads * kWrites));
    EXPECT_EQ(s.snapshot().last_seq, static_cast<std::uint64_t>(kThreads * kWrites));
  }
  std::ifstream log(p.string() + ".log");
  std::set<std::uint64_t> seqs;
  std::string line;
  while (std::getline(log, line)) seqs.insert(nlohmann::json::parse(line).at("seq").get<std::uint64_t>());
  EXPECT_EQ(seqs.size(), static_cast<std::size_t>(kThreads * kWrites));
  EXPECT_EQ(*seqs.begin(), 1u);
  EXPECT_EQ(*seqs.rbegin(), static_cast<std::uint64_t>(kThreads * kWrites));

  LabelStore reopened(p);
  for (int t = 0; t < kThreads; ++t)
    for (int i = 0; i < kWrites; ++i)
      EXPECT_EQ(reopened.pick("slice" + std::to_string(i), "rater" + std::to_string(t))->h, (t + i) % 7);
}
