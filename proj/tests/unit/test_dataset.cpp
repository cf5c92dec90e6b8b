#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "mriq/dataset.hpp"
#include "mriq/error.hpp"
#include "mriq/synthetic_rater.hpp"

using namespace mriq;
namespace fs = std::filesystem;

namespace {

DatasetConfig small_config(std::uint64_t seed = 7) {
  DatasetConfig c;
  c.n_train = 6;
  c.n_val = 2;
  c.n_test = 2;
  c.slices_per_subject = 2;
  c.size = 32;
  c.n_coils = 2;
  c.seed = seed;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mriq_ds_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(PlanDataset, CountsAndSubjectDisjointSplits) {
  const DatasetConfig c;  // 200 / 40 / 60
  const auto plan = plan_dataset(c);
  std::map<Split, int> counts;
  std::map<std::string, std::set<Split>> subject_splits;
  std::set<std::string> ids;
  for (const auto& r : plan) {
    ++counts[r.split];
    subject_splits[r.subject_id].insert(r.split);
    EXPECT_TRUE(ids.insert(r.slice_id).second);
    EXPECT_EQ(r.version_files.size(), 5u);
  }
  EXPECT_EQ(counts[Split::kTrain], 200);
  EXPECT_EQ(counts[Split::kVal], 40);
  EXPECT_EQ(counts[Split::kTest], 60);
  for (const auto& [subject, splits] : subject_splits) EXPECT_EQ(splits.size(), 1u) << subject;
}

TEST(PlanDataset, SubjectDisjointOverRandomConfigs) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<> count(0, 40), per(1, 7), types(1, 4);
  const std::vector<std::string> all{"knee-fs", "knee-nfs", "brain-fs", "brain-nfs"};
  for (int trial = 0; trial < 100; ++trial) {
    DatasetConfig c;
    c.n_train = count(rng) + 1;
    c.n_val = count(rng);
    c.n_test = count(rng);
    c.slices_per_subject = per(rng);
    c.scan_types.assign(all.begin(), all.begin() + types(rng));
    c.seed = trial;
    const auto plan = plan_dataset(c);
    ASSERT_EQ(static_cast<int>(plan.size()), c.n_train + c.n_val + c.n_test);
    std::map<std::string, Split> owner;
    std::map<std::string, std::string> type_of;
    for (const auto& r : plan) {
      auto [it, fresh] = owner.emplace(r.subject_id, r.split);
      ASSERT_EQ(it->second, r.split) << "subject " << r.subject_id << " in two splits";
      auto [tt, tfresh] = type_of.emplace(r.subject_id, r.scan_type);
      ASSERT_EQ(tt->second, r.scan_type);
    }
  }
}

TEST(PlanDataset, RejectsBadConfigs) {
  DatasetConfig c = small_config();
  c.scan_types.clear();
  EXPECT_THROW(plan_dataset(c), InvalidArgument);
  c = small_config();
  c.n_train = c.n_val = c.n_test = 0;
  EXPECT_THROW(plan_dataset(c), InvalidArgument);
  c = small_config();
  c.m_t = 2;
  EXPECT_THROW(plan_dataset(c), InvalidArgument);
}

TEST(EffectiveLevel, CombinesNoisePowers) {
  EXPECT_DOUBLE_EQ(effective_level_db(kNoNoise, 40), 40.0);
  EXPECT_NEAR(effective_level_db(30, 30), 30 - 10 * std::log10(2.0), 1e-12);
  EXPECT_NEAR(effective_level_db(12, 40), 11.993122345056813, 1e-12);
}

TEST(BuildDataset, WritesEveryImageAndIsDeterministic) {
  const fs::path a = fresh_dir("a"), b = fresh_dir("b");
  const DatasetManifest m = build_dataset(small_config(), a);
  build_dataset(small_config(), b);
  ASSERT_EQ(m.entries.size(), 10u);
  int images = 0;
  for (const auto& e : fs::directory_iterator(a / "images")) images += e.path().extension() == ".img";
  EXPECT_EQ(images, 10 * (5 + 1));
  for (const auto& r : m.entries) {
    for (const auto& f : r.version_files) EXPECT_TRUE(fs::exists(a / f)) << f;
    EXPECT_TRUE(fs::exists(a / r.motion_file));
    EXPECT_EQ(r.heuristic.size(), 5u);
    EXPECT_EQ(r.level_db.size(), 5u);
    if (r.split == Split::kTest) EXPECT_FALSE(r.human_label.has_value());
  }
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
  EXPECT_EQ(slurp(a / m.entries[3].version_files[1]), slurp(b / m.entries[3].version_files[1]));
  build_dataset(small_config(8), b);
  EXPECT_NE(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
}

TEST(BuildDataset, EverySubjectInTrainAndValHasALabel) {
  const DatasetManifest m = build_dataset(small_config(3), fresh_dir("labels"));
  std::map<std::string, int> labeled;
  for (const auto& r : m.entries) {
    if (r.split == Split::kTest) continue;
    labeled[r.subject_id] += r.human_label.has_value();
    if (r.human_label) {
      EXPECT_GE(*r.human_label, 0);
      EXPECT_LE(*r.human_label, 6);
    }
  }
  for (const auto& [subject, n] : labeled) EXPECT_GE(n, 1) << subject;
}

TEST(Manifest, RoundTripIsByteIdentical) {
  const fs::path dir = fresh_dir("rt");
  DatasetManifest m = build_dataset(small_config(), dir);
  std::vector<SliceRecord*> ptrs;
  for (auto& r : m.entries) ptrs.push_back(&r);
  calibrate_records(ptrs, 0.85);
  write_manifest(dir / "m1.json", m);
  const DatasetManifest back = read_manifest(dir / "m1.json");
  write_manifest(dir / "m2.json", back);
  EXPECT_EQ(slurp(dir / "m1.json"), slurp(dir / "m2.json"));
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
  EXPECT_THROW(manifest_from_json("{not json"), IoError);
  EXPECT_THROW(read_manifest(dir / "absent.json"), IoError);
}

TEST(Manifest, CalibrationCoversTrainAndVal) {
  DatasetManifest m = build_dataset(small_config(), fresh_dir("cal"));
  std::vector<SliceRecord*> ptrs;
  for (auto& r : m.entries) ptrs.push_back(&r);
  const double mu = calibrate_records(ptrs, 1.0);
  for (const auto& r : m.entries) {
    if (r.split == Split::kTest) {
      EXPECT_FALSE(r.calibrated.has_value());
      continue;
    }
    ASSERT_TRUE(r.calibrated.has_value());
    for (int v = 0; v + 1 < 5; ++v)
      EXPECT_NEAR((*r.calibrated)[v + 1] - (*r.calibrated)[v], r.heuristic[v + 1] - r.heuristic[v], 1e-9);
    if (r.human_label && *r.human_label >= 1 && *r.human_label <= 5)
      EXPECT_NEAR((*r.calibrated)[*r.human_label - 1], mu, 1e-9);
  }
}

TEST(SyntheticRater, PicksFirstAcceptableVersion) {
  const std::vector<double> levels{12, 18, 24, 30, 40};
  EXPECT_EQ(rater_pick(levels, 21.0), 3);
  EXPECT_EQ(rater_pick(levels, 18.0), 2);
  EXPECT_EQ(rater_pick(levels, 5.0), 0);   // virtual v0 at 6 dB already acceptable
  EXPECT_EQ(rater_pick(levels, 7.0), 1);
  EXPECT_EQ(rater_pick(levels, 45.0), 6);  // nothing acceptable
}

TEST(SyntheticRater, ProxyRulerScoreTiesGoUp) {
  const std::vector<double> ruler{8, 12, 16, 20};
  EXPECT_EQ(proxy_ruler_score(ruler, 14.0), 2);
  EXPECT_EQ(proxy_ruler_score(ruler, 13.9), 1);
  EXPECT_EQ(proxy_ruler_score(ruler, 100), 3);
  EXPECT_THROW(proxy_ruler_score(std::vector<double>{}, 1.0), InvalidArgument);
}

TEST(SingleBestThreshold, GridSpansRulerScores) {
  RulerRegistry reg;
  reg["knee-fs"].scores = std::vector<double>{2, 5, 9};
  reg["brain-nfs"].scores = std::vector<double>{-1, 4, 11.0};
  const auto grid = threshold_grid(reg);
  ASSERT_EQ(grid.size(), 100u);
  EXPECT_DOUBLE_EQ(grid.front(), -1.0);
  EXPECT_DOUBLE_EQ(grid.back(), 11.0);
  reg["x-fs"];
  EXPECT_THROW(threshold_grid(reg), StateError);
}

TEST(SingleBestThreshold, SeparableScoresPickLowestGridValueInGap) {
  RulerRegistry reg;
  reg["knee-fs"].scores = std::vector<double>{0, 99};  // grid = 0, 1, ..., 99
  const std::vector<double> raw{10, 20, 30.5, 40, 50};
  const std::vector<bool> labels{false, false, true, true, true};
  EXPECT_DOUBLE_EQ(single_best_threshold(raw, labels, reg), 21.0);
  EXPECT_THROW(single_best_threshold(std::vector<double>{}, {}, reg), InvalidArgument);
}

TEST(SingleBestThreshold, TiesGoToLowerThreshold) {
  RulerRegistry reg;
  reg["knee-fs"].scores = std::vector<double>{0, 99};
  const std::vector<double> raw{10, 30.5, 50};
  const std::vector<bool> labels{false, false, true};
  EXPECT_DOUBLE_EQ(single_best_threshold(raw, labels, reg), 31.0);
  const std::vector<double> raw2{10, 12.5, 20};
  const std::vector<bool> labels2{true, false, true};
  EXPECT_DOUBLE_EQ(single_best_threshold(raw2, labels2, reg), 0.0);
}
