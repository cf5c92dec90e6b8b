#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mriq/error.hpp"
#include "mriq/estimators.hpp"
#include "test_util.hpp"

using namespace mriq;

namespace {

MagnitudeImage wrap(RealImage px, int v = 0) {
  MagnitudeImage m;
  m.pixels = std::move(px);
  m.version = v;
  return m;
}

// Tie-free Spearman for the antitone check.
double rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& x) {
    std::vector<int> idx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return x[i] < x[j]; });
    std::vector<double> r(x.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double d2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1 - 6 * d2 / (n * (n * n - 1));
}

}  // namespace

TEST(SnrHeuristic, MatchesDirectEvaluation) {
  const VersionSetImages set = make_version_set(generate_phantom(3, 64, "knee-fs"), synth_coil_maps(64, 4, 1), 5, 12, 30, 9);
  const auto q = snr_heuristic(set.versions);
  ASSERT_EQ(q.size(), 5u);
  for (int v = 0; v < 4; ++v) {
    EXPECT_NEAR(q[v].value, testutil::snr_oracle(set.versions[4].pixels, set.versions[v].pixels), 1e-9);
    EXPECT_EQ(q[v].method, HeuristicMethod::kSnr);
    EXPECT_EQ(q[v].version, v + 1);
  }
  for (int v = 1; v < 5; ++v) EXPECT_GT(q[v].value, q[v - 1].value);
  EXPECT_EQ(q[4].value - q[3].value, q[3].value - q[2].value);
}

TEST(SnrHeuristic, ExtrapolatesCleanVersion) {
  // Versions constructed so that Q(x3) = 27 dB and Q(x4) = 30 dB exactly.
  RealImage ref(16, 16, 1.0);
  std::vector<MagnitudeImage> set;
  for (double q : {20.0, 24.0, 27.0, 30.0}) {
    RealImage v = ref;
    const double err_energy = 256.0 * std::pow(10.0, -q / 10.0);
    v[0] += std::sqrt(err_energy);
    set.push_back(wrap(v));
  }
  set.push_back(wrap(ref));
  const auto out = snr_heuristic(set);
  EXPECT_NEAR(out[2].value, 27.0, 1e-12);
  EXPECT_NEAR(out[3].value, 30.0, 1e-12);
  EXPECT_NEAR(out[4].value, 33.0, 1e-12);
}

TEST(SnrHeuristic, EqualEnergyErrorIsZeroDecibels) {
  RealImage ref = testutil::random_real(16, 16, 1, 5.0, 1.0);
  RealImage twice = ref;
  for (auto& v : twice.values()) v *= 2;  // error = ref, same energy
  const auto out = snr_heuristic(std::vector<MagnitudeImage>{wrap(twice), wrap(RealImage(16, 16, 0.5)), wrap(ref)});
  EXPECT_NEAR(out[0].value, 0.0, 1e-12);
}

TEST(SnrHeuristic, IdenticalVersionIsDegenerate) {
  RealImage ref = testutil::random_real(16, 16, 1);
  std::vector<MagnitudeImage> set{wrap(testutil::random_real(16, 16, 2)), wrap(ref), wrap(ref)};
  EXPECT_THROW(snr_heuristic(set), DegenerateInput);
}

TEST(SnrHeuristic, ShapeMismatchAndShortSetsThrow) {
  std::vector<MagnitudeImage> set{wrap(RealImage(8, 8, 1)), wrap(RealImage(8, 9, 1)), wrap(RealImage(8, 8, 2))};
  EXPECT_THROW(snr_heuristic(set), InvalidArgument);
  set.pop_back();
  EXPECT_THROW(snr_heuristic(set), InvalidArgument);
}

TEST(BlockDct, ZeroImageHasZeroSigma) { EXPECT_EQ(block_dct_sigma(RealImage(32, 32, 0.0)), 0.0); }

TEST(BlockDct, RecoversKnownSigmaOnFlatImages) {
  double sum = 0;
  for (int seed = 0; seed < 20; ++seed) sum += block_dct_sigma(testutil::random_real(128, 128, seed, 100.0, 10.0));
  const double mean = sum / 20;
  EXPECT_GE(mean, 8.5);
  EXPECT_LE(mean, 11.5);
  EXPECT_NEAR(mean, 10.0, 1.5);
}

TEST(BlockDct, ScalesLinearly) {
  for (int seed = 0; seed < 5; ++seed) {
    RealImage img = testutil::random_real(64, 64, seed, 0.0, 3.0);
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) img(r, c) += r < 32 ? 50 : 20;
    RealImage doubled = img;
    for (auto& v : doubled.values()) v *= 2;
    EXPECT_NEAR(block_dct_sigma(doubled) / block_dct_sigma(img), 2.0, 0.2);
  }
}

TEST(BlockDct, InvariantToAddedConstant) {
  const RealImage img = testutil::random_real(64, 48, 3, 10.0, 2.0);
  RealImage shifted = img;
  for (auto& v : shifted.values()) v += 37.5;
  EXPECT_NEAR(block_dct_sigma(shifted), block_dct_sigma(img), 1e-9);
}

TEST(BlockDct, RejectsSmallImages) {
  EXPECT_THROW(block_dct_sigma(RealImage(15, 32)), InvalidArgument);
  EXPECT_NO_THROW(block_dct_sigma(RealImage(16, 16)));
}

TEST(BlockDct, ScoreFormula) {
  EXPECT_DOUBLE_EQ(block_dct_score(1.0), 0.0);
  EXPECT_NEAR(block_dct_score(10.0), -20.0, 1e-12);
  EXPECT_NEAR(block_dct_score(0.0), 80.0, 1e-12);
}

TEST(BlockDct, AntitoneInInjectedNoise) {
  const CoilMaps maps = synth_coil_maps(128, 4, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const VersionSetImages set = make_version_set(generate_phantom(seed, 128, seed % 2 ? "knee-nfs" : "brain-fs"),
                                                  maps, 5, 12, 30, 100 + seed);
    std::vector<double> score, sigma;
    const RealImage& clean = set.versions.back().pixels;
    for (const auto& v : set.versions) {
      score.push_back(block_dct_heuristic(v).value);
      double e = 0;
      for (std::size_t p = 0; p < clean.size(); ++p) e += (v.pixels[p] - clean[p]) * (v.pixels[p] - clean[p]);
      sigma.push_back(e);
    }
    EXPECT_DOUBLE_EQ(rank_correlation(score, sigma), -1.0) << seed;
  }
}

TEST(Heuristics, DispatchAndNames) {
  EXPECT_EQ(heuristic_method_from_string("snr"), HeuristicMethod::kSnr);
  EXPECT_EQ(heuristic_method_from_string("block-dct"), HeuristicMethod::kBlockDct);
  EXPECT_EQ(to_string(HeuristicMethod::kBlockDct), "block_dct");
  EXPECT_THROW(heuristic_method_from_string("meon"), InvalidArgument);
  std::vector<MagnitudeImage> set{wrap(testutil::random_real(16, 16, 1), 1), wrap(testutil::random_real(16, 16, 2), 2)};
  const auto out = compute_heuristics(set, HeuristicMethod::kBlockDct);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].version, 2);
  EXPECT_EQ(out[0].value, block_dct_score(block_dct_sigma(set[0].pixels)));
}
