#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "mriq/error.hpp"
#include "mriq/fft.hpp"
#include "mriq/kspace.hpp"
#include "mriq/phantom.hpp"
#include "test_util.hpp"

using namespace mriq;

namespace {

// Unit-SOS coil maps inside the phantom support, so |x| is the reference magnitude.
CoilMaps default_maps(int size, int n = 4) { return synth_coil_maps(size, n, 11); }

double noise_energy(const RealImage& img, const RealImage& clean) {
  double e = 0;
  for (std::size_t i = 0; i < img.size(); ++i) e += (img[i] - clean[i]) * (img[i] - clean[i]);
  return e;
}

}  // namespace

TEST(Phantom, DeterministicForSeed) {
  const Phantom a = generate_phantom(7, 64, "knee-fs");
  const Phantom b = generate_phantom(7, 64, "knee-fs");
  EXPECT_EQ(a.size(), 64);
  EXPECT_EQ(a.pixels.cols(), 64);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_EQ(a.scan_type, "knee-fs");
}

TEST(Phantom, OtherSeedDiffersInAtLeastOnePercentOfPixels) {
  const Phantom a = generate_phantom(7, 64, "knee-fs");
  const Phantom b = generate_phantom(8, 64, "knee-fs");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) diff += a.pixels[i] != b.pixels[i];
  EXPECT_GE(diff, a.pixels.size() / 100);
}

TEST(Phantom, RejectsSmallSize) {
  EXPECT_THROW(generate_phantom(1, 31, "knee-fs"), InvalidArgument);
  EXPECT_NO_THROW(generate_phantom(1, 32, "knee-fs"));
}

TEST(Phantom, HasSeveralIntensityLevelsAndFiniteSupport) {
  for (const char* type : {"knee-fs", "knee-nfs", "brain-fs", "brain-nfs", "hip-fs", "elbow"}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Phantom p = generate_phantom(seed, 128, type);
      std::map<int, int> bins;  // 0.1-wide magnitude bins over the support
      int support = 0;
      for (int r = 0; r < 128; ++r)
        for (int c = 0; c < 128; ++c) {
          const double m = std::abs(p.pixels(r, c));
          ASSERT_TRUE(std::isfinite(m));
          if (m == 0) continue;
          ++support;
          const double rad = std::hypot((r + 0.5) / 128 - 0.5, (c + 0.5) / 128 - 0.5);
          EXPECT_LE(rad, kPhantomSupportRadius + 1e-9);
          ++bins[static_cast<int>(m / 0.1)];
        }
      ASSERT_GT(support, 0);
      int populated = 0;
      for (auto [bin, count] : bins) populated += count >= support / 50;
      EXPECT_GE(populated, 3) << type << " seed " << seed;
    }
  }
}

TEST(Phantom, FatSuppressionDarkensFat) {
  const Phantom fs = generate_phantom(3, 64, "knee-fs");
  const Phantom nfs = generate_phantom(3, 64, "knee-nfs");
  EXPECT_LT(testutil::energy(magnitude(fs.pixels)), testutil::energy(magnitude(nfs.pixels)));
}

TEST(Phantom, ParsesScanType) {
  EXPECT_EQ(parse_scan_type("knee-fs").anatomy, "knee");
  EXPECT_TRUE(*parse_scan_type("knee-fs").fat_suppressed);
  EXPECT_FALSE(*parse_scan_type("brain-nfs").fat_suppressed);
  EXPECT_FALSE(parse_scan_type("spine").fat_suppressed.has_value());
  EXPECT_EQ(parse_scan_type("t1-post").anatomy, "t1-post");
}

TEST(CoilMaps, SingleCoilIsPositive) {
  const CoilMaps m = synth_coil_maps(64, 1, 5);
  ASSERT_EQ(m.n_coils(), 1);
  for (const auto& v : m.maps[0].values()) {
    EXPECT_GT(v.real(), 0.0);
    EXPECT_EQ(v.imag(), 0.0);
  }
}

TEST(CoilMaps, SumOfSquaresPositiveEverywhere) {
  const CoilMaps m = synth_coil_maps(64, 8, 5);
  double min_sos = INFINITY;
  for (std::size_t p = 0; p < m.maps[0].size(); ++p) {
    double s = 0;
    for (const auto& map : m.maps) s += std::norm(map[p]);
    min_sos = std::min(min_sos, s);
  }
  EXPECT_GT(min_sos, 0.0);
}

TEST(CoilMaps, UnitSumOfSquaresOverPhantomSupport) {
  const CoilMaps m = synth_coil_maps(64, 4, 5);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) {
      if (std::hypot((r + 0.5) / 64 - 0.5, (c + 0.5) / 64 - 0.5) > kPhantomSupportRadius) continue;
      double s = 0;
      for (const auto& map : m.maps) s += std::norm(map(r, c));
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(CoilMaps, SpectralEnergyInLowestEighth) {
  const CoilMaps m = synth_coil_maps(64, 4, 5);
  for (const auto& map : m.maps) {
    const ComplexImage k = fft::fft2c_copy(map);
    double total = 0, low = 0;
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) {
        const double e = std::norm(k(r, c));
        total += e;
        if (std::abs(r - 32) <= 4 && std::abs(c - 32) <= 4) low += e;
      }
    EXPECT_GE(low / total, 0.99);
  }
}

TEST(CoilMaps, RejectsCoilCountOutOfRange) {
  EXPECT_THROW(synth_coil_maps(64, 0, 1), InvalidArgument);
  EXPECT_THROW(synth_coil_maps(64, 33, 1), InvalidArgument);
  EXPECT_NO_THROW(synth_coil_maps(64, 32, 1));
}

TEST(ForwardKspace, DeltaWithFlatCoilHasFlatSpectrum) {
  Phantom p;
  p.pixels = ComplexImage(32, 32);
  p.pixels(16, 16) = 3.0;
  CoilMaps flat;
  flat.maps.push_back(ComplexImage(32, 32, 1.0));
  const KSpaceVolume k = forward_kspace(p, flat, 4);
  for (const auto& v : k.coils[0].values()) EXPECT_NEAR(std::abs(v), 3.0 / 32.0, 1e-14);
}

TEST(ForwardKspace, SosRoundTripRecoversMagnitude) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Phantom p = generate_phantom(seed, 64, "brain-nfs");
    const CoilMaps maps = default_maps(64);
    const KSpaceVolume k = forward_kspace(p, maps, 8);
    const RealImage sos = recon_sos(k);
    EXPECT_LE(relative_rms(sos, magnitude(p.pixels)), 1e-6);
    const RealImage combined = magnitude(recon_coil_combined(k, maps));
    EXPECT_LE(relative_rms(sos, combined), 1e-6);
  }
}

TEST(ForwardKspace, InterleavedOrderForEtl4) {
  const Phantom p = generate_phantom(7, 64, "knee-fs");
  const KSpaceVolume k = forward_kspace(p, default_maps(64), 4);
  EXPECT_EQ(k.n_shots(), 16);
  std::map<int, int> per_shot;
  std::set<int> lines;
  for (const auto& slot : k.acquisition_order) {
    ++per_shot[slot.shot];
    EXPECT_TRUE(lines.insert(slot.line).second);
  }
  EXPECT_EQ(lines.size(), 64u);
  for (auto [shot, count] : per_shot) EXPECT_EQ(count, 4);
  EXPECT_EQ(k.acquisition_order[1], (AcquisitionSlot{0, 16}));
  EXPECT_NO_THROW(validate(k));
}

TEST(ForwardKspace, AcquisitionOrderIsAlwaysAPermutation) {
  for (int n : {1, 7, 32, 63, 64, 100, 128})
    for (int etl = 1; etl <= 23; ++etl) {
      const auto order = interleaved_order(n, etl);
      std::vector<int> lines;
      for (const auto& s : order) lines.push_back(s.line);
      std::sort(lines.begin(), lines.end());
      ASSERT_EQ(static_cast<int>(lines.size()), n);
      for (int i = 0; i < n; ++i) ASSERT_EQ(lines[i], i);
    }
}

TEST(ForwardKspace, ValidateRejectsBrokenOrder) {
  KSpaceVolume k = forward_kspace(generate_phantom(1, 32, "knee-fs"), default_maps(32), 4);
  k.acquisition_order.back().line = k.acquisition_order.front().line;
  EXPECT_THROW(validate(k), InvalidArgument);
  k.acquisition_order.pop_back();
  EXPECT_THROW(validate(k), InvalidArgument);
}

TEST(ForwardKspace, DimensionMismatchThrows) {
  const Phantom p = generate_phantom(1, 64, "knee-fs");
  EXPECT_THROW(forward_kspace(p, default_maps(32), 4), InvalidArgument);
}

TEST(ReconSos, SingleCoilIsMagnitudeOfInverse) {
  KSpaceVolume k;
  k.coils.push_back(testutil::random_complex(16, 16, 3));
  k.acquisition_order = interleaved_order(16, 1);
  const RealImage sos = recon_sos(k);
  const ComplexImage img = fft::ifft2c_copy(k.coils[0]);
  for (std::size_t i = 0; i < sos.size(); ++i) EXPECT_NEAR(sos[i], std::abs(img[i]), 1e-14 * (1 + std::abs(img[i])));
}

TEST(ReconSos, TwoIdenticalCoilsScaleBySqrt2) {
  KSpaceVolume one, two;
  one.coils.push_back(testutil::random_complex(16, 16, 4));
  two.coils = {one.coils[0], one.coils[0]};
  const RealImage a = recon_sos(one), b = recon_sos(two);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], std::sqrt(2.0) * a[i], 1e-12 * (1 + a[i]));
}

TEST(ReconSos, MatchesBruteForceEvaluation) {
  const Phantom p = generate_phantom(21, 64, "knee-nfs");
  KSpaceVolume k = forward_kspace(p, default_maps(64), 8);
  k = add_kspace_noise(k, 1e-3, 5);
  const RealImage sos = recon_sos(k);
  RealImage oracle(64, 64);
  for (const auto& coil : k.coils) {
    const ComplexImage img = testutil::direct_dft(coil, +1);
    for (std::size_t i = 0; i < img.size(); ++i) oracle[i] += std::norm(img[i]);
  }
  for (auto& v : oracle.values()) v = std::sqrt(v);
  for (std::size_t i = 0; i < sos.size(); ++i) ASSERT_NEAR(sos[i], oracle[i], 1e-9);
}

TEST(ReconSos, InvariantToPerCoilGlobalPhase) {
  const KSpaceVolume k = add_kspace_noise(
      forward_kspace(generate_phantom(2, 64, "brain-fs"), default_maps(64), 8), 0.01, 9);
  KSpaceVolume rotated = k;
  for (int i = 0; i < rotated.n_coils(); ++i) {
    const Complex ph = std::polar(1.0, 0.7 + 1.3 * i);
    for (auto& v : rotated.coils[i].values()) v *= ph;
  }
  const RealImage a = recon_sos(k), b = recon_sos(rotated);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-9);
}

TEST(CoilCombined, UnitMapReturnsCoilImage) {
  KSpaceVolume k;
  k.coils.push_back(testutil::random_complex(16, 16, 8));
  CoilMaps maps;
  maps.maps.push_back(ComplexImage(16, 16, 1.0));
  const ComplexImage x = recon_coil_combined(k, maps);
  const ComplexImage img = fft::ifft2c_copy(k.coils[0]);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(x[i] - img[i]), 1e-14);
}

TEST(CoilCombined, FlatMapsOfEqualMagnitude) {
  const double c = 0.4;
  const int n = 3;
  KSpaceVolume k;
  CoilMaps maps;
  for (int i = 0; i < n; ++i) {
    k.coils.push_back(testutil::random_complex(16, 16, 20 + i));
    maps.maps.push_back(ComplexImage(16, 16, std::polar(c, 0.9 * i)));
  }
  const ComplexImage x = recon_coil_combined(k, maps);
  for (std::size_t p = 0; p < x.size(); ++p) {
    Complex expect = 0;
    for (int i = 0; i < n; ++i) expect += fft::ifft2c_copy(k.coils[i])[p] * std::conj(maps.maps[i][p]);
    expect /= c * std::sqrt(static_cast<double>(n));
    EXPECT_LE(std::abs(x[p] - expect), 1e-12);
  }
}

TEST(CoilCombined, ZeroSensitivityAtSignalIsDegenerate) {
  KSpaceVolume k;
  k.coils.push_back(testutil::random_complex(16, 16, 1));
  CoilMaps maps;
  maps.maps.push_back(ComplexImage(16, 16, 1.0));
  maps.maps[0](3, 3) = 0.0;
  EXPECT_THROW(recon_coil_combined(k, maps), NumericalDegeneracy);
}

TEST(CoilCombined, CoilCountMismatchThrows) {
  KSpaceVolume k = forward_kspace(generate_phantom(1, 32, "knee-fs"), default_maps(32, 4), 4);
  EXPECT_THROW(recon_coil_combined(k, default_maps(32, 2)), InvalidArgument);
}

TEST(Noise, InfiniteTargetIsIdentity) {
  const KSpaceVolume k = forward_kspace(generate_phantom(3, 64, "knee-fs"), default_maps(64), 8);
  const KSpaceVolume out = inject_noise(k, kNoNoise, 1);
  for (int i = 0; i < k.n_coils(); ++i) EXPECT_EQ(out.coils[i], k.coils[i]);
}

TEST(Noise, HitsTargetSnrWithinHalfDecibel) {
  const KSpaceVolume k = forward_kspace(generate_phantom(3, 64, "knee-fs"), default_maps(64), 8);
  const RealImage clean = recon_sos(k);
  for (double target : {12.0, 20.0, 30.0}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      const RealImage noisy = recon_sos(inject_noise(k, target, seed));
      const double snr = testutil::snr_oracle(clean, noisy);
      EXPECT_GE(snr, target - 0.5);
      EXPECT_LE(snr, target + 0.5);
    }
  }
}

TEST(Noise, DeterministicForSeed) {
  const KSpaceVolume k = forward_kspace(generate_phantom(3, 64, "knee-fs"), default_maps(64), 8);
  const KSpaceVolume a = inject_noise(k, 20, 4), b = inject_noise(k, 20, 4), c = inject_noise(k, 20, 5);
  for (int i = 0; i < k.n_coils(); ++i) EXPECT_EQ(a.coils[i], b.coils[i]);
  EXPECT_NE(a.coils[0], c.coils[0]);
}

TEST(Noise, RejectsNanAndMinusInfinity) {
  const KSpaceVolume k = forward_kspace(generate_phantom(3, 32, "knee-fs"), default_maps(32), 8);
  EXPECT_THROW(inject_noise(k, std::nan(""), 1), InvalidArgument);
  EXPECT_THROW(inject_noise(k, -kNoNoise, 1), InvalidArgument);
}

TEST(Noise, RaisesMeanSquaredMagnitudeByTwoSigmaSquared) {
  const KSpaceVolume k = forward_kspace(generate_phantom(5, 64, "knee-nfs"), default_maps(64, 4), 8);
  double base = 0;
  std::size_t n = 0;
  for (const auto& coil : k.coils)
    for (const auto& v : coil.values()) base += std::norm(v), ++n;
  base /= n;
  const double sigma = std::sqrt(base / 2);
  double raised = 0;
  const int batch = 5;
  for (int s = 0; s < batch; ++s) {
    const KSpaceVolume noisy = add_kspace_noise(k, sigma, 100 + s);
    for (const auto& coil : noisy.coils)
      for (const auto& v : coil.values()) raised += std::norm(v);
  }
  raised /= static_cast<double>(n) * batch;
  EXPECT_NEAR((raised - base) / (2 * sigma * sigma), 1.0, 0.05);
}

TEST(VersionSet, FiveVersionsWithDecreasingNoise) {
  const Phantom p = generate_phantom(9, 64, "brain-nfs");
  const VersionSetImages set = make_version_set(p, default_maps(64), 5, 12, 30, 77);
  ASSERT_EQ(set.versions.size(), 5u);
  const RealImage& clean = set.versions.back().pixels;
  EXPECT_EQ(clean, recon_sos(forward_kspace(p, default_maps(64), 8)));
  double last = INFINITY;
  for (int v = 0; v < 4; ++v) {
    EXPECT_EQ(set.versions[v].version, v + 1);
    const double e = noise_energy(set.versions[v].pixels, clean);
    EXPECT_LT(e, last);
    last = e;
  }
  EXPECT_GT(last, 0.0);
  EXPECT_EQ(set.versions[4].version, 5);
}

TEST(VersionSet, MeasuredSnrIncreasesAndTracksTargets) {
  const Phantom p = generate_phantom(10, 64, "knee-fs");
  const VersionSetImages set = make_version_set(p, default_maps(64), 5, 12, 30, 3);
  const RealImage& clean = set.versions.back().pixels;
  double last = -INFINITY;
  for (int v = 0; v < 4; ++v) {
    EXPECT_DOUBLE_EQ(set.target_db[v], 12 + 6.0 * v);
    const double snr = testutil::snr_oracle(clean, set.versions[v].pixels);
    EXPECT_GT(snr, last);
    EXPECT_NEAR(snr, set.target_db[v], 0.5);
    last = snr;
  }
  EXPECT_EQ(set.target_db[4], kNoNoise);
}

// The noisy versions span the range end to end; the clean one sits beyond it.
TEST(VersionSet, NoisyTargetsSpanTheRange) {
  const Phantom p = generate_phantom(10, 32, "knee-fs");
  const VersionSetImages set = make_version_set(p, default_maps(32), 3, 10, 20, 3);
  ASSERT_EQ(set.target_db.size(), 3u);
  EXPECT_DOUBLE_EQ(set.target_db[0], 10.0);
  EXPECT_DOUBLE_EQ(set.target_db[1], 20.0);
  EXPECT_TRUE(std::isinf(set.target_db[2]));
  const VersionSetImages five = make_version_set(p, default_maps(32), 5, 12, 30, 3);
  for (int v = 0; v < 4; ++v) EXPECT_NEAR(five.target_db[v], 12.0 + 6.0 * v, 1e-12);
}

TEST(VersionSet, RejectsBadArguments) {
  const Phantom p = generate_phantom(10, 32, "knee-fs");
  EXPECT_THROW(make_version_set(p, default_maps(32), 2, 10, 20, 3), InvalidArgument);
  EXPECT_THROW(make_version_set(p, default_maps(32), 5, 20, 20, 3), InvalidArgument);
}
