#include <benchmark/benchmark.h>

#include <random>

#include "mriq/estimators.hpp"
#include "mriq/fft.hpp"
#include "mriq/kspace.hpp"
#include "mriq/motion.hpp"

using namespace mriq;

namespace {

ComplexImage noise_image(int n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  ComplexImage img(n, n);
  for (auto& v : img.values()) v = {g(rng), g(rng)};
  return img;
}

void BM_Fft2c(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ComplexImage img = noise_image(n);
  for (auto _ : state) {
    fft::fft2c(img);
    fft::ifft2c(img);
    benchmark::DoNotOptimize(img(0, 0));
  }
  state.SetItemsProcessed(2 * state.iterations());
}
BENCHMARK(BM_Fft2c)->Arg(64)->Arg(128)->Arg(256);

void BM_ForwardAndRecon(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Phantom p = generate_phantom(3, n, "knee-fs");
  const CoilMaps maps = synth_coil_maps(n, 4, 2);
  for (auto _ : state) {
    const KSpaceVolume k = forward_kspace(p, maps, 8);
    benchmark::DoNotOptimize(recon_sos(k));
  }
}
BENCHMARK(BM_ForwardAndRecon)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_CalibratedNoise(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Phantom p = generate_phantom(3, n, "knee-fs");
  const CoilMaps maps = synth_coil_maps(n, 4, 2);
  const KSpaceVolume k = forward_kspace(p, maps, 8);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(inject_noise_calibrated(k, 18.0, ++seed));
}
BENCHMARK(BM_CalibratedNoise)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_MotionInjection(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Phantom p = generate_phantom(3, n, "knee-nfs");
  const CoilMaps maps = synth_coil_maps(n, 4, 2);
  const KSpaceVolume k = forward_kspace(p, maps, 8);
  const MotionTrajectory t = sample_trajectory(5, n / 8);
  for (auto _ : state) benchmark::DoNotOptimize(inject_motion(k, maps, t));
}
BENCHMARK(BM_MotionInjection)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_BlockDctSigma(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RealImage img(n, n);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(100, 10);
  for (auto& v : img.values()) v = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(block_dct_sigma(img));
}
BENCHMARK(BM_BlockDctSigma)->Arg(128)->Arg(256);

}  // namespace
