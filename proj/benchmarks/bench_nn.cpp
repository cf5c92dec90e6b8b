#include <benchmark/benchmark.h>

#include <random>

#include "mriq/nn/dn_layer.hpp"
#include "mriq/nn/dual_task_net.hpp"
#include "mriq/nn/layers.hpp"

using namespace mriq;
using namespace mriq::nn;

namespace {

Tensor random_tensor(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Tensor t(c, h, w);
  for (auto& v : t.data) v = g(rng);
  return t;
}

RealImage random_image(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 100);
  RealImage img(n, n);
  for (auto& v : img.values()) v = u(rng);
  return img;
}

// First trunk stage of the default network on a 128x128 input.
void BM_ConvForward(benchmark::State& state) {
  Conv2D conv("c", 1, 16, 5, 2, ParamGroup::kTrunk);
  std::mt19937_64 rng(1);
  conv.init_uniform(rng);
  const Tensor x = random_tensor(1, 128, 128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
}
BENCHMARK(BM_ConvForward);

void BM_ConvBackward(benchmark::State& state) {
  Conv2D conv("c", 16, 32, 3, 2, ParamGroup::kTrunk);
  std::mt19937_64 rng(1);
  conv.init_uniform(rng);
  const Tensor x = random_tensor(16, 64, 64, 2);
  Conv2D::Cache cache;
  const Tensor y = conv.forward(x, &cache);
  const Tensor g = random_tensor(y.channels, y.height, y.width, 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv.backward(g, cache, true));
}
BENCHMARK(BM_ConvBackward);

void BM_DnForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  DnLayer dn("dn", c, ParamGroup::kTrunk);
  const Tensor z = random_tensor(c, 32, 32, 4);
  for (auto _ : state) benchmark::DoNotOptimize(dn.forward(z));
}
BENCHMARK(BM_DnForward)->Arg(16)->Arg(64);

void BM_DnBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  DnLayer dn("dn", c, ParamGroup::kTrunk);
  const Tensor z = random_tensor(c, 32, 32, 4);
  DnLayer::Cache cache;
  dn.forward(z, &cache);
  const Tensor g = random_tensor(c, 32, 32, 5);
  for (auto _ : state) benchmark::DoNotOptimize(dn.backward(g, cache));
}
BENCHMARK(BM_DnBackward)->Arg(16)->Arg(64);

void BM_NetForward(benchmark::State& state) {
  const DualTaskNet net({}, 1);
  const RealImage img = random_image(128, 6);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(img));
}
BENCHMARK(BM_NetForward)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const bool motion = state.range(0) == 1;
  DualTaskNet net({}, 1);
  std::vector<RealImage> imgs;
  for (int i = 0; i < 10; ++i) imgs.push_back(random_image(128, 10 + i));
  DualTaskNet::Batch batch;
  batch.task = motion ? Task::kMotion : Task::kNoise;
  for (int i = 0; i < 10; ++i) {
    batch.images.push_back(&imgs[i]);
    batch.targets.push_back(motion ? i % 2 : 40.0 + i);
  }
  const AdamConfig adam{};
  for (auto _ : state) benchmark::DoNotOptimize(net.train_step(batch, adam));
  state.SetLabel(motion ? "motion batch of 10" : "noise batch of 10");
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
