#include <cmath>
#include <numbers>
#include <random>

#include "mriq/error.hpp"
#include "mriq/kspace.hpp"

namespace mriq {
namespace {

constexpr double kLobeRadius = 0.6;   // coil centers, fraction of FOV
constexpr double kLobeWidth = 0.5;    // Gaussian sigma, fraction of FOV
constexpr double kTaperInner = 0.35;  // unit sum-of-squares inside this radius
constexpr double kTaperOuter = 0.55;
constexpr double kTaperFloor = 0.05;

double support_taper(double radius) {
  if (radius <= kTaperInner) return 1.0;
  if (radius >= kTaperOuter) return kTaperFloor;
  const double t = (radius - kTaperInner) / (kTaperOuter - kTaperInner);
  return kTaperFloor + (1.0 - kTaperFloor) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace

CoilMaps synth_coil_maps(int size, int n_coils, std::uint64_t seed) {
  if (n_coils < 1 || n_coils > 32) throw InvalidArgument("synth_coil_maps: n_coils must be in [1, 32]");
  if (size < 1) throw InvalidArgument("synth_coil_maps: size must be positive");

  CoilMaps out;
  if (n_coils == 1) {
    out.maps.emplace_back(size, size, Complex(1.0, 0.0));
    return out;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<> unit(0.0, 1.0);
  const double offset = 2 * std::numbers::pi * unit(rng);
  const double n = size;

  struct Lobe {
    double cx, cy, ramp_x, ramp_y, phase;
  };
  std::vector<Lobe> lobes(n_coils);
  for (int i = 0; i < n_coils; ++i) {
    const double angle = offset + 2 * std::numbers::pi * i / n_coils;
    lobes[i] = {0.5 + kLobeRadius * std::cos(angle), 0.5 + kLobeRadius * std::sin(angle),
                2 * unit(rng) - 1, 2 * unit(rng) - 1, 2 * std::numbers::pi * unit(rng)};
    out.maps.emplace_back(size, size);
  }

  std::vector<double> g(n_coils);
  for (int r = 0; r < size; ++r) {
    const double y = (r + 0.5) / n;
    for (int c = 0; c < size; ++c) {
      const double x = (c + 0.5) / n;
      double ss = 0.0;
      for (int i = 0; i < n_coils; ++i) {
        const double dx = x - lobes[i].cx, dy = y - lobes[i].cy;
        g[i] = std::exp(-(dx * dx + dy * dy) / (2 * kLobeWidth * kLobeWidth));
        ss += g[i] * g[i];
      }
      const double taper = support_taper(std::hypot(x - 0.5, y - 0.5)) / std::sqrt(ss);
      for (int i = 0; i < n_coils; ++i) {
        const double phase = lobes[i].phase +
                             2 * std::numbers::pi * (lobes[i].ramp_x * (x - 0.5) + lobes[i].ramp_y * (y - 0.5));
        out.maps[i](r, c) = std::polar(g[i] * taper, phase);
      }
    }
  }
  return out;
}

}  // namespace mriq
