#include "mriq/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mriq/error.hpp"

namespace mriq {
namespace {

struct Ellipse {
  double cx, cy;  // normalized coordinates in (-0.5, 0.5)
  double a, b;    // semi-axes
  double angle;   // radians
  double intensity;
  bool fat = false;

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (dx * c + dy * s) / a;
    const double v = (-dx * s + dy * c) / b;
    return u * u + v * v <= 1.0;
  }
};

class LayoutBuilder {
 public:
  explicit LayoutBuilder(std::mt19937_64& rng) : rng_(rng) {}

  double jitter(double amount) { return std::uniform_real_distribution<>(-amount, amount)(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<>(lo, hi)(rng_); }

  void add(double cx, double cy, double a, double b, double angle_deg, double intensity,
           bool fat = false) {
    ellipses.push_back({cx, cy, a, b, angle_deg * std::numbers::pi / 180.0,
                        intensity * (1.0 + jitter(0.1)), fat});
  }

  std::vector<Ellipse> ellipses;

 private:
  std::mt19937_64& rng_;
};

// Outer body contours are kept inside kPhantomSupportRadius (0.33).
void brain_layout(LayoutBuilder& L) {
  const double s = L.uniform(0.92, 1.0);
  const double cx = L.jitter(0.01), cy = L.jitter(0.01);
  const double rot = L.jitter(8.0);
  L.add(cx, cy, 0.25 * s, 0.31 * s, rot, 0.85, true);          // scalp fat
  L.add(cx, cy, 0.235 * s, 0.295 * s, rot, 0.08);              // skull
  L.add(cx, cy, 0.22 * s, 0.28 * s, rot, 0.55);                // brain
  L.add(cx - 0.07 * s, cy, 0.09 * s, 0.17 * s, rot + 12, 0.42);  // white matter
  L.add(cx + 0.07 * s, cy, 0.09 * s, 0.17 * s, rot - 12, 0.42);
  L.add(cx - 0.025 * s, cy - 0.02, 0.02 * s, 0.08 * s, rot + 10, 0.95);  // ventricles
  L.add(cx + 0.025 * s, cy - 0.02, 0.02 * s, 0.08 * s, rot - 10, 0.95);
  const int lesions = 2 + static_cast<int>(L.uniform(0, 3));
  for (int i = 0; i < lesions; ++i)
    L.add(cx + L.jitter(0.13), cy + L.jitter(0.18), L.uniform(0.01, 0.025),
          L.uniform(0.01, 0.025), L.jitter(90), L.uniform(0.65, 0.8));
}

void knee_layout(LayoutBuilder& L) {
  const double s = L.uniform(0.92, 1.0);
  const double cx = L.jitter(0.01), cy = L.jitter(0.01);
  const double rot = L.jitter(10.0);
  L.add(cx, cy, 0.31 * s, 0.26 * s, rot, 0.9, true);     // subcutaneous fat
  L.add(cx, cy, 0.285 * s, 0.235 * s, rot, 0.45);        // muscle
  L.add(cx, cy - 0.09 * s, 0.15 * s, 0.09 * s, rot, 0.05);  // femur cortex
  L.add(cx, cy - 0.09 * s, 0.135 * s, 0.075 * s, rot, 0.8, true);  // femur marrow
  L.add(cx, cy + 0.1 * s, 0.13 * s, 0.07 * s, rot, 0.05);   // tibia cortex
  L.add(cx, cy + 0.1 * s, 0.115 * s, 0.055 * s, rot, 0.78, true);
  L.add(cx, cy + 0.005, 0.12 * s, 0.012 * s, rot, 0.7);  // cartilage / joint fluid
  L.add(cx + 0.17 * s, cy, 0.035 * s, 0.05 * s, rot, 0.05);  // patella-ish
}

void generic_layout(LayoutBuilder& L) {
  const double s = L.uniform(0.92, 1.0);
  const double cx = L.jitter(0.01), cy = L.jitter(0.01);
  const double ax = L.uniform(0.22, 0.31) * s, by = L.uniform(0.22, 0.31) * s;
  const double rot = L.jitter(20.0);
  L.add(cx, cy, ax, by, rot, 0.85, true);
  L.add(cx, cy, ax - 0.025, by - 0.025, rot, 0.5);
  const int n = 3 + static_cast<int>(L.uniform(0, 4));
  for (int i = 0; i < n; ++i) {
    const bool fat = L.uniform(0, 1) < 0.3;
    L.add(cx + L.jitter(0.5 * ax), cy + L.jitter(0.5 * by), L.uniform(0.03, 0.09),
          L.uniform(0.03, 0.09), L.jitter(90), fat ? 0.8 : L.uniform(0.1, 0.75), fat);
  }
}

// Separable Gaussian blur with reflect-free clamping.
std::vector<double> blur(const std::vector<double>& in, int n, double sigma) {
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) sum += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& k : kernel) k /= sum;
  std::vector<double> tmp(in.size()), out(in.size());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * in[r * n + std::clamp(c + i, 0, n - 1)];
      tmp[r * n + c] = acc;
    }
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp[std::clamp(r + i, 0, n - 1) * n + c];
      out[r * n + c] = acc;
    }
  return out;
}

}  // namespace

ScanType parse_scan_type(std::string_view id) {
  ScanType t;
  const auto dash = id.rfind('-');
  if (dash == std::string_view::npos) {
    t.anatomy = std::string(id);
    return t;
  }
  const auto tag = id.substr(dash + 1);
  if (tag == "fs") {
    t.fat_suppressed = true;
  } else if (tag == "nfs") {
    t.fat_suppressed = false;
  } else {
    t.anatomy = std::string(id);
    return t;
  }
  t.anatomy = std::string(id.substr(0, dash));
  return t;
}

Phantom generate_phantom(std::uint64_t seed, int size, std::string_view scan_type) {
  if (size < 32) throw InvalidArgument("generate_phantom: size must be >= 32");
  std::mt19937_64 rng(seed);
  const ScanType type = parse_scan_type(scan_type);

  LayoutBuilder layout(rng);
  if (type.anatomy == "brain")
    brain_layout(layout);
  else if (type.anatomy == "knee")
    knee_layout(layout);
  else
    generic_layout(layout);

  const bool fs = type.fat_suppressed.value_or(false);
  const double phase0 = layout.uniform(-std::numbers::pi, std::numbers::pi);
  const double phase_x = layout.jitter(0.6), phase_y = layout.jitter(0.6);

  std::vector<double> white(static_cast<std::size_t>(size) * size);
  std::normal_distribution<> gauss(0.0, 1.0);
  for (auto& w : white) w = gauss(rng);
  std::vector<double> texture = blur(white, size, 1.2);
  double var = 0;
  for (double t : texture) var += t * t;
  const double tex_scale = 0.08 / std::sqrt(var / texture.size());

  Phantom p;
  p.scan_type = std::string(scan_type);
  p.pixels = ComplexImage(size, size);
  bool any = false;
  for (int r = 0; r < size; ++r) {
    const double y = (r + 0.5) / size - 0.5;
    for (int c = 0; c < size; ++c) {
      const double x = (c + 0.5) / size - 0.5;
      double value = 0.0;
      for (const auto& e : layout.ellipses)
        if (e.contains(x, y)) value = e.fat && fs ? 0.12 * e.intensity : e.intensity;
      if (value == 0.0) continue;
      value *= 1.0 + tex_scale * texture[static_cast<std::size_t>(r) * size + c];
      const double phase = phase0 + phase_x * x + phase_y * y;
      p.pixels(r, c) = std::polar(std::max(value, 0.0), phase);
      any = any || value > 0.0;
    }
  }
  if (!any) throw NumericalDegeneracy("generate_phantom: empty phantom");
  return p;
}

}  // namespace mriq
