#include "mriq/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "mriq/error.hpp"

namespace mriq {
namespace {

constexpr int kBlock = 8;
constexpr double kMadToSigma = 1.4826;

// Orthonormal DCT-II basis: basis[u][x].
const std::array<std::array<double, kBlock>, kBlock>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, kBlock>, kBlock> b{};
    for (int u = 0; u < kBlock; ++u) {
      const double scale = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int x = 0; x < kBlock; ++x)
        b[u][x] = scale * std::cos(std::numbers::pi * (2 * x + 1) * u / (2.0 * kBlock));
    }
    return b;
  }();
  return basis;
}

using Block = std::array<std::array<double, kBlock>, kBlock>;

Block dct8x8(const RealImage& img, int r0, int c0) {
  const auto& b = dct_basis();
  Block tmp{}, out{};
  for (int x = 0; x < kBlock; ++x)  // rows of the block: transform along columns
    for (int v = 0; v < kBlock; ++v) {
      double acc = 0;
      for (int y = 0; y < kBlock; ++y) acc += b[v][y] * img(r0 + x, c0 + y);
      tmp[x][v] = acc;
    }
  for (int u = 0; u < kBlock; ++u)
    for (int v = 0; v < kBlock; ++v) {
      double acc = 0;
      for (int x = 0; x < kBlock; ++x) acc += b[u][x] * tmp[x][v];
      out[u][v] = acc;
    }
  return out;
}

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

std::string_view to_string(HeuristicMethod m) {
  return m == HeuristicMethod::kSnr ? "snr" : "block_dct";
}

HeuristicMethod heuristic_method_from_string(std::string_view name) {
  if (name == "snr" || name == "SNR") return HeuristicMethod::kSnr;
  if (name == "block_dct" || name == "block-dct" || name == "BLOCK_DCT") return HeuristicMethod::kBlockDct;
  throw InvalidArgument("unknown heuristic method: " + std::string(name));
}

std::vector<HeuristicScore> snr_heuristic(std::span<const MagnitudeImage> set) {
  const int m_t = static_cast<int>(set.size());
  if (m_t < 3) throw InvalidArgument("snr_heuristic: need at least 3 versions");
  const RealImage& ref = set.back().pixels;
  for (const auto& img : set)
    if (!img.pixels.same_shape(ref)) throw InvalidArgument("snr_heuristic: versions differ in shape");

  double signal = 0.0;
  for (double v : ref.values()) signal += v * v;

  std::vector<HeuristicScore> out(m_t);
  for (int i = 0; i < m_t - 1; ++i) {
    double err = 0.0;
    for (std::size_t p = 0; p < ref.size(); ++p) {
      const double d = ref[p] - set[i].pixels[p];
      err += d * d;
    }
    if (err == 0.0) throw DegenerateInput("snr_heuristic: version identical to the reference");
    out[i].value = 10.0 * std::log10(signal / err);
  }
  out[m_t - 1].value = out[m_t - 2].value + (out[m_t - 2].value - out[m_t - 3].value);
  for (int i = 0; i < m_t; ++i) {
    out[i].method = HeuristicMethod::kSnr;
    out[i].slice_id = set[i].slice_id;
    out[i].version = set[i].version != 0 ? set[i].version : i + 1;
  }
  return out;
}

double block_dct_sigma(const RealImage& img) {
  if (img.rows() < 16 || img.cols() < 16) throw InvalidArgument("block_dct_sigma: image must be at least 16x16");
  struct Scored {
    double texture;
    Block coeffs;
  };
  std::vector<Scored> blocks;
  for (int r = 0; r + kBlock <= img.rows(); r += kBlock)
    for (int c = 0; c + kBlock <= img.cols(); c += kBlock) {
      Scored s{0.0, dct8x8(img, r, c)};
      for (int u = 0; u < kBlock; ++u)
        for (int v = 0; v < kBlock; ++v)
          if (u + v >= 1 && u + v <= 4) s.texture += std::abs(s.coeffs[u][v]);
      blocks.push_back(s);
    }
  std::stable_sort(blocks.begin(), blocks.end(),
                   [](const Scored& a, const Scored& b) { return a.texture < b.texture; });
  const std::size_t keep = std::max<std::size_t>(1, blocks.size() / 2);

  std::vector<double> pooled;
  pooled.reserve(keep * 28);
  for (std::size_t i = 0; i < keep; ++i)
    for (int u = 0; u < kBlock; ++u)
      for (int v = 0; v < kBlock; ++v)
        if (u + v >= 8) pooled.push_back(std::abs(blocks[i].coeffs[u][v]));
  return kMadToSigma * median_inplace(pooled);
}

double block_dct_score(double sigma) { return -10.0 * std::log10(std::max(sigma * sigma, kBlockDctEpsilon)); }

HeuristicScore block_dct_heuristic(const MagnitudeImage& img) {
  return {block_dct_score(block_dct_sigma(img.pixels)), HeuristicMethod::kBlockDct, img.slice_id, img.version};
}

std::vector<HeuristicScore> compute_heuristics(std::span<const MagnitudeImage> set, HeuristicMethod method) {
  if (method == HeuristicMethod::kSnr) return snr_heuristic(set);
  std::vector<HeuristicScore> out;
  out.reserve(set.size());
  for (const auto& img : set) out.push_back(block_dct_heuristic(img));
  return out;
}

}  // namespace mriq
