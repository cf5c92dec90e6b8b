#include "mriq/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "mriq/error.hpp"

namespace mriq {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double keys_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

Complex sample_bicubic(const ComplexImage& img, double y, double x) {
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0, fx = x - x0;
  double wy[4], wx[4];
  for (int i = 0; i < 4; ++i) {
    wy[i] = keys_weight(fy - (i - 1));
    wx[i] = keys_weight(fx - (i - 1));
  }
  Complex acc{};
  for (int i = 0; i < 4; ++i) {
    const int r = y0 - 1 + i;
    if (r < 0 || r >= img.rows() || wy[i] == 0.0) continue;
    Complex row{};
    for (int j = 0; j < 4; ++j) {
      const int c = x0 - 1 + j;
      if (c < 0 || c >= img.cols() || wx[j] == 0.0) continue;
      row += wx[j] * img(r, c);
    }
    acc += wy[i] * row;
  }
  return acc;
}

}  // namespace

Pose Pose::then(const RigidMove& move) const {
  const double th = move.rotation_deg * kDegToRad;
  const double c = std::cos(th), s = std::sin(th);
  return {rotation_deg + move.rotation_deg, c * shift_x - s * shift_y + move.shift_x,
          s * shift_x + c * shift_y + move.shift_y};
}

void validate(const MotionTrajectory& traj, int n_shots) {
  const int p = traj.n_positions();
  if (p < kMinPositions || p > kMaxPositions)
    throw InvalidArgument("motion trajectory: number of positions must be in [2, 4]");
  for (const auto& m : traj.moves)
    if (std::abs(m.rotation_deg) > kMaxRotationDeg || std::abs(m.shift_x) > kMaxShiftPx ||
        std::abs(m.shift_y) > kMaxShiftPx)
      throw InvalidArgument("motion trajectory: move exceeds 1 degree / 3 pixels");
  if (static_cast<int>(traj.cut_points.size()) != p - 1)
    throw InvalidArgument("motion trajectory: need one cut point per position change");
  int last = 0;
  for (int cut : traj.cut_points) {
    if (cut <= last || cut >= n_shots) throw InvalidArgument("motion trajectory: cut points out of order or range");
    last = cut;
  }
}

MotionTrajectory sample_trajectory(std::uint64_t seed, int n_shots) {
  if (n_shots < 4) throw InvalidArgument("sample_trajectory: need at least 4 shots");
  std::mt19937_64 rng(seed);
  const int positions = std::uniform_int_distribution<>(kMinPositions, kMaxPositions)(rng);
  std::uniform_real_distribution<> rot(-kMaxRotationDeg, kMaxRotationDeg);
  std::uniform_real_distribution<> shift(-kMaxShiftPx, kMaxShiftPx);

  MotionTrajectory traj;
  traj.moves.push_back({});
  for (int i = 1; i < positions; ++i) {
    RigidMove m;
    m.rotation_deg = rot(rng);
    m.shift_x = shift(rng);
    m.shift_y = shift(rng);
    traj.moves.push_back(m);
  }
  std::vector<int> boundaries(n_shots - 1);
  std::iota(boundaries.begin(), boundaries.end(), 1);
  std::sample(boundaries.begin(), boundaries.end(), std::back_inserter(traj.cut_points), positions - 1, rng);
  return traj;
}

ComplexImage warp_rigid(const ComplexImage& img, const Pose& pose) {
  const double th = pose.rotation_deg * kDegToRad;
  const double c = std::cos(th), s = std::sin(th);
  const double cy = 0.5 * (img.rows() - 1), cx = 0.5 * (img.cols() - 1);
  ComplexImage out(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r)
    for (int col = 0; col < img.cols(); ++col) {
      // Inverse map: p = R^T (q - center - t) + center.
      const double qx = col - cx - pose.shift_x;
      const double qy = r - cy - pose.shift_y;
      const double px = c * qx + s * qy + cx;
      const double py = -s * qx + c * qy + cy;
      out(r, col) = sample_bicubic(img, py, px);
    }
  return out;
}

KSpaceVolume motion_kspace(const KSpaceVolume& k, const CoilMaps& maps, const MotionTrajectory& traj) {
  validate(k);
  if (k.n_coils() != maps.n_coils() || k.rows() != maps.rows() || k.cols() != maps.cols())
    throw InvalidArgument("inject_motion: k-space and coil maps disagree");
  const int n_shots = k.n_shots();
  if (traj.moves.empty()) throw InvalidArgument("inject_motion: trajectory has no positions");
  if (static_cast<int>(traj.cut_points.size()) != traj.n_positions() - 1)
    throw InvalidArgument("inject_motion: need one cut point per position change");
  int last = 0;
  for (int cut : traj.cut_points) {
    if (cut <= last || cut >= n_shots) throw InvalidArgument("inject_motion: cut points outside the shot range");
    last = cut;
  }

  const ComplexImage reference = recon_coil_combined(k, maps);
  KSpaceVolume out = k;
  Pose pose;
  for (int j = 0; j < traj.n_positions(); ++j) {
    pose = pose.then(traj.moves[j]);
    const int first = j == 0 ? 0 : traj.cut_points[j - 1];
    const int end = j + 1 < traj.n_positions() ? traj.cut_points[j] : n_shots;
    const std::vector<ComplexImage> moved = encode(warp_rigid(reference, pose), maps);
    for (const auto& slot : k.acquisition_order) {
      if (slot.shot < first || slot.shot >= end) continue;
      for (int c = 0; c < k.n_coils(); ++c)
        std::copy_n(&moved[c](slot.line, 0), k.cols(), &out.coils[c](slot.line, 0));
    }
  }
  return out;
}

MagnitudeImage inject_motion(const KSpaceVolume& k, const CoilMaps& maps, const MotionTrajectory& traj) {
  return recon_sos_image(motion_kspace(k, maps, traj));
}

}  // namespace mriq
