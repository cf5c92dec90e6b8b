#pragma once

#include <cstdint>
#include <vector>

#include "mriq/kspace.hpp"

namespace mriq {

struct RigidMove {
  double rotation_deg = 0.0;
  double shift_x = 0.0;  // pixels, along columns
  double shift_y = 0.0;  // pixels, along rows
};

/// Cumulative rigid pose about the image center.
struct Pose {
  double rotation_deg = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;

  /// Pose after applying `move` on top of this one.
  Pose then(const RigidMove& move) const;
};

/// moves[0] is the initial position relative to the reference (identity for
/// sampled trajectories); moves[j] for j>0 is relative to position j-1.
/// Position j covers shots [cut_points[j-1], cut_points[j]).
struct MotionTrajectory {
  std::vector<RigidMove> moves;
  std::vector<int> cut_points;

  int n_positions() const { return static_cast<int>(moves.size()); }
};

inline constexpr int kMinPositions = 2;
inline constexpr int kMaxPositions = 4;
inline constexpr double kMaxRotationDeg = 1.0;
inline constexpr double kMaxShiftPx = 3.0;

/// Checks the sampled-trajectory invariants (2-4 positions, bounded moves,
/// strictly increasing interior cut points).
void validate(const MotionTrajectory& traj, int n_shots);

MotionTrajectory sample_trajectory(std::uint64_t seed, int n_shots);

/// Bicubic (Keys, a = -0.5) resampling of a complex image under a rigid pose
/// about the image center; samples outside the grid read as zero.
ComplexImage warp_rigid(const ComplexImage& img, const Pose& pose);

/// Composite motion-corrupted k-space: each trajectory segment re-encodes the
/// moved coil-combined image and contributes only its own shots' lines.
KSpaceVolume motion_kspace(const KSpaceVolume& k, const CoilMaps& maps,
                           const MotionTrajectory& traj);

MagnitudeImage inject_motion(const KSpaceVolume& k, const CoilMaps& maps,
                             const MotionTrajectory& traj);

}  // namespace mriq
