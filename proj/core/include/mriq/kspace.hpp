#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mriq/grid.hpp"
#include "mriq/phantom.hpp"

namespace mriq {

struct CoilMaps {
  std::vector<ComplexImage> maps;

  int n_coils() const { return static_cast<int>(maps.size()); }
  int rows() const { return maps.empty() ? 0 : maps.front().rows(); }
  int cols() const { return maps.empty() ? 0 : maps.front().cols(); }
};

/// Smooth complex Gaussian-lobe sensitivities, unit sum-of-squares over the
/// central disc, rolled off towards the field-of-view border.
CoilMaps synth_coil_maps(int size, int n_coils, std::uint64_t seed);

struct AcquisitionSlot {
  int shot = 0;
  int line = 0;
  friend bool operator==(const AcquisitionSlot&, const AcquisitionSlot&) = default;
};

/// Interleaved multi-shot order: shot s acquires lines s, s+n_shots, ...
std::vector<AcquisitionSlot> interleaved_order(int n_lines, int echo_train_length);

struct KSpaceVolume {
  std::vector<ComplexImage> coils;  // K_i, centered k-space, rows = phase lines
  std::vector<AcquisitionSlot> acquisition_order;
  int echo_train_length = 1;
  std::string scan_type;

  int n_coils() const { return static_cast<int>(coils.size()); }
  int rows() const { return coils.empty() ? 0 : coils.front().rows(); }
  int cols() const { return coils.empty() ? 0 : coils.front().cols(); }
  int n_shots() const;
};

/// Throws InvalidArgument unless acquisition_order is a permutation of the
/// phase lines and all coils share one shape.
void validate(const KSpaceVolume& k);

struct MagnitudeImage {
  RealImage pixels;
  std::string slice_id;
  std::string scan_type;
  int version = 0;
};

KSpaceVolume forward_kspace(const Phantom& phantom, const CoilMaps& maps, int etl);

/// Per-coil forward model K_i = F{x * s_i} for an arbitrary complex image.
std::vector<ComplexImage> encode(const ComplexImage& image, const CoilMaps& maps);

RealImage recon_sos(const KSpaceVolume& k);
MagnitudeImage recon_sos_image(const KSpaceVolume& k);

/// x_o = sum_i I_i conj(s_i) / sqrt(sum_i |s_i|^2).
ComplexImage recon_coil_combined(const KSpaceVolume& k, const CoilMaps& maps);

/// 10*log10(sum |ref|^2 / sum |ref - img|^2).
double snr_db(const RealImage& reference, const RealImage& img);

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// Adds complex WGN with variance sigma^2 on each of the real and imaginary
/// parts of every sample of every coil.
KSpaceVolume add_kspace_noise(const KSpaceVolume& k, double sigma, std::uint64_t seed);

struct NoiseInjection {
  KSpaceVolume kspace;
  double sigma = 0.0;
  double achieved_snr_db = kNoNoise;
};

/// Calibrates sigma (bisection in log sigma, 20 iterations on a fixed noise
/// realization) so that the SOS image SNR against the input's SOS image hits
/// target_snr_db. target = +inf returns the input unchanged.
NoiseInjection inject_noise_calibrated(const KSpaceVolume& k, double target_snr_db,
                                       std::uint64_t seed);
KSpaceVolume inject_noise(const KSpaceVolume& k, double target_snr_db, std::uint64_t seed);

/// Linearly spaced dB targets for versions 1..count.
std::vector<double> linear_db_targets(int count, double low_db, double high_db);

struct VersionSetImages {
  std::vector<MagnitudeImage> versions;  // v = 1..m_t stored at index v-1
  std::vector<double> target_db;         // +inf for the clean version
};

/// m_t-1 noisy versions at linearly spaced targets plus the clean recon.
VersionSetImages make_version_set(const KSpaceVolume& acquired, int m_t, double snr_low_db,
                                  double snr_high_db, std::uint64_t seed);
VersionSetImages make_version_set(const Phantom& phantom, const CoilMaps& maps, int m_t,
                                  double snr_low_db, double snr_high_db, std::uint64_t seed,
                                  int etl = 8);

}  // namespace mriq
