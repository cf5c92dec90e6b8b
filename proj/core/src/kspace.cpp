#include "mriq/kspace.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mriq/error.hpp"
#include "mriq/fft.hpp"
#include "mriq/rng.hpp"

namespace mriq {

std::vector<AcquisitionSlot> interleaved_order(int n_lines, int etl) {
  if (n_lines < 1) throw InvalidArgument("interleaved_order: no phase lines");
  if (etl < 1) throw InvalidArgument("interleaved_order: echo train length must be positive");
  const int n_shots = (n_lines + etl - 1) / etl;
  std::vector<AcquisitionSlot> order;
  order.reserve(n_lines);
  for (int s = 0; s < n_shots; ++s)
    for (int line = s; line < n_lines; line += n_shots) order.push_back({s, line});
  return order;
}

int KSpaceVolume::n_shots() const {
  int n = 0;
  for (const auto& slot : acquisition_order) n = std::max(n, slot.shot + 1);
  return n;
}

void validate(const KSpaceVolume& k) {
  if (k.coils.empty()) throw InvalidArgument("k-space has no coils");
  for (const auto& c : k.coils)
    if (!c.same_shape(k.coils.front())) throw InvalidArgument("k-space coils differ in shape");
  if (k.echo_train_length < 1) throw InvalidArgument("k-space echo train length must be positive");
  std::vector<int> seen(k.rows(), 0);
  int last_shot = 0;
  for (const auto& slot : k.acquisition_order) {
    if (slot.line < 0 || slot.line >= k.rows()) throw InvalidArgument("acquisition order: line out of range");
    if (slot.shot < last_shot) throw InvalidArgument("acquisition order: shots not in order");
    last_shot = slot.shot;
    if (seen[slot.line]++) throw InvalidArgument("acquisition order: line acquired twice");
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw InvalidArgument("acquisition order: phase line never acquired");
}

std::vector<ComplexImage> encode(const ComplexImage& image, const CoilMaps& maps) {
  if (maps.n_coils() < 1) throw InvalidArgument("encode: no coil maps");
  if (image.rows() != maps.rows() || image.cols() != maps.cols())
    throw InvalidArgument("encode: image and coil maps differ in shape");
  std::vector<ComplexImage> coils;
  coils.reserve(maps.n_coils());
  for (const auto& s : maps.maps) {
    ComplexImage coil(image.rows(), image.cols());
    for (std::size_t p = 0; p < image.size(); ++p) coil[p] = image[p] * s[p];
    fft::fft2c(coil);
    coils.push_back(std::move(coil));
  }
  return coils;
}

KSpaceVolume forward_kspace(const Phantom& phantom, const CoilMaps& maps, int etl) {
  if (phantom.pixels.rows() != phantom.pixels.cols())
    throw InvalidArgument("forward_kspace: phantom must be square");
  KSpaceVolume k;
  k.coils = encode(phantom.pixels, maps);
  k.echo_train_length = etl;
  k.acquisition_order = interleaved_order(phantom.pixels.rows(), etl);
  k.scan_type = phantom.scan_type;
  return k;
}

RealImage recon_sos(const KSpaceVolume& k) {
  if (k.coils.empty()) throw InvalidArgument("recon_sos: no coils");
  RealImage out(k.rows(), k.cols());
  for (const auto& coil : k.coils) {
    if (!coil.same_shape(k.coils.front())) throw InvalidArgument("recon_sos: coil shape mismatch");
    const ComplexImage img = fft::ifft2c_copy(coil);
    for (std::size_t p = 0; p < img.size(); ++p) out[p] += std::norm(img[p]);
  }
  for (auto& v : out.values()) v = std::sqrt(v);
  return out;
}

MagnitudeImage recon_sos_image(const KSpaceVolume& k) {
  MagnitudeImage m;
  m.pixels = recon_sos(k);
  m.scan_type = k.scan_type;
  return m;
}

ComplexImage recon_coil_combined(const KSpaceVolume& k, const CoilMaps& maps) {
  if (k.n_coils() != maps.n_coils()) throw InvalidArgument("recon_coil_combined: coil count mismatch");
  if (k.rows() != maps.rows() || k.cols() != maps.cols())
    throw InvalidArgument("recon_coil_combined: shape mismatch");
  ComplexImage num(k.rows(), k.cols());
  RealImage den(k.rows(), k.cols()), signal(k.rows(), k.cols());
  for (int i = 0; i < k.n_coils(); ++i) {
    const ComplexImage img = fft::ifft2c_copy(k.coils[i]);
    const ComplexImage& s = maps.maps[i];
    for (std::size_t p = 0; p < img.size(); ++p) {
      num[p] += img[p] * std::conj(s[p]);
      den[p] += std::norm(s[p]);
      signal[p] += std::norm(img[p]);
    }
  }
  for (std::size_t p = 0; p < num.size(); ++p) {
    if (den[p] <= 0.0) {
      if (signal[p] == 0.0) continue;  // outside every coil and no signal
      throw NumericalDegeneracy("recon_coil_combined: zero coil sensitivity at a signal pixel");
    }
    num[p] /= std::sqrt(den[p]);
  }
  return num;
}

double snr_db(const RealImage& reference, const RealImage& img) {
  if (!reference.same_shape(img)) throw InvalidArgument("snr_db: shape mismatch");
  double signal = 0.0, error = 0.0;
  for (std::size_t p = 0; p < img.size(); ++p) {
    signal += reference[p] * reference[p];
    const double d = reference[p] - img[p];
    error += d * d;
  }
  if (error == 0.0) throw DegenerateInput("snr_db: images are identical");
  return 10.0 * std::log10(signal / error);
}

KSpaceVolume add_kspace_noise(const KSpaceVolume& k, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("add_kspace_noise: invalid sigma");
  KSpaceVolume out = k;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<> gauss(0.0, sigma);
  for (auto& coil : out.coils)
    for (auto& v : coil.values()) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      v += Complex(re, im);
    }
  return out;
}

namespace {

std::vector<ComplexImage> unit_noise(const KSpaceVolume& k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<> gauss(0.0, 1.0);
  std::vector<ComplexImage> out(k.coils.size(), ComplexImage(k.rows(), k.cols()));
  for (auto& coil : out)
    for (auto& v : coil.values()) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      v = Complex(re, im);
    }
  return out;
}

KSpaceVolume add_scaled(const KSpaceVolume& k, const std::vector<ComplexImage>& noise, double sigma) {
  KSpaceVolume out = k;
  for (std::size_t c = 0; c < out.coils.size(); ++c)
    for (std::size_t p = 0; p < out.coils[c].size(); ++p) out.coils[c][p] += sigma * noise[c][p];
  return out;
}

}  // namespace

NoiseInjection inject_noise_calibrated(const KSpaceVolume& k, double target_snr_db,
                                       std::uint64_t seed) {
  if (std::isnan(target_snr_db) || target_snr_db == -kNoNoise)
    throw InvalidArgument("inject_noise: target SNR must be finite or +inf");
  if (target_snr_db == kNoNoise) return {k, 0.0, kNoNoise};
  validate(k);

  // One unit-variance realization scaled by sigma: SNR is then a smooth,
  // decreasing function of sigma and bisection is well posed.
  // The inverse FFT is linear, so the search runs on image-domain coil
  // images without re-transforming at every step.
  const std::vector<ComplexImage> noise = unit_noise(k, seed);
  const RealImage clean = recon_sos(k);
  std::vector<ComplexImage> coil_img, noise_img;
  for (std::size_t c = 0; c < k.coils.size(); ++c) {
    coil_img.push_back(fft::ifft2c_copy(k.coils[c]));
    noise_img.push_back(fft::ifft2c_copy(noise[c]));
  }
  RealImage trial(clean.rows(), clean.cols());
  auto snr_at = [&](double log_sigma) {
    const double sigma = std::exp(log_sigma);
    std::fill(trial.values().begin(), trial.values().end(), 0.0);
    for (std::size_t c = 0; c < coil_img.size(); ++c)
      for (std::size_t p = 0; p < trial.size(); ++p) trial[p] += std::norm(coil_img[c][p] + sigma * noise_img[c][p]);
    for (auto& v : trial.values()) v = std::sqrt(v);
    return snr_db(clean, trial);
  };

  double energy = 0.0;
  for (double v : clean.values()) energy += v * v;
  if (energy == 0.0) throw DegenerateInput("inject_noise: zero-signal k-space");
  // Unitary transforms: image-domain noise energy ~ 2 sigma^2 per pixel per coil.
  const double n_samples = static_cast<double>(clean.size()) * k.n_coils();
  const double guess = std::log(std::sqrt(energy / (2.0 * n_samples) * std::pow(10.0, -target_snr_db / 10.0)));

  double lo = guess - 1.0, hi = guess + 1.0;
  while (snr_at(lo) < target_snr_db) lo -= 2.0;
  while (snr_at(hi) > target_snr_db) hi += 2.0;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    (snr_at(mid) > target_snr_db ? lo : hi) = mid;
  }
  NoiseInjection result;
  result.sigma = std::exp(0.5 * (lo + hi));
  result.kspace = add_scaled(k, noise, result.sigma);
  result.achieved_snr_db = snr_db(clean, recon_sos(result.kspace));
  return result;
}

KSpaceVolume inject_noise(const KSpaceVolume& k, double target_snr_db, std::uint64_t seed) {
  return inject_noise_calibrated(k, target_snr_db, seed).kspace;
}

std::vector<double> linear_db_targets(int count, double low_db, double high_db) {
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i)
    t[i] = count == 1 ? low_db : low_db + (high_db - low_db) * i / (count - 1);
  return t;
}

VersionSetImages make_version_set(const KSpaceVolume& acquired, int m_t, double snr_low_db,
                                  double snr_high_db, std::uint64_t seed) {
  if (m_t < 3) throw InvalidArgument("make_version_set: m_t must be >= 3");
  if (!(snr_low_db < snr_high_db)) throw InvalidArgument("make_version_set: snr_low must be < snr_high");
  VersionSetImages out;
  out.target_db = linear_db_targets(m_t - 1, snr_low_db, snr_high_db);
  out.target_db.push_back(kNoNoise);
  for (int v = 1; v <= m_t; ++v) {
    const KSpaceVolume k = inject_noise(acquired, out.target_db[v - 1], derive_seed(seed, {static_cast<std::uint64_t>(v)}));
    MagnitudeImage img = recon_sos_image(k);
    img.version = v;
    out.versions.push_back(std::move(img));
  }
  return out;
}

VersionSetImages make_version_set(const Phantom& phantom, const CoilMaps& maps, int m_t,
                                  double snr_low_db, double snr_high_db, std::uint64_t seed, int etl) {
  return make_version_set(forward_kspace(phantom, maps, etl), m_t, snr_low_db, snr_high_db, seed);
}

}  // namespace mriq
