#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mriq/kspace.hpp"

namespace mriq::io {

/// KSET: one line of JSON header (magic "KSET1", height, width, n_coils, etl,
/// acquisition_order, scan_type) terminated by '\n', followed by
/// little-endian float32 (re, im) pairs, coil-major then row-major.
void write_kset(const std::filesystem::path& path, const KSpaceVolume& k);
KSpaceVolume read_kset(const std::filesystem::path& path);

using Provenance = std::map<std::string, std::string>;

struct ImgRecord {
  MagnitudeImage image;
  Provenance provenance;
};

/// IMG: `<stem>.img` holds little-endian float32 row-major pixels; the JSON
/// sidecar `<stem>.json` holds slice_id, scan_type, version, height, width
/// and provenance.
void write_img(const std::filesystem::path& img_path, const MagnitudeImage& image,
               const Provenance& provenance = {});
ImgRecord read_img(const std::filesystem::path& img_path);

std::filesystem::path sidecar_path(const std::filesystem::path& img_path);

/// Rounds every pixel to float32 precision so in-memory values match what
/// an IMG round trip returns.
void round_to_f32(RealImage& img);

}  // namespace mriq::io
