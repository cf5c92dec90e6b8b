#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "mriq/grid.hpp"

namespace mriq {

/// Scan type identifiers are "<anatomy>-<fs|nfs>", e.g. "knee-fs".
struct ScanType {
  std::string anatomy;
  std::optional<bool> fat_suppressed;  // empty when the tag is missing
};

ScanType parse_scan_type(std::string_view id);

struct Phantom {
  ComplexImage pixels;
  std::string scan_type;

  int size() const { return pixels.rows(); }
};

/// Deterministic synthetic slice: anatomy-dependent ellipse layout, fat
/// structures attenuated for fat-suppressed scan types, smooth phase and a
/// fine multiplicative texture. Support stays within radius 0.33*size.
Phantom generate_phantom(std::uint64_t seed, int size, std::string_view scan_type);

/// Maximum radius (as a fraction of the image size) occupied by phantoms.
inline constexpr double kPhantomSupportRadius = 0.33;

}  // namespace mriq
