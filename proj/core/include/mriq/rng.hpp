#pragma once

#include <cstdint>
#include <initializer_list>

namespace mriq {

/// SplitMix64 finalizer; used to derive independent child seeds so that
/// every (slice, version, purpose) triple gets its own stream.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = mix_seed(base);
  for (auto k : keys) s = mix_seed(s ^ mix_seed(k + 0x632BE59BD9B4E019ULL));
  return s;
}

}  // namespace mriq
