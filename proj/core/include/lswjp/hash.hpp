#pragma once

#include <cstdint>
#include <string_view>

namespace lswjp {

// 64-bit FNV-1a. Stable across platforms, used for config fingerprints.
constexpr std::uint64_t fnv1a(std::string_view data,
                              std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lswjp
