#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lswjp {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent, reproducible seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a seed from a base seed and a sequence of stream identifiers,
// e.g. derive_seed(seed, {epoch, window_t}).
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> ids) noexcept {
  std::uint64_t s = mix_seed(base);
  for (auto id : ids) s = mix_seed(s ^ mix_seed(id + 0x632be59bd9b4e019ULL));
  return s;
}

// Stream tags keep derived seeds of different subsystems apart.
enum class SeedStream : std::uint64_t {
  kWalkPositive = 1,
  kWalkNegative = 2,
  kSkipGramPositive = 3,
  kSkipGramNegative = 4,
  kModelInit = 5,
  kTrainNegatives = 6,
  kDropout = 7,
  kEvalNegatives = 8,
  kValidationNegatives = 9,
};

constexpr std::uint64_t stream_id(SeedStream s) noexcept {
  return static_cast<std::uint64_t>(s);
}

}  // namespace lswjp
