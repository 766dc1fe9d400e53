#pragma once

#include <cstdint>
#include <random>

namespace tsipa {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Child seed for stream `index` of `seed` (per-trial, per-stage, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace tsipa
