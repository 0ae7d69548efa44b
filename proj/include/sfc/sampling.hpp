#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sfc/geometry.hpp"

namespace sfc {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

// Halton points in [0,1)^3 (bases 2, 3, 5) with a seeded Cranley-Patterson rotation.
std::vector<std::array<double, 3>> halton3(std::size_t count, std::uint64_t seed);
// Same in two dimensions (bases 2, 3).
std::vector<std::array<double, 2>> halton2(std::size_t count, std::uint64_t seed);

// Deterministic points covering B1: low-discrepancy interior plus rim and axis points.
std::vector<Vec3> b1_grid(std::size_t count, std::uint64_t seed);

}  // namespace sfc
