#pragma once

#include <cstddef>
#include <string>

#include "sfc/maps.hpp"

namespace sfc {

// P_L of the inner image along the vertical segment psi = const, delta geometric in [d_lo, d_hi].
// Columns: delta,x1,x2,r,phi.
std::string inner_spiral_csv(const ScenarioConfig& cfg, const FieldSpec& spec, double psi, double d_lo, double d_hi,
                             std::size_t count);

// Return-map image of the base curve (0, t), t in [delta1, delta2], followed by the rows of the four crossings.
// Columns: marker,t,psi,delta,phi,image_psi,image_delta; marker is empty for plain samples.
std::string return_curve_csv(const ScenarioConfig& cfg, const FieldSpec& spec);

// Trajectory of the scaled field from x0 until y3 reaches 1 or t_max, in trajectory CSV format.
std::string phase_portrait_csv(const ScenarioConfig& cfg, const FieldSpec& spec, const Vec3& x0, double t_max);

}  // namespace sfc
