#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "spnkit/error.hpp"
#include "spnkit/quaternion.hpp"
#include "spnkit/rng.hpp"

namespace spnkit {

/// Shoemake's subgroup construction: maps three uniform [0,1) variates to a
/// rotation drawn from the uniform (Haar) distribution on SO(3) by combining
/// a planar rotation with a coset rotating the z axis.
///
/// The construction's raw 4-tuple
///   (sin(2*pi*x1)*sqrt(1-x0), cos(2*pi*x1)*sqrt(1-x0),
///    sin(2*pi*x2)*sqrt(x0),   cos(2*pi*x2)*sqrt(x0))
/// is assigned to quaternion components (x, y, z, w). Any fixed assignment
/// keeps the distribution uniform on the 3-sphere; this one is the library's
/// convention and is recorded in codebook file headers.
inline UnitQuaternion rotation_from_unit_cube(double x0, double x1, double x2) {
  if (x0 < 0.0 || x0 > 1.0 || x1 < 0.0 || x1 > 1.0 || x2 < 0.0 || x2 > 1.0)
    throw InvalidInput("unit-cube coordinates must lie in [0, 1]");
  const double theta1 = 2.0 * std::numbers::pi * x1;
  const double theta2 = 2.0 * std::numbers::pi * x2;
  const double r1 = std::sqrt(1.0 - x0);
  const double r2 = std::sqrt(x0);
  return UnitQuaternion(std::cos(theta2) * r2,   // w
                        std::sin(theta1) * r1,   // x
                        std::cos(theta1) * r1,   // y
                        std::sin(theta2) * r2);  // z
}

/// One Haar-uniform rotation from the next three draws of `rng`.
inline UnitQuaternion sample_rotation(SplitMix64& rng) {
  const double x0 = rng.next_unit();
  const double x1 = rng.next_unit();
  const double x2 = rng.next_unit();
  return rotation_from_unit_cube(x0, x1, x2);
}

/// `m` Haar-uniform rotations. Sample i comes from stream_for(seed, i), so
/// the result is reproducible bit-for-bit and independent of evaluation
/// order.
inline std::vector<UnitQuaternion> sample_uniform_rotations(std::size_t m, std::uint64_t seed) {
  if (m < 1) throw InvalidInput("sample count must be at least 1");
  std::vector<UnitQuaternion> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    SplitMix64 rng = stream_for(seed, i);
    out.push_back(sample_rotation(rng));
  }
  return out;
}

/// CDF of the rotation angle of a Haar-uniform rotation, F(theta) =
/// (theta - sin(theta)) / pi on [0, pi]. Used by distribution tests and the
/// self-test command.
inline double haar_angle_cdf(double theta) {
  return (theta - std::sin(theta)) / std::numbers::pi;
}

}  // namespace spnkit
