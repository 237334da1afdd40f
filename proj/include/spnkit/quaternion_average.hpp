#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "spnkit/error.hpp"
#include "spnkit/quaternion.hpp"
#include "spnkit/vec.hpp"

namespace spnkit {

/// Markley's weighted quaternion average: accumulate
///   A = (1 / sum(weights)) * sum_i weights[i] * q_i q_i^T
/// and return the unit eigenvector of the largest eigenvalue. Minimizes the
/// weight-averaged squared Frobenius distance between rotation matrices,
/// equivalently maximizes q^T A q over the unit 3-sphere.
///
/// The outer product is sign-blind, so flipping any input quaternion leaves
/// the result unchanged, and input order only matters at floating-point
/// rounding level.
inline UnitQuaternion weighted_average(std::span<const UnitQuaternion> quats,
                                       std::span<const double> weights) {
  if (quats.empty()) throw InvalidInput("weighted_average: no input quaternions");
  if (quats.size() != weights.size())
    throw InvalidInput("weighted_average: quaternion/weight count mismatch");

  std::array<std::array<double, 4>, 4> accum{};
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < quats.size(); ++i) {
    const double wi = weights[i];
    if (!(wi >= 0.0) || !std::isfinite(wi))
      throw InvalidInput("weighted_average: weights must be finite and non-negative");
    const std::array<double, 4> c{quats[i].w(), quats[i].x(), quats[i].y(), quats[i].z()};
    for (int r = 0; r < 4; ++r)
      for (int s = 0; s < 4; ++s) accum[r][s] += wi * c[r] * c[s];
    weight_sum += wi;
  }
  if (weight_sum <= 0.0) throw InvalidInput("weighted_average: weights sum to zero");
  for (auto& row : accum)
    for (auto& v : row) v /= weight_sum;

  const auto eig = SymmetricEigen<4>::solve(accum, 1e-12);
  const std::size_t k = eig.largest_index();
  return UnitQuaternion(eig.vectors[0][k], eig.vectors[1][k], eig.vectors[2][k],
                        eig.vectors[3][k]);
}

inline UnitQuaternion weighted_average(const std::vector<UnitQuaternion>& quats,
                                       const std::vector<double>& weights) {
  return weighted_average(std::span<const UnitQuaternion>(quats),
                          std::span<const double>(weights));
}

}  // namespace spnkit
