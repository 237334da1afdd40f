#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "spnkit/camera.hpp"
#include "spnkit/error.hpp"
#include "spnkit/quaternion.hpp"
#include "spnkit/vec.hpp"
#include "spnkit/wireframe.hpp"

namespace spnkit {

/// Azimuth/elevation of the ray through a pixel, from
///   alpha = atan((B_x - c_x) / f_x),  beta = atan((B_y - c_y) / f_y).
struct BearingAngles {
  double azimuth_rad;    // alpha
  double elevation_rad;  // beta
};

inline BearingAngles bearing_angles(const PinholeCamera& cam, double u_px, double v_px) {
  return {std::atan((u_px - cam.cx_px) / cam.fx_px), std::atan((v_px - cam.cy_px) / cam.fy_px)};
}

enum class InitializerForm {
  /// Direction chosen so the body origin projects exactly onto the box
  /// center. Default: the composed-rotation form below flips the sign of
  /// the lateral component under the v-down image convention.
  kExactRay,
  /// Literal azimuth-then-elevation rotation composition applied to
  /// (0, 0, range). Kept for comparison runs.
  kRotationComposition
};

/// Coarse range from the model/box diagonal ratio,
///   range = ((fx + fy) / 2) * L_C / l_ROI,
/// pointed along the box-center bearing.
inline Vec3 coarse_position(const PinholeCamera& cam, const BoundingBox& box,
                            double characteristic_length_m,
                            InitializerForm form = InitializerForm::kExactRay) {
  if (!(characteristic_length_m > 0.0)) throw InvalidInput("characteristic length must be positive");
  const double diag = box.diagonal();
  if (!(diag > 0.0)) throw InvalidInput("bounding box has zero diagonal");
  const double range = 0.5 * (cam.fx_px + cam.fy_px) * characteristic_length_m / diag;
  const auto [alpha, beta] = bearing_angles(cam, box.center_u(), box.center_v());
  if (form == InitializerForm::kRotationComposition) {
    return {-range * std::sin(alpha) * std::cos(beta), range * std::sin(beta),
            range * std::cos(alpha) * std::cos(beta)};
  }
  const Vec3 dir = Vec3{std::tan(alpha), std::tan(beta), 1.0}.normalized();
  return dir * range;
}

struct SolverConfig {
  int max_iterations = 50;
  double step_tolerance_m = 1e-6;     // stop when the step norm drops below this
  double lambda_initial = 1e-3;
  double lambda_decrease = 0.3;       // after an accepted step
  double lambda_increase = 10.0;      // after a rejected step
  double lambda_max = 1e12;           // give up once damping saturates
};

struct SolveReport {
  Vec3 t{0, 0, 0};                  // estimated relative position, meters
  int iterations = 0;
  double final_residual_px = 0.0;   // RMS of the four edge residuals
  bool converged = false;
  std::array<int, 4> extremal_indices{};  // left/right/top/bottom vertex at the solution
  std::vector<double> cost_trace;   // accepted objective values, sum of squared residuals
};

namespace detail {

struct EdgeFit {
  std::array<double, 4> residual;       // u_L-B1, u_R-B2, v_T-B3, v_B-B4
  std::array<int, 4> vertex;            // extremal vertex indices, ties -> lowest index
  double cost;                          // sum of squared residuals
};

/// Projects every vertex and fits the four extremal coordinates against the
/// box edges. Extremal selection scans in vertex order with strict
/// comparisons, so ties resolve to the lowest index.
inline EdgeFit evaluate_edge_fit(const PinholeCamera& cam, const RotationMatrix& rot,
                                 const Vec3& t, const WireframeModel& model,
                                 const BoundingBox& box) {
  int i_left = 0, i_right = 0, i_top = 0, i_bottom = 0;
  double u_left = 0, u_right = 0, v_top = 0, v_bottom = 0;
  for (int i = 0; i < static_cast<int>(model.vertices.size()); ++i) {
    const ProjectedPoint p = project_point(cam, rot, t, model.vertices[i]);
    if (i == 0) {
      u_left = u_right = p.u;
      v_top = v_bottom = p.v;
    } else {
      if (p.u < u_left) { u_left = p.u; i_left = i; }
      if (p.u > u_right) { u_right = p.u; i_right = i; }
      if (p.v < v_top) { v_top = p.v; i_top = i; }
      if (p.v > v_bottom) { v_bottom = p.v; i_bottom = i; }
    }
  }
  EdgeFit fit;
  fit.residual = {u_left - box.left, u_right - box.right, v_top - box.top, v_bottom - box.bottom};
  fit.vertex = {i_left, i_right, i_top, i_bottom};
  fit.cost = 0.0;
  for (const double r : fit.residual) fit.cost += r * r;
  return fit;
}

/// Solves the damped 3x3 normal equations by Cholesky factorization.
inline Vec3 solve_normal_equations(const std::array<std::array<double, 3>, 3>& a,
                                   const std::array<double, 3>& b) {
  std::array<std::array<double, 3>, 3> l{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s))
          throw SingularNormalMatrix("damped normal matrix is not positive definite");
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  std::array<double, 3> y{};
  for (int i = 0; i < 3; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[i][k] * y[k];
    y[i] = s / l[i][i];
  }
  std::array<double, 3> x{};
  for (int i = 2; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < 3; ++k) s -= l[k][i] * x[k];
    x[i] = s / l[i][i];
  }
  return {x[0], x[1], x[2]};
}

}  // namespace detail

/// Refines the relative position so the projected wireframe fits the box:
/// minimizes the squared mismatch between the four extremal projected
/// coordinates and the four box edges, holding the attitude fixed.
///
/// Each iteration re-selects the extremal vertices at the current estimate,
/// stacks the matching rows of the translation Jacobian into a 4x3 system,
/// and takes a Levenberg-damped Gauss-Newton step. Steps that raise the cost
/// (or push the model behind the camera) are rejected and the damping grows;
/// accepted steps therefore never increase the cost. Convergence means the
/// proposed step norm fell below the tolerance.
inline SolveReport refine_position(const PinholeCamera& cam, const WireframeModel& model,
                                   const UnitQuaternion& attitude, const BoundingBox& box,
                                   const Vec3& t_initial, const SolverConfig& cfg = {}) {
  const RotationMatrix rot = to_rotation_matrix(attitude);

  Vec3 t = t_initial;
  detail::EdgeFit fit = detail::evaluate_edge_fit(cam, rot, t, model, box);  // throws if t_initial is unprojectable

  SolveReport report;
  report.cost_trace.push_back(fit.cost);
  double lambda = cfg.lambda_initial;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    report.iterations = iter;

    // Rows of the 4x3 Jacobian: u-rows at the horizontal extremes, v-rows at
    // the vertical extremes.
    std::array<std::array<double, 3>, 4> jac{};
    for (int r = 0; r < 4; ++r) {
      const Jacobian2x3 j = projection_jacobian_t(cam, rot, t, model.vertices[static_cast<std::size_t>(fit.vertex[r])]);
      const double* row = (r < 2) ? j.du_dt : j.dv_dt;
      jac[r] = {row[0], row[1], row[2]};
    }

    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (int r = 0; r < 4; ++r)
      for (int i = 0; i < 3; ++i) {
        jtr[i] += jac[r][i] * fit.residual[static_cast<std::size_t>(r)];
        for (int j = 0; j < 3; ++j) jtj[i][j] += jac[r][i] * jac[r][j];
      }

    std::array<std::array<double, 3>, 3> damped = jtj;
    for (int i = 0; i < 3; ++i) damped[i][i] += lambda;
    const Vec3 step = detail::solve_normal_equations(damped, {-jtr[0], -jtr[1], -jtr[2]});

    if (step.norm() < cfg.step_tolerance_m) {
      report.converged = true;
      break;
    }

    double trial_cost = std::numeric_limits<double>::infinity();
    detail::EdgeFit trial_fit{};
    bool projectable = true;
    try {
      trial_fit = detail::evaluate_edge_fit(cam, rot, t + step, model, box);
      trial_cost = trial_fit.cost;
    } catch (const PointBehindCamera&) {
      projectable = false;  // treat like a cost increase and damp harder
    }

    if (projectable && trial_cost < fit.cost) {
      t = t + step;
      fit = trial_fit;
      report.cost_trace.push_back(fit.cost);
      lambda = std::max(lambda * cfg.lambda_decrease, 1e-12);
    } else {
      lambda *= cfg.lambda_increase;
      if (lambda > cfg.lambda_max) break;
    }
  }

  report.t = t;
  report.final_residual_px = std::sqrt(fit.cost / 4.0);
  report.extremal_indices = fit.vertex;
  return report;
}

}  // namespace spnkit
