#pragma once

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include "spnkit/error.hpp"
#include "spnkit/quaternion.hpp"
#include "spnkit/text_io.hpp"
#include "spnkit/vec.hpp"
#include "spnkit/wireframe.hpp"

namespace spnkit {

/// Pinhole camera. Focal lengths and principal point are in pixels; the
/// physical pixel pitch (du, dv) is carried as metadata so files preserve
/// the sensor description they came from.
struct PinholeCamera {
  double fx_px = 0.0;
  double fy_px = 0.0;
  double cx_px = 0.0;
  double cy_px = 0.0;
  double width_px = 0.0;   // N_u
  double height_px = 0.0;  // N_v
  double du_m = 0.0;
  double dv_m = 0.0;

  void validate() const {
    if (!(fx_px > 0.0) || !(fy_px > 0.0)) throw InvalidInput("camera focal lengths must be positive");
    if (cx_px < 0.0 || cx_px > width_px || cy_px < 0.0 || cy_px > height_px)
      throw InvalidInput("camera principal point must lie inside the image");
  }

  /// The preset used throughout: 1920x1200 image, 17.6 mm focal length on a
  /// 5.86 um pixel pitch (so f = 0.0176 / 5.86e-6 px), principal point at
  /// the image center.
  static PinholeCamera speed_preset() {
    PinholeCamera cam;
    cam.du_m = 5.86e-6;
    cam.dv_m = 5.86e-6;
    cam.fx_px = 0.0176 / cam.du_m;
    cam.fy_px = 0.0176 / cam.dv_m;
    cam.width_px = 1920.0;
    cam.height_px = 1200.0;
    cam.cx_px = cam.width_px / 2.0;
    cam.cy_px = cam.height_px / 2.0;
    return cam;
  }
};

inline std::string serialize_camera(const PinholeCamera& cam) {
  std::ostringstream out;
  out << "N_u " << format_g17(cam.width_px) << "\n"
      << "N_v " << format_g17(cam.height_px) << "\n"
      << "f_x_px " << format_g17(cam.fx_px) << "\n"
      << "f_y_px " << format_g17(cam.fy_px) << "\n"
      << "c_x " << format_g17(cam.cx_px) << "\n"
      << "c_y " << format_g17(cam.cy_px) << "\n"
      << "du " << format_g17(cam.du_m) << "\n"
      << "dv " << format_g17(cam.dv_m) << "\n";
  return out.str();
}

inline void save_camera(const PinholeCamera& cam, const std::filesystem::path& path) {
  write_file(path, serialize_camera(cam));
}

inline PinholeCamera load_camera(const std::filesystem::path& path) {
  const auto kv = read_key_value(path);
  const std::string ctx = path.string();
  PinholeCamera cam;
  cam.width_px = parse_double(kv_get(kv, "N_u", ctx), ctx);
  cam.height_px = parse_double(kv_get(kv, "N_v", ctx), ctx);
  cam.fx_px = parse_double(kv_get(kv, "f_x_px", ctx), ctx);
  cam.fy_px = parse_double(kv_get(kv, "f_y_px", ctx), ctx);
  cam.cx_px = parse_double(kv_get(kv, "c_x", ctx), ctx);
  cam.cy_px = parse_double(kv_get(kv, "c_y", ctx), ctx);
  cam.du_m = parse_double(kv_get(kv, "du", ctx), ctx);
  cam.dv_m = parse_double(kv_get(kv, "dv", ctx), ctx);
  cam.validate();
  return cam;
}

/// Resolves "speed" to the built-in preset, anything else as a file path.
inline PinholeCamera resolve_camera(const std::string& spec) {
  if (spec == "speed") return PinholeCamera::speed_preset();
  return load_camera(spec);
}

/// Axis-aligned image-plane box: left, right, top, bottom edge coordinates
/// in pixels (image v grows downward, so top < bottom). Never clipped to the
/// frame; frame containment is tracked separately where it matters.
struct BoundingBox {
  double left;    // B_1
  double right;   // B_2
  double top;     // B_3
  double bottom;  // B_4

  BoundingBox(double b1, double b2, double b3, double b4)
      : left(b1), right(b2), top(b3), bottom(b4) {
    if (!(left < right) || !(top < bottom))
      throw InvalidInput("bounding box edges must satisfy left < right and top < bottom");
  }

  double center_u() const { return 0.5 * (left + right); }    // B_x
  double center_v() const { return 0.5 * (top + bottom); }    // B_y
  double width() const { return right - left; }
  double height() const { return bottom - top; }
  double diagonal() const { return std::hypot(width(), height()); }  // l_ROI
  double area() const { return width() * height(); }

  bool inside_frame(const PinholeCamera& cam) const {
    return left >= 0.0 && right <= cam.width_px && top >= 0.0 && bottom <= cam.height_px;
  }
};

struct ProjectedPoint {
  double u = 0.0;  // px
  double v = 0.0;  // px
  double w = 0.0;  // camera-frame depth, meters
};

constexpr double kMinProjectionDepth = 1e-9;  // meters

/// Perspective projection of a body-frame point:
///   X_c = R(q) * X + t,  u = fx * X_c.x / X_c.z + cx,  v = fy * X_c.y / X_c.z + cy.
/// Throws PointBehindCamera when the camera-frame depth is not positive.
inline ProjectedPoint project_point(const PinholeCamera& cam, const RotationMatrix& rotation,
                                    const Vec3& translation, const Vec3& body_point) {
  const Vec3 xc = rotation * body_point + translation;
  if (xc.z <= kMinProjectionDepth)
    throw PointBehindCamera("point at camera-frame depth " + format_g17(xc.z) + " m");
  return {cam.fx_px * xc.x / xc.z + cam.cx_px, cam.fy_px * xc.y / xc.z + cam.cy_px, xc.z};
}

inline ProjectedPoint project_point(const PinholeCamera& cam, const Pose& pose, const Vec3& body_point) {
  return project_point(cam, to_rotation_matrix(pose.q), pose.t, body_point);
}

/// 2x3 derivative of the projected (u, v) with respect to the translation,
/// px per meter:
///   [ fx/w   0    -fx*X_c.x/w^2 ]
///   [  0    fy/w  -fy*X_c.y/w^2 ]
struct Jacobian2x3 {
  double du_dt[3];
  double dv_dt[3];
};

inline Jacobian2x3 projection_jacobian_t(const PinholeCamera& cam, const RotationMatrix& rotation,
                                         const Vec3& translation, const Vec3& body_point) {
  const Vec3 xc = rotation * body_point + translation;
  if (xc.z <= kMinProjectionDepth)
    throw PointBehindCamera("jacobian requested behind camera, depth " + format_g17(xc.z) + " m");
  const double w = xc.z;
  return {{cam.fx_px / w, 0.0, -cam.fx_px * xc.x / (w * w)},
          {0.0, cam.fy_px / w, -cam.fy_px * xc.y / (w * w)}};
}

inline Jacobian2x3 projection_jacobian_t(const PinholeCamera& cam, const Pose& pose, const Vec3& body_point) {
  return projection_jacobian_t(cam, to_rotation_matrix(pose.q), pose.t, body_point);
}

struct TightBox {
  BoundingBox box;
  bool in_frame;  // whole box within [0, N_u] x [0, N_v]
};

/// Smallest box containing every projected model vertex. Not clipped; the
/// in_frame flag reports whether the box stays inside the image. Throws
/// PointBehindCamera if any vertex has non-positive depth.
inline TightBox tight_bbox(const PinholeCamera& cam, const Pose& pose, const WireframeModel& model) {
  const RotationMatrix rot = to_rotation_matrix(pose.q);
  double min_u = 0.0, max_u = 0.0, min_v = 0.0, max_v = 0.0;
  bool first = true;
  for (const Vec3& vertex : model.vertices) {
    const ProjectedPoint p = project_point(cam, rot, pose.t, vertex);
    if (first) {
      min_u = max_u = p.u;
      min_v = max_v = p.v;
      first = false;
    } else {
      min_u = std::min(min_u, p.u);
      max_u = std::max(max_u, p.u);
      min_v = std::min(min_v, p.v);
      max_v = std::max(max_v, p.v);
    }
  }
  const BoundingBox box(min_u, max_u, min_v, max_v);
  return {box, box.inside_frame(cam)};
}

}  // namespace spnkit
