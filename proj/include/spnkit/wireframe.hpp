#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spnkit/error.hpp"
#include "spnkit/text_io.hpp"
#include "spnkit/vec.hpp"

namespace spnkit {

/// Target wireframe: body-frame vertices in meters plus index-pair edges.
/// Edges only matter for silhouette sampling and visualization; every
/// geometric quantity is defined over the vertices.
struct WireframeModel {
  std::string name;
  std::vector<Vec3> vertices;
  std::vector<std::pair<int, int>> edges;
};

namespace detail {

/// Vertices are coplanar when the smallest singular value of the centered
/// coordinate matrix vanishes. The check is scale-relative: reject when
/// s_min <= 1e-9 * s_max.
inline bool vertices_coplanar(const std::vector<Vec3>& vs) {
  Vec3 centroid{0, 0, 0};
  for (const Vec3& v : vs) centroid = centroid + v;
  centroid = centroid / static_cast<double>(vs.size());

  std::array<std::array<double, 3>, 3> scatter{};
  for (const Vec3& v : vs) {
    const Vec3 d = v - centroid;
    const std::array<double, 3> c{d.x, d.y, d.z};
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) scatter[r][s] += c[r] * c[s];
  }
  const auto eig = SymmetricEigen<3>::solve(scatter, 1e-300);
  double lo = eig.values[0], hi = eig.values[0];
  for (const double v : eig.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo <= 1e-18 * hi;  // (1e-9)^2 on singular values
}

}  // namespace detail

/// Validates and returns a model. Throws InvalidInput on fewer than 4
/// vertices, non-finite coordinates, out-of-range edge indices, or a
/// coplanar vertex set.
inline WireframeModel make_model(std::string name, std::vector<Vec3> vertices,
                                 std::vector<std::pair<int, int>> edges) {
  if (vertices.size() < 4) throw InvalidInput("model '" + name + "' needs at least 4 vertices");
  for (const Vec3& v : vertices)
    if (!v.finite()) throw InvalidInput("model '" + name + "' has non-finite vertex");
  const int n = static_cast<int>(vertices.size());
  for (const auto& [i, j] : edges)
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw InvalidInput("model '" + name + "' has edge index out of range");
  if (detail::vertices_coplanar(vertices))
    throw InvalidInput("model '" + name + "' vertices are coplanar");
  return WireframeModel{std::move(name), std::move(vertices), std::move(edges)};
}

/// Axis-aligned extents of the vertex set: (min corner, max corner).
inline std::pair<Vec3, Vec3> bounding_cuboid(const WireframeModel& model) {
  Vec3 lo = model.vertices.front(), hi = model.vertices.front();
  for (const Vec3& v : model.vertices) {
    lo.x = std::min(lo.x, v.x);
    lo.y = std::min(lo.y, v.y);
    lo.z = std::min(lo.z, v.z);
    hi.x = std::max(hi.x, v.x);
    hi.y = std::max(hi.y, v.y);
    hi.z = std::max(hi.z, v.z);
  }
  return {lo, hi};
}

enum class LengthConvention {
  kCuboidDiagonal,     // diagonal of the axis-aligned bounding cuboid (default)
  kMaxPairwiseDistance
};

/// Characteristic length L_C of the target, meters. The cuboid diagonal is
/// the default; max pairwise vertex distance is available where a rotation-
/// invariant measure is preferred.
inline double characteristic_length(const WireframeModel& model,
                                    LengthConvention convention = LengthConvention::kCuboidDiagonal) {
  if (convention == LengthConvention::kCuboidDiagonal) {
    const auto [lo, hi] = bounding_cuboid(model);
    return (hi - lo).norm();
  }
  double best = 0.0;
  for (std::size_t i = 0; i < model.vertices.size(); ++i)
    for (std::size_t j = i + 1; j < model.vertices.size(); ++j)
      best = std::max(best, (model.vertices[i] - model.vertices[j]).norm());
  return best;
}

/// Line-oriented text format: "v x y z" vertex records and "e i j" edge
/// records, 17 significant digits, so save/load round-trips bit-exactly.
inline std::string serialize_model(const WireframeModel& model) {
  std::ostringstream out;
  out << "# wireframe model: " << model.name << "\n";
  for (const Vec3& v : model.vertices)
    out << "v " << format_g17(v.x) << ' ' << format_g17(v.y) << ' ' << format_g17(v.z) << "\n";
  for (const auto& [i, j] : model.edges) out << "e " << i << ' ' << j << "\n";
  return out.str();
}

inline void save_model(const WireframeModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

inline WireframeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file " + path.string());
  std::vector<Vec3> vertices;
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto toks = split_ws(line);
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    if (toks[0] == "v" && toks.size() == 4) {
      Vec3 v{parse_double(toks[1], ctx), parse_double(toks[2], ctx), parse_double(toks[3], ctx)};
      if (!v.finite()) throw InvalidInput(ctx + ": non-finite vertex coordinate");
      vertices.push_back(v);
    } else if (toks[0] == "e" && toks.size() == 3) {
      edges.emplace_back(static_cast<int>(parse_int(toks[1], ctx)),
                         static_cast<int>(parse_int(toks[2], ctx)));
    } else {
      throw ParseError(ctx + ": unrecognized record '" + line + "'");
    }
  }
  return make_model(path.stem().string(), std::move(vertices), std::move(edges));
}

/// Built-in stand-in target: a 0.8 x 0.75 x 0.32 m box body plus a deployed
/// 0.8 x 0.75 m panel hinged 0.05 m behind the body's +z face and canted 45
/// degrees. The cant keeps the vertex cloud rounded enough that the
/// diagonal-ratio range estimate stays within 20 percent for nearly all
/// viewing directions; the lateral hinge offset removes every rotational
/// symmetry so distinct attitudes stay distinguishable by silhouette.
/// 16 vertices: 8 body corners, 4 panel corners, 4 panel edge midpoints.
inline WireframeModel mock_target() {
  constexpr double hx = 0.4, hy = 0.375, hz = 0.16;  // body half-extents
  constexpr double px = 0.1, py = 0.075;             // hinge lateral offset
  constexpr double standoff = 0.05;                  // hinge plane behind the +z face
  constexpr double panel_u = 0.4;                    // panel half-width along x
  constexpr double panel_v = 0.75;                   // panel length from the hinge
  const double cant = std::numbers::pi / 4.0;
  const double cv = std::cos(cant), sv = std::sin(cant);
  const auto panel_point = [&](double u, double v) {
    return Vec3{px + u, (py - hy) + v * cv, (hz + standoff) + v * sv};
  };

  std::vector<Vec3> vs;
  for (const double sz : {-hz, hz})
    for (const double sy : {-hy, hy})
      for (const double sx : {-hx, hx}) vs.emplace_back(sx, sy, sz);  // 0..7
  vs.push_back(panel_point(-panel_u, 0.0));       // 8
  vs.push_back(panel_point(panel_u, 0.0));        // 9
  vs.push_back(panel_point(-panel_u, panel_v));   // 10
  vs.push_back(panel_point(panel_u, panel_v));    // 11
  vs.push_back(panel_point(0.0, 0.0));            // 12: hinge midpoint
  vs.push_back(panel_point(0.0, panel_v));        // 13: tip midpoint
  vs.push_back(panel_point(-panel_u, panel_v / 2));  // 14
  vs.push_back(panel_point(panel_u, panel_v / 2));   // 15

  std::vector<std::pair<int, int>> es = {
      {0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3}, {4, 6}, {5, 7},
      {0, 4}, {1, 5}, {2, 6}, {3, 7},  // body
      {8, 12}, {12, 9}, {10, 13}, {13, 11},
      {8, 14}, {14, 10}, {9, 15}, {15, 11},  // panel rim
      {4, 8}, {5, 9}};                        // hinge struts
  return make_model("mock-target", std::move(vs), std::move(es));
}

}  // namespace spnkit
