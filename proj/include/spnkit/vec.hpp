#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "spnkit/error.hpp"

namespace spnkit {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    if (n <= 0.0 || !std::isfinite(n)) throw InvalidInput("cannot normalize zero or non-finite vector");
    return *this / n;
  }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> a{};

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(3 * r + c)]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(3 * r + c)]; }

  static constexpr Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

  Vec3 operator*(const Vec3& v) const {
    return {a[0] * v.x + a[1] * v.y + a[2] * v.z,
            a[3] * v.x + a[4] * v.y + a[5] * v.z,
            a[6] * v.x + a[7] * v.y + a[8] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  double trace() const { return a[0] + a[4] + a[8]; }

  double det() const {
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
  }
};

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Sweeps until the off-diagonal Frobenius norm drops below `tol`.
/// Eigenvectors come back as columns of V, in the same order as `values`.
template <std::size_t N>
struct SymmetricEigen {
  std::array<double, N> values{};
  std::array<std::array<double, N>, N> vectors{};  // vectors[r][c]: component r of eigenvector c

  static SymmetricEigen solve(std::array<std::array<double, N>, N> m, double tol = 1e-12) {
    std::array<std::array<double, N>, N> v{};
    for (std::size_t i = 0; i < N; ++i) v[i][i] = 1.0;

    auto off_norm = [&m]() {
      double s = 0.0;
      for (std::size_t p = 0; p < N; ++p)
        for (std::size_t q = 0; q < N; ++q)
          if (p != q) s += m[p][q] * m[p][q];
      return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 128 && off_norm() > tol; ++sweep) {
      for (std::size_t p = 0; p + 1 < N; ++p) {
        for (std::size_t q = p + 1; q < N; ++q) {
          if (m[p][q] == 0.0) continue;
          const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
          const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          for (std::size_t k = 0; k < N; ++k) {
            const double mkp = m[k][p], mkq = m[k][q];
            m[k][p] = c * mkp - s * mkq;
            m[k][q] = s * mkp + c * mkq;
          }
          for (std::size_t k = 0; k < N; ++k) {
            const double mpk = m[p][k], mqk = m[q][k];
            m[p][k] = c * mpk - s * mqk;
            m[q][k] = s * mpk + c * mqk;
          }
          for (std::size_t k = 0; k < N; ++k) {
            const double vkp = v[k][p], vkq = v[k][q];
            v[k][p] = c * vkp - s * vkq;
            v[k][q] = s * vkp + c * vkq;
          }
        }
      }
    }

    SymmetricEigen out;
    for (std::size_t i = 0; i < N; ++i) out.values[i] = m[i][i];
    out.vectors = v;
    return out;
  }

  std::size_t largest_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < N; ++i)
      if (values[i] > values[best]) best = i;
    return best;
  }
};

}  // namespace spnkit
