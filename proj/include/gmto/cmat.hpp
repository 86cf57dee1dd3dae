#pragma once

#include <array>

#include <Eigen/Core>

namespace gmto {

/// Plane elasticity matrix stored as its six independent components
/// (Voigt order xx, yy, xy with engineering shear strain).
struct Cmat {
  double c11 = 0, c12 = 0, c13 = 0, c22 = 0, c23 = 0, c33 = 0;

  /// Components in template order: C11, C22, C33, C12, C13, C23.
  std::array<double, 6> template_weights() const { return {c11, c22, c33, c12, c13, c23}; }
  static Cmat from_template_weights(const std::array<double, 6>& w) {
    return {w[0], w[3], w[4], w[1], w[5], w[2]};
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d m;
    m << c11, c12, c13, c12, c22, c23, c13, c23, c33;
    return m;
  }
  /// Takes the symmetric part of `m`.
  static Cmat from_matrix(const Eigen::Matrix3d& m) {
    return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), 0.5 * (m(0, 2) + m(2, 0)),
            m(1, 1), 0.5 * (m(1, 2) + m(2, 1)), m(2, 2)};
  }

  Cmat& operator+=(const Cmat& o) {
    c11 += o.c11; c12 += o.c12; c13 += o.c13; c22 += o.c22; c23 += o.c23; c33 += o.c33;
    return *this;
  }
  friend Cmat operator+(Cmat a, const Cmat& b) { return a += b; }
  friend Cmat operator*(double s, Cmat a) {
    a.c11 *= s; a.c12 *= s; a.c13 *= s; a.c22 *= s; a.c23 *= s; a.c33 *= s;
    return a;
  }
  bool operator==(const Cmat&) const = default;
};

/// Isotropic base material of the microstructures.
struct BaseMaterial {
  double E = 1.0;
  double nu = 0.3;

  /// Plane-stress elasticity matrix.
  Cmat plane_stress() const {
    const double f = E / (1.0 - nu * nu);
    return {f, f * nu, 0.0, f, 0.0, f * (1.0 - nu) / 2.0};
  }
  bool operator==(const BaseMaterial&) const = default;
};

}  // namespace gmto
