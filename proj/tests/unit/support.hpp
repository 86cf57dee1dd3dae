#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <vector>

#include "gmto/fem.hpp"
#include "gmto/homog.hpp"
#include "gmto/mstruct.hpp"
#include "gmto/opt.hpp"

namespace gmto::testing {

/// Material database of the first `count` catalog cells on a coarse raster.
inline const homog::MaterialDB& small_db(std::size_t count = 2) {
  static std::vector<homog::MaterialDB> cache(12);
  auto& db = cache.at(count);
  if (db.cells.empty()) {
    auto cells = mstruct::catalog();
    cells.resize(count);
    db = homog::build_material_db(cells, BaseMaterial{}, homog::default_sample_vs(), 32);
  }
  return db;
}

/// Left edge clamped, downward unit load at the bottom-right corner.
inline fem::BoundaryConditions cantilever_bc(const fem::Mesh& mesh) {
  fem::BoundaryConditions bc;
  for (int j = 0; j <= mesh.ny; ++j) {
    bc.fixed_dofs.push_back(2 * mesh.node(0, j));
    bc.fixed_dofs.push_back(2 * mesh.node(0, j) + 1);
  }
  bc.loads.emplace_back(2 * mesh.node(mesh.nx, 0) + 1, -1.0);
  return bc;
}

inline opt::ProblemSpec cantilever_spec(int nx, int ny, std::vector<int> subset, std::uint64_t seed = 7) {
  opt::ProblemSpec spec;
  spec.mesh = fem::Mesh::rectangular(nx, ny);
  spec.bc = cantilever_bc(spec.mesh);
  spec.vf_star = 0.5;
  spec.seed = seed;
  spec.subset = std::move(subset);
  return spec;
}

/// Random symmetric positive semi-definite elasticity matrix.
inline Cmat random_psd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = u(rng);
  return Cmat::from_matrix(a * a.transpose());
}

// Direct 2x2 Gauss quadrature of B^T C B, written independently of the library.
inline fem::ElemMatrix direct_quadrature(const Cmat& c, double h) {
  const double g = 1.0 / std::sqrt(3.0);
  const double xi_n[4] = {-1, 1, 1, -1};
  const double eta_n[4] = {-1, -1, 1, 1};
  fem::ElemMatrix k = fem::ElemMatrix::Zero();
  for (double xi : {-g, g})
    for (double eta : {-g, g}) {
      Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
      for (int a = 0; a < 4; ++a) {
        const double dx = 0.25 * xi_n[a] * (1 + eta * eta_n[a]) * 2.0 / h;
        const double dy = 0.25 * eta_n[a] * (1 + xi * xi_n[a]) * 2.0 / h;
        b(0, 2 * a) = dx;
        b(1, 2 * a + 1) = dy;
        b(2, 2 * a) = dy;
        b(2, 2 * a + 1) = dx;
      }
      k += b.transpose() * c.matrix() * b * (0.25 * h * h);
    }
  return k;
}

inline double relative_error(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace gmto::testing
