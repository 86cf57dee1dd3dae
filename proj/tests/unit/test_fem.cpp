#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "gmto/errors.hpp"
#include "gmto/fem.hpp"
#include "support.hpp"

using namespace gmto;
using namespace gmto::fem;
using gmto::testing::direct_quadrature;
using gmto::testing::random_psd;

namespace {

// Closed-form Q4 stiffness of the 88-line educational code (E = 1).
ElemMatrix textbook_ke(double nu) {
  const double k[8] = {0.5 - nu / 6,  0.125 + nu / 8, -0.25 - nu / 12, -0.125 + 3 * nu / 8,
                       -0.25 + nu / 12, -0.125 - nu / 8, nu / 6,          0.125 - 3 * nu / 8};
  const int idx[8][8] = {{0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1},
                         {3, 6, 5, 0, 7, 2, 1, 4}, {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6},
                         {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  ElemMatrix ke;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) ke(r, c) = k[idx[r][c]] / (1 - nu * nu);
  return ke;
}

std::vector<Cmat> uniform(const Mesh& mesh, const Cmat& c) { return std::vector<Cmat>(std::size_t(mesh.num_elements()), c); }

}  // namespace

TEST_CASE("mesh numbering") {
  const auto mesh = Mesh::rectangular(3, 2, 0.5);
  CHECK(mesh.num_nodes() == 12);
  CHECK(mesh.num_dofs() == 24);
  CHECK(mesh.node(3, 2) == 11);
  CHECK(mesh.element(2, 1) == 5);
  CHECK(mesh.element_dofs(0) == std::array<int, 8>{0, 1, 2, 3, 10, 11, 8, 9});
  CHECK(mesh.element_center(4) == std::array<double, 2>{0.75, 0.75});
  CHECK(mesh.active_count() == 6);
  CHECK_THROWS_AS(Mesh::rectangular(0, 2).validate(), InvariantError);
}

TEST_CASE("template assembly equals direct quadrature") {
  std::mt19937_64 rng(1);
  for (double h : {1.0, 0.37}) {
    const auto t = compute_templates(h);
    for (int trial = 0; trial < 100; ++trial) {
      const Cmat c = random_psd(rng);
      const ElemMatrix a = element_stiffness(c, t);
      const ElemMatrix b = direct_quadrature(c, h);
      CHECK((a - b).norm() <= 1e-12 * b.norm());
    }
  }
}

TEST_CASE("isotropic element matches the textbook closed form") {
  const auto ke = element_stiffness(BaseMaterial{}.plane_stress(), compute_templates(1.0));
  CHECK((ke - textbook_ke(0.3)).norm() <= 1e-12 * ke.norm());
}

TEST_CASE("templates are symmetric and element matrices annihilate rigid motions") {
  const auto t = compute_templates(1.0);
  for (int i = 0; i < 6; ++i) CHECK((t.matrix(i) - t.matrix(i).transpose()).norm() == 0.0);
  std::mt19937_64 rng(2);
  const ElemMatrix k = element_stiffness(random_psd(rng), t);
  const double x[4] = {0, 1, 1, 0};
  const double y[4] = {0, 0, 1, 1};
  ElemVector tx, ty, rot;
  for (int a = 0; a < 4; ++a) {
    tx(2 * a) = 1; tx(2 * a + 1) = 0;
    ty(2 * a) = 0; ty(2 * a + 1) = 1;
    rot(2 * a) = -y[a]; rot(2 * a + 1) = x[a];
  }
  CHECK((k * tx).norm() <= 1e-12);
  CHECK((k * ty).norm() <= 1e-12);
  CHECK((k * rot).norm() <= 1e-12);
}

TEST_CASE("one-element solve matches a dense oracle") {
  const auto mesh = Mesh::rectangular(1, 1);
  BoundaryConditions bc;
  bc.fixed_dofs = {0, 1, 4, 5};  // nodes 0 and 2 on the left edge
  bc.loads = {{3, -1.0}, {6, 0.5}};
  const Cmat c = BaseMaterial{}.plane_stress();
  const auto u = assemble_and_solve(mesh, bc, uniform(mesh, c));
  const ElemMatrix k = element_stiffness(c, compute_templates(1.0));
  // Element-local dofs 2..5 are the right-hand nodes, global dofs 2, 3, 6, 7.
  const int local[4] = {2, 3, 4, 5};
  const int global[4] = {2, 3, 6, 7};
  Eigen::Matrix4d kr;
  Eigen::Vector4d fr(0.0, -1.0, 0.5, 0.0);
  for (int r = 0; r < 4; ++r)
    for (int s = 0; s < 4; ++s) kr(r, s) = k(local[r], local[s]);
  const Eigen::Vector4d ur = kr.ldlt().solve(fr);
  for (int r = 0; r < 4; ++r) CHECK(u[global[r]] == doctest::Approx(ur[r]).epsilon(1e-12));
  for (int d : bc.fixed_dofs) CHECK(u[d] == 0.0);
  CHECK(compliance(load_vector(mesh, bc), u) == doctest::Approx(fr.dot(ur)).epsilon(1e-12));
}

TEST_CASE("global solve residual, symmetry and scaling laws") {
  const auto mesh = Mesh::rectangular(12, 6);
  const auto bc = gmto::testing::cantilever_bc(mesh);
  std::mt19937_64 rng(4);
  std::vector<Cmat> cs;
  for (int e = 0; e < mesh.num_elements(); ++e) cs.push_back(0.1 * BaseMaterial{}.plane_stress() + random_psd(rng));
  const auto t = compute_templates(mesh.h);
  const auto k = assemble_global(mesh, t, cs);
  CHECK((Eigen::MatrixXd(k) - Eigen::MatrixXd(k).transpose()).norm() <= 1e-12);
  const auto f = load_vector(mesh, bc);
  const auto u = assemble_and_solve(mesh, bc, cs);
  Eigen::VectorXd r = k * u - f;
  for (int d : bc.fixed_dofs) r[d] = 0.0;  // reactions
  CHECK(r.norm() / f.norm() <= 1e-9);
  const double J = compliance(f, u);
  CHECK(J > 0.0);

  std::vector<Cmat> doubled;
  for (const auto& c : cs) doubled.push_back(2.0 * c);
  CHECK(compliance(f, assemble_and_solve(mesh, bc, doubled)) == doctest::Approx(J / 2).epsilon(1e-10));
  auto bc2 = bc;
  for (auto& l : bc2.loads) l.second *= 3.0;
  CHECK(compliance(load_vector(mesh, bc2), assemble_and_solve(mesh, bc2, cs)) == doctest::Approx(9 * J).epsilon(1e-10));
}

TEST_CASE("reusable solver matches one-shot solves") {
  const auto mesh = Mesh::rectangular(8, 4);
  const auto bc = gmto::testing::cantilever_bc(mesh);
  StiffnessSolver solver(mesh, bc, compute_templates(1.0));
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Cmat> cs;
    for (int e = 0; e < mesh.num_elements(); ++e) cs.push_back(random_psd(rng) + 0.05 * BaseMaterial{}.plane_stress());
    CHECK((solver.solve(cs) - assemble_and_solve(mesh, bc, cs)).norm() <= 1e-12);
  }
}

TEST_CASE("adjoint seeds") {
  const auto mesh = Mesh::rectangular(3, 2);
  const auto bc = gmto::testing::cantilever_bc(mesh);
  const auto t = compute_templates(1.0);
  SUBCASE("zero displacement gives zero seeds") {
    for (const auto& s : adjoint_element_seeds(mesh, Eigen::VectorXd::Zero(mesh.num_dofs()), t))
      for (double x : s) CHECK(x == 0.0);
  }
  SUBCASE("seeds are the derivative of compliance") {
    std::mt19937_64 rng(8);
    std::vector<Cmat> cs;
    for (int e = 0; e < mesh.num_elements(); ++e) cs.push_back(0.2 * BaseMaterial{}.plane_stress() + random_psd(rng));
    const auto f = load_vector(mesh, bc);
    const auto seeds = adjoint_element_seeds(mesh, assemble_and_solve(mesh, bc, cs), t);
    for (int e = 0; e < mesh.num_elements(); ++e) {
      for (int i = 0; i < 3; ++i) CHECK(seeds[std::size_t(e)][std::size_t(i)] <= 0.0);
      for (int i = 0; i < 6; ++i) {
        const double h = 1e-6;
        auto plus = cs;
        auto minus = cs;
        auto wp = plus[std::size_t(e)].template_weights();
        auto wm = wp;
        wp[std::size_t(i)] += h;
        wm[std::size_t(i)] -= h;
        plus[std::size_t(e)] = Cmat::from_template_weights(wp);
        minus[std::size_t(e)] = Cmat::from_template_weights(wm);
        const double fd = (compliance(f, assemble_and_solve(mesh, bc, plus)) -
                           compliance(f, assemble_and_solve(mesh, bc, minus))) / (2 * h);
        CHECK(gmto::testing::relative_error(seeds[std::size_t(e)][std::size_t(i)], fd, 1e-8) <= 1e-5);
      }
    }
  }
}

TEST_CASE("masked elements stay in the system at floor stiffness") {
  auto mesh = Mesh::rectangular(4, 4);
  mesh.active[std::size_t(mesh.element(3, 3))] = 0;
  CHECK(mesh.active_count() == 15);
  const auto bc = gmto::testing::cantilever_bc(mesh);
  auto cs = uniform(mesh, BaseMaterial{}.plane_stress());
  cs[std::size_t(mesh.element(3, 3))] = 1e-6 * BaseMaterial{}.plane_stress();
  CHECK(assemble_and_solve(mesh, bc, cs).allFinite());
}

TEST_CASE("invalid supports and singular systems are reported") {
  const auto mesh = Mesh::rectangular(2, 2);
  BoundaryConditions bc;
  bc.fixed_dofs = {0, 2};
  bc.loads = {{5, 1.0}};
  CHECK_THROWS_AS(bc.validate(mesh), InvariantError);
  bc.fixed_dofs = {0, 1, 99};
  CHECK_THROWS_AS(bc.validate(mesh), InvariantError);
  const auto good = gmto::testing::cantilever_bc(mesh);
  CHECK_THROWS_AS(assemble_and_solve(mesh, good, uniform(mesh, Cmat{})), SingularSystemError);
}
