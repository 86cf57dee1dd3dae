#include "gmto/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gmto/errors.hpp"
#include "gmto/simd.hpp"

namespace gmto::fem {

namespace {

constexpr std::array<double, 4> kXiNode{-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kEtaNode{-1.0, -1.0, 1.0, 1.0};

using BMatrix = Eigen::Matrix<double, 3, 8>;

BMatrix strain_displacement(double xi, double eta, double h) {
  BMatrix b = BMatrix::Zero();
  const double scale = 2.0 / h;
  for (int a = 0; a < 4; ++a) {
    const double dx = scale * 0.25 * kXiNode[a] * (1.0 + eta * kEtaNode[a]);
    const double dy = scale * 0.25 * kEtaNode[a] * (1.0 + xi * kXiNode[a]);
    b(0, 2 * a) = dx;
    b(1, 2 * a + 1) = dy;
    b(2, 2 * a) = dy;
    b(2, 2 * a + 1) = dx;
  }
  return b;
}

}  // namespace

Mesh Mesh::rectangular(int nx, int ny, double h) {
  Mesh m;
  m.nx = nx;
  m.ny = ny;
  m.h = h;
  m.active.assign(std::size_t(std::max(nx, 0)) * std::size_t(std::max(ny, 0)), 1);
  return m;
}

std::size_t Mesh::active_count() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), std::uint8_t{1}));
}

std::array<int, 8> Mesh::element_dofs(int e) const {
  const int i = e % nx;
  const int j = e / nx;
  const std::array<int, 4> nodes{node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
  std::array<int, 8> dofs{};
  for (int a = 0; a < 4; ++a) {
    dofs[2 * a] = 2 * nodes[a];
    dofs[2 * a + 1] = 2 * nodes[a] + 1;
  }
  return dofs;
}

std::array<double, 2> Mesh::element_center(int e) const {
  const int i = e % nx;
  const int j = e / nx;
  return {(i + 0.5) * h, (j + 0.5) * h};
}

std::vector<std::array<double, 2>> Mesh::element_centers() const {
  std::vector<std::array<double, 2>> c(static_cast<std::size_t>(num_elements()));
  for (int e = 0; e < num_elements(); ++e) c[std::size_t(e)] = element_center(e);
  return c;
}

void Mesh::validate() const {
  if (nx < 1 || ny < 1) throw InvariantError("mesh needs at least one element in each direction");
  if (!(h > 0.0)) throw InvariantError("element size must be positive");
  if (active.size() != std::size_t(nx) * std::size_t(ny))
    throw InvariantError("active mask size does not match the mesh");
  if (active_count() == 0) throw InvariantError("active mask is empty");
}

TemplateSet compute_templates(double h) {
  if (!(h > 0.0)) throw InvariantError("element size must be positive");
  // Indicator matrices in template order C11, C22, C33, C12, C13, C23.
  std::array<Eigen::Matrix3d, 6> indicator;
  for (auto& m : indicator) m.setZero();
  indicator[0](0, 0) = 1;
  indicator[1](1, 1) = 1;
  indicator[2](2, 2) = 1;
  indicator[3](0, 1) = indicator[3](1, 0) = 1;
  indicator[4](0, 2) = indicator[4](2, 0) = 1;
  indicator[5](1, 2) = indicator[5](2, 1) = 1;

  const double g = 1.0 / std::sqrt(3.0);
  const double det_j = 0.25 * h * h;
  TemplateSet set;
  for (int i = 0; i < 6; ++i) {
    ElemMatrix k = ElemMatrix::Zero();
    for (double xi : {-g, g})
      for (double eta : {-g, g}) {
        const BMatrix b = strain_displacement(xi, eta, h);
        k += b.transpose() * indicator[i] * b * det_j;
      }
    // Exact symmetry; quadrature roundoff can differ between (r, c) and (c, r).
    k = 0.5 * (k + k.transpose()).eval();
    std::copy(k.data(), k.data() + 64, set.data_.begin() + 64 * i);
  }
  return set;
}

ElemMatrix element_stiffness(const Cmat& c, const TemplateSet& templates) {
  ElemMatrix k;
  const auto w = c.template_weights();
  simd::active_kernels().weighted_sum6(w.data(), templates.data(), k.data());
  return k;
}

void BoundaryConditions::validate(const Mesh& mesh) const {
  const int n = mesh.num_dofs();
  bool any_x = false;
  bool any_y = false;
  for (int d : fixed_dofs) {
    if (d < 0 || d >= n) throw InvariantError("fixed dof " + std::to_string(d) + " out of range");
    (d % 2 == 0 ? any_x : any_y) = true;
  }
  if (!std::is_sorted(fixed_dofs.begin(), fixed_dofs.end()) ||
      std::adjacent_find(fixed_dofs.begin(), fixed_dofs.end()) != fixed_dofs.end())
    throw InvariantError("fixed dofs must be sorted and unique");
  if (fixed_dofs.size() < 3 || !any_x || !any_y)
    throw InvariantError("boundary conditions leave rigid-body motion unconstrained "
                         "(need at least three fixed dofs covering both axes)");
  for (const auto& [d, mag] : loads) {
    if (d < 0 || d >= n) throw InvariantError("load dof " + std::to_string(d) + " out of range");
    if (!std::isfinite(mag)) throw InvariantError("load magnitude must be finite");
  }
}

Eigen::VectorXd load_vector(const Mesh& mesh, const BoundaryConditions& bc) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.num_dofs());
  for (const auto& [d, mag] : bc.loads) f[d] += mag;
  return f;
}

Eigen::SparseMatrix<double> assemble_global(const Mesh& mesh, const TemplateSet& templates,
                                            std::span<const Cmat> element_c) {
  if (element_c.size() != std::size_t(mesh.num_elements()))
    throw ContractError("one elasticity matrix per element required");
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(std::size_t(mesh.num_elements()) * 64);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElemMatrix k = element_stiffness(element_c[std::size_t(e)], templates);
    const auto dofs = mesh.element_dofs(e);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) triplets.emplace_back(dofs[a], dofs[b], k(a, b));
  }
  Eigen::SparseMatrix<double> k(mesh.num_dofs(), mesh.num_dofs());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

StiffnessSolver::StiffnessSolver(const Mesh& mesh, const BoundaryConditions& bc,
                                 const TemplateSet& templates)
    : mesh_(mesh), bc_(bc), templates_(templates) {
  mesh_.validate();
  bc_.validate(mesh_);
  const int n = mesh_.num_dofs();
  reduced_.assign(std::size_t(n), 0);
  for (int d : bc_.fixed_dofs) reduced_[std::size_t(d)] = -1;
  for (int d = 0; d < n; ++d)
    if (reduced_[std::size_t(d)] >= 0) reduced_[std::size_t(d)] = num_free_++;

  std::vector<Eigen::Triplet<double>> pattern;
  pattern.reserve(std::size_t(mesh_.num_elements()) * 36);
  for (int e = 0; e < mesh_.num_elements(); ++e) {
    const auto dofs = mesh_.element_dofs(e);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        const int r = reduced_[std::size_t(dofs[a])];
        const int c = reduced_[std::size_t(dofs[b])];
        if (r >= 0 && c >= 0 && r >= c) pattern.emplace_back(r, c, 1.0);
      }
  }
  matrix_.resize(num_free_, num_free_);
  matrix_.setFromTriplets(pattern.begin(), pattern.end());
  matrix_.makeCompressed();

  slots_.assign(std::size_t(mesh_.num_elements()) * 64, -1);
  const int* outer = matrix_.outerIndexPtr();
  const int* inner = matrix_.innerIndexPtr();
  for (int e = 0; e < mesh_.num_elements(); ++e) {
    const auto dofs = mesh_.element_dofs(e);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        const int r = reduced_[std::size_t(dofs[a])];
        const int c = reduced_[std::size_t(dofs[b])];
        if (r < 0 || c < 0 || r < c) continue;
        const int* first = inner + outer[c];
        const int* last = inner + outer[c + 1];
        const int* hit = std::lower_bound(first, last, r);
        slots_[std::size_t(e) * 64 + std::size_t(a * 8 + b)] = static_cast<int>(hit - inner);
      }
  }
  llt_.analyzePattern(matrix_);

  force_ = load_vector(mesh_, bc_);
  reduced_force_.resize(num_free_);
  for (int d = 0; d < n; ++d)
    if (const int r = reduced_[std::size_t(d)]; r >= 0) reduced_force_[r] = force_[d];
}

Eigen::VectorXd StiffnessSolver::solve(std::span<const Cmat> element_c) {
  if (element_c.size() != std::size_t(mesh_.num_elements()))
    throw ContractError("one elasticity matrix per element required");
  double* values = matrix_.valuePtr();
  std::fill(values, values + matrix_.nonZeros(), 0.0);
  const auto& kernels = simd::active_kernels();
  alignas(32) double ke[64];
  for (int e = 0; e < mesh_.num_elements(); ++e) {
    const auto w = element_c[std::size_t(e)].template_weights();
    kernels.weighted_sum6(w.data(), templates_.data(), ke);
    const int* slot = slots_.data() + std::size_t(e) * 64;
    for (int k = 0; k < 64; ++k)
      if (slot[k] >= 0) values[slot[k]] += ke[k];
  }
  llt_.factorize(matrix_);
  if (llt_.info() != Eigen::Success) {
    int fixed_x = 0;
    for (int d : bc_.fixed_dofs) fixed_x += (d % 2 == 0);
    std::ostringstream msg;
    msg << "stiffness factorization failed (matrix not positive definite); "
        << fixed_x << " x-dofs and " << bc_.fixed_dofs.size() - std::size_t(fixed_x)
        << " y-dofs fixed; check for unconstrained translation/rotation modes or "
           "non-positive element stiffness";
    throw SingularSystemError(msg.str());
  }
  const Eigen::VectorXd ur = llt_.solve(reduced_force_);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(mesh_.num_dofs());
  for (int d = 0; d < mesh_.num_dofs(); ++d)
    if (const int r = reduced_[std::size_t(d)]; r >= 0) u[d] = ur[r];
  return u;
}

Eigen::VectorXd assemble_and_solve(const Mesh& mesh, const BoundaryConditions& bc,
                                   std::span<const Cmat> element_c) {
  StiffnessSolver solver(mesh, bc, compute_templates(mesh.h));
  return solver.solve(element_c);
}

double compliance(const Eigen::VectorXd& f, const Eigen::VectorXd& u) {
  if (f.size() != u.size()) throw ContractError("force and displacement sizes differ");
  return f.dot(u);
}

std::vector<std::array<double, 6>> adjoint_element_seeds(const Mesh& mesh, const Eigen::VectorXd& u,
                                                         const TemplateSet& templates) {
  if (u.size() != mesh.num_dofs()) throw ContractError("displacement size does not match the mesh");
  const auto& kernels = simd::active_kernels();
  std::vector<std::array<double, 6>> seeds(std::size_t(mesh.num_elements()));
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.element_dofs(e);
    double ue[8];
    for (int a = 0; a < 8; ++a) ue[a] = u[dofs[a]];
    auto& s = seeds[std::size_t(e)];
    kernels.quadratic_forms6(ue, templates.data(), s.data());
    for (double& v : s) v = -v;
    // K^1..K^3 are PSD; drop roundoff of either sign near rigid-body modes.
    for (int i = 0; i < 3; ++i) s[std::size_t(i)] = std::min(s[std::size_t(i)], 0.0);
  }
  return seeds;
}

}  // namespace gmto::fem
