#pragma once

// Structured bilinear-quad finite elements for 2D plane elasticity.
//
// Node (i, j) sits at (i h, j h) with index j (nx + 1) + i; element (i, j)
// covers [i h, (i+1) h] x [j h, (j+1) h] with index j nx + i. Element dofs are
// ordered counter-clockwise from the lower-left node, x before y.

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "gmto/cmat.hpp"

namespace gmto::fem {

using ElemMatrix = Eigen::Matrix<double, 8, 8, Eigen::RowMajor>;
using ElemVector = Eigen::Matrix<double, 8, 1>;

struct Mesh {
  int nx = 0;
  int ny = 0;
  double h = 1.0;
  std::vector<std::uint8_t> active;  // per element, 1 = design domain

  static Mesh rectangular(int nx, int ny, double h = 1.0);

  int num_elements() const { return nx * ny; }
  int num_nodes() const { return (nx + 1) * (ny + 1); }
  int num_dofs() const { return 2 * num_nodes(); }
  int node(int i, int j) const { return j * (nx + 1) + i; }
  int element(int i, int j) const { return j * nx + i; }
  double element_area() const { return h * h; }
  double width() const { return nx * h; }
  double height() const { return ny * h; }
  bool is_active(int e) const { return active[std::size_t(e)] != 0; }
  std::size_t active_count() const;

  std::array<int, 8> element_dofs(int e) const;
  std::array<double, 2> element_center(int e) const;
  std::vector<std::array<double, 2>> element_centers() const;

  /// Throws InvariantError on bad dimensions or an empty active mask.
  void validate() const;
  bool operator==(const Mesh&) const = default;
};

/// The six element matrices K^i = integral of B^T E_i B, with E_i the indicator
/// matrix of the i-th elasticity component (template order C11, C22, C33,
/// C12, C13, C23).
class TemplateSet {
public:
  const double* data() const { return data_.data(); }
  Eigen::Map<const ElemMatrix> matrix(int i) const {
    return Eigen::Map<const ElemMatrix>(data_.data() + 64 * i);
  }

private:
  friend TemplateSet compute_templates(double h);
  std::array<double, 6 * 64> data_{};
};

/// 2x2 Gauss quadrature over a square bilinear element of edge h.
TemplateSet compute_templates(double h);

/// K_e = sum_i C_i K^i.
ElemMatrix element_stiffness(const Cmat& c, const TemplateSet& templates);

struct BoundaryConditions {
  std::vector<int> fixed_dofs;               // sorted, unique
  std::vector<std::pair<int, double>> loads;  // (dof, magnitude), summed per dof

  /// Throws InvariantError for out-of-range dofs or fewer than three fixed
  /// dofs covering both axes.
  void validate(const Mesh& mesh) const;
  bool operator==(const BoundaryConditions&) const = default;
};

Eigen::VectorXd load_vector(const Mesh& mesh, const BoundaryConditions& bc);

/// Full (unreduced) global stiffness matrix. Used for residual checks.
Eigen::SparseMatrix<double> assemble_global(const Mesh& mesh, const TemplateSet& templates,
                                            std::span<const Cmat> element_c);

/// Reusable reduced-system solver: the sparsity pattern and fill-reducing
/// ordering are computed once; each solve re-assembles values and refactors.
class StiffnessSolver {
public:
  StiffnessSolver(const Mesh& mesh, const BoundaryConditions& bc, const TemplateSet& templates);

  /// Solves K u = f with fixed dofs eliminated. `element_c` holds one matrix
  /// per element (inactive ones included). Throws SingularSystemError.
  Eigen::VectorXd solve(std::span<const Cmat> element_c);

  const Eigen::VectorXd& force() const { return force_; }
  const Mesh& mesh() const { return mesh_; }
  const TemplateSet& templates() const { return templates_; }

private:
  Mesh mesh_;
  BoundaryConditions bc_;
  TemplateSet templates_;
  std::vector<int> reduced_;  // dof -> reduced index, -1 when fixed
  int num_free_ = 0;
  Eigen::SparseMatrix<double> matrix_;  // lower triangle of the reduced K
  std::vector<int> slots_;              // per element, 64 entries into matrix_ values
  Eigen::VectorXd force_;
  Eigen::VectorXd reduced_force_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt_;
};

/// One-shot convenience wrapper around StiffnessSolver.
Eigen::VectorXd assemble_and_solve(const Mesh& mesh, const BoundaryConditions& bc,
                                   std::span<const Cmat> element_c);

double compliance(const Eigen::VectorXd& f, const Eigen::VectorXd& u);

/// dJ/dC_i per element for compliance with design-independent loads:
/// -u_e^T K^i u_e, in template order.
std::vector<std::array<double, 6>> adjoint_element_seeds(const Mesh& mesh, const Eigen::VectorXd& u,
                                                         const TemplateSet& templates);

}  // namespace gmto::fem
