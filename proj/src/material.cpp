#include "gmto/material.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "gmto/errors.hpp"

namespace gmto::material {

namespace {

// True when c - t I is positive definite (leading principal minors).
bool above_threshold(const Cmat& c, double t) {
  const double a = c.c11 - t;
  const double d = c.c22 - t;
  const double f = c.c33 - t;
  if (!(a > 0.0)) return false;
  const double m2 = a * d - c.c12 * c.c12;
  if (!(m2 > 0.0)) return false;
  const double det = a * (d * f - c.c23 * c.c23) - c.c12 * (c.c12 * f - c.c23 * c.c13) +
                     c.c13 * (c.c12 * c.c23 - d * c.c13);
  return det > 0.0;
}

void check_simplex(std::span<const double> rho, std::size_t expected) {
  if (rho.size() != expected) throw ContractError("rho length does not match the microstructure count");
  double sum = 0.0;
  for (double r : rho) {
    if (!(r >= 0.0)) throw InvariantError("rho has a negative or NaN entry");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InvariantError("rho is not on the simplex (sum = " + std::to_string(sum) + ")");
}

}  // namespace

ClippedMatrix clip_eigenvalues(const Cmat& c, const Cmat& direction, double threshold) {
  if (above_threshold(c, threshold)) return {c, direction};
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(c.matrix());
  const Eigen::Vector3d lambda = eig.eigenvalues();
  const Eigen::Matrix3d q = eig.eigenvectors();
  Eigen::Vector3d clipped;
  for (int i = 0; i < 3; ++i) clipped[i] = std::max(lambda[i], threshold);
  const Eigen::Matrix3d value = q * clipped.asDiagonal() * q.transpose();

  Eigen::Matrix3d gamma;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double gap = lambda[i] - lambda[j];
      if (std::abs(gap) > 1e-14 * std::max(1.0, std::abs(lambda[i])))
        gamma(i, j) = (clipped[i] - clipped[j]) / gap;
      else
        gamma(i, j) = lambda[i] > threshold ? 1.0 : 0.0;
    }
  const Eigen::Matrix3d rotated = q.transpose() * direction.matrix() * q;
  const Eigen::Matrix3d deriv = q * gamma.cwiseProduct(rotated) * q.transpose();
  return {Cmat::from_matrix(value), Cmat::from_matrix(deriv)};
}

double clip_threshold(const homog::MaterialDB& db) { return kFloorFraction * db.solid().c11; }

Cmat stiffness_floor(const homog::MaterialDB& db) { return kFloorFraction * db.solid(); }

Cmat eval_Cm(const homog::MaterialDB& db, int id, double v) {
  return eval_Cm_with_derivative(db, id, v).value;
}

CmWithDerivative eval_Cm_with_derivative(const homog::MaterialDB& db, int id, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvariantError("volume fraction must lie in [0, 1]");
  const auto& fits = db.cell(id).fits;
  const auto clipped = clip_eigenvalues(homog::evaluate(fits, v), homog::evaluate_derivative(fits, v),
                                        clip_threshold(db));
  return {clipped.value, clipped.derivative};
}

MaterialModel::MaterialModel(const homog::MaterialDB& db, std::vector<int> subset)
    : subset_(std::move(subset)), clip_(clip_threshold(db)), floor_(stiffness_floor(db)) {
  if (subset_.empty()) throw InvariantError("microstructure subset is empty");
  for (int id : subset_) entries_.push_back(db.cell(id).fits);
}

Cmat MaterialModel::eval_Cm(std::size_t m, double v) const {
  return eval_Cm_with_derivative(m, v).value;
}

CmWithDerivative MaterialModel::eval_Cm_with_derivative(std::size_t m, double v) const {
  const auto& fits = entries_.at(m);
  const auto clipped =
      clip_eigenvalues(homog::evaluate(fits, v), homog::evaluate_derivative(fits, v), clip_);
  return {clipped.value, clipped.derivative};
}

Cmat effective_C(const MaterialModel& model, std::span<const double> rho, double v, double p) {
  check_simplex(rho, model.size());
  if (!(p >= 1.0)) throw InvariantError("penalty exponent p must be >= 1");
  Cmat c;
  for (std::size_t m = 0; m < model.size(); ++m) {
    if (rho[m] == 0.0) continue;
    c += std::pow(rho[m], p) * model.eval_Cm(m, v);
  }
  return c + model.floor();
}

EffectiveC effective_C_with_derivatives(const MaterialModel& model, std::span<const double> rho,
                                        double v, double p) {
  check_simplex(rho, model.size());
  if (!(p >= 1.0)) throw InvariantError("penalty exponent p must be >= 1");
  EffectiveC out;
  out.d_rho.resize(model.size());
  for (std::size_t m = 0; m < model.size(); ++m) {
    const auto cm = model.eval_Cm_with_derivative(m, v);
    const double r = rho[m];
    const double w = std::pow(r, p);
    const double dw = r == 0.0 ? (p == 1.0 ? 1.0 : 0.0) : p * std::pow(r, p - 1.0);
    out.c += w * cm.value;
    out.d_v += w * cm.dv;
    out.d_rho[m] = dw * cm.value;
  }
  out.c += model.floor();
  return out;
}

}  // namespace gmto::material
