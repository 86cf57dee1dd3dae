#pragma once

#include <span>
#include <vector>

#include "gmto/cmat.hpp"
#include "gmto/homog.hpp"

namespace gmto::material {

/// Fraction of the solid C11 used both as the eigenvalue clip of C_m(v) and as
/// the stiffness floor added after mixing.
inline constexpr double kFloorFraction = 1e-6;

/// Eigenvalue floor applied to every evaluated C_m(v).
double clip_threshold(const homog::MaterialDB& db);

/// Floor added to every effective matrix: kFloorFraction * C_solid.
Cmat stiffness_floor(const homog::MaterialDB& db);

struct CmWithDerivative {
  Cmat value;
  Cmat dv;  // d value / dv
};

/// C_m(v) from the fitted polynomials with eigenvalues clipped from below at
/// clip_threshold(db). Throws LookupError for unknown ids.
Cmat eval_Cm(const homog::MaterialDB& db, int id, double v);
CmWithDerivative eval_Cm_with_derivative(const homog::MaterialDB& db, int id, double v);

/// Precomputed view of the DB restricted to an ordered microstructure subset.
class MaterialModel {
public:
  MaterialModel(const homog::MaterialDB& db, std::vector<int> subset);

  std::size_t size() const { return entries_.size(); }
  const std::vector<int>& subset() const { return subset_; }
  const Cmat& floor() const { return floor_; }

  Cmat eval_Cm(std::size_t m, double v) const;
  CmWithDerivative eval_Cm_with_derivative(std::size_t m, double v) const;

private:
  std::vector<homog::ComponentFits> entries_;
  std::vector<int> subset_;
  double clip_ = 0;
  Cmat floor_;
};

struct EffectiveC {
  Cmat c;
  std::vector<Cmat> d_rho;  // d c / d rho_m
  Cmat d_v;                 // d c / dv
};

/// sum_m rho_m^p C_m(v) + floor. rho must lie on the simplex (|sum - 1| <= 1e-6,
/// entries >= 0) and p >= 1; violations throw InvariantError.
Cmat effective_C(const MaterialModel& model, std::span<const double> rho, double v, double p);
EffectiveC effective_C_with_derivatives(const MaterialModel& model, std::span<const double> rho,
                                        double v, double p);

/// Eigenvalue clip of a symmetric 3x3 matrix and its directional derivative
/// (Daleckii-Krein) along `direction`.
struct ClippedMatrix {
  Cmat value;
  Cmat derivative;
};
ClippedMatrix clip_eigenvalues(const Cmat& c, const Cmat& direction, double threshold);

}  // namespace gmto::material
