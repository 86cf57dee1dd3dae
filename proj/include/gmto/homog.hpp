#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "gmto/cmat.hpp"
#include "gmto/mstruct.hpp"

namespace gmto::homog {

/// Stiffness of void pixels relative to the base material.
inline constexpr double kVoidFloor = 1e-6;
inline constexpr int kDefaultResolution = 64;
inline constexpr int kPolynomialDegree = 5;

struct Homogenized {
  Cmat c;
  bool all_void = false;  // no solid pixel: c is the floor material
};

/// Effective plane-stress matrix of a periodic raster: three unit macro-strain
/// cell problems on bilinear pixel elements with periodic fluctuations, then
/// energy averaging over the cell.
Homogenized homogenize(const mstruct::CellRaster& raster, const BaseMaterial& base);

/// Coefficients a_0..a_5 of one component, c(v) = sum_k a_k v^k.
using Polynomial = std::array<double, kPolynomialDegree + 1>;

double evaluate(const Polynomial& p, double v);
double evaluate_derivative(const Polynomial& p, double v);

struct Sample {
  double v = 0;
  Cmat c;
  bool operator==(const Sample&) const = default;
};

/// Per-component quintics in Cmat field order (c11, c12, c13, c22, c23, c33).
using ComponentFits = std::array<Polynomial, 6>;

/// Least-squares quintic per component, constrained to pass through (0, 0)
/// and (1, solid component). Needs at least 7 samples.
ComponentFits fit_polynomials(const std::vector<Sample>& samples, const Cmat& solid);

/// Evaluates all six fitted components (no positive-definiteness safeguard).
Cmat evaluate(const ComponentFits& fits, double v);
Cmat evaluate_derivative(const ComponentFits& fits, double v);

struct CellEntry {
  int id = 0;
  std::string name;
  ComponentFits fits{};
  std::vector<Sample> samples;
  bool operator==(const CellEntry&) const = default;
};

struct MaterialDB {
  BaseMaterial base;
  int degree = kPolynomialDegree;
  std::vector<double> sample_vs;
  std::vector<CellEntry> cells;

  /// Throws LookupError for unknown ids.
  const CellEntry& cell(int id) const;
  Cmat solid() const { return base.plane_stress(); }
  bool operator==(const MaterialDB&) const = default;
};

struct FitReport {
  int id = 0;
  std::string name;
  double max_residual = 0;   // largest |fit - sample| over components and samples
  double min_eigenvalue = 0;  // smallest eigenvalue of the raw fit on a 100-point grid in [0.01, 1]
  bool spd = true;            // min_eigenvalue >= 0
};

FitReport fit_report(const CellEntry& entry);

/// The default sample grid {0, 0.1, ..., 1}.
std::vector<double> default_sample_vs();

/// Homogenizes every cell at every sample volume fraction (in parallel) and
/// fits the polynomials. Entries are ordered by catalog id.
MaterialDB build_material_db(const std::vector<mstruct::UnitCell>& cells, const BaseMaterial& base,
                             const std::vector<double>& sample_vs,
                             int resolution = kDefaultResolution);

void save_material_db(const MaterialDB& db, const std::filesystem::path& path);
MaterialDB load_material_db(const std::filesystem::path& path);

}  // namespace gmto::homog
