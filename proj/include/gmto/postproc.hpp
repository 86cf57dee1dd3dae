#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gmto/field.hpp"
#include "gmto/mstruct.hpp"

namespace gmto::postproc {

/// Cells with v below this are drawn empty.
inline constexpr double kDefaultVoidCut = 0.05;

struct Resampled {
  int nx = 0;
  int ny = 0;
  std::vector<field::Coord> centers;
  field::DesignFields fields;
};

/// Evaluates the trained field at the centres of an nx x ny grid covering the
/// checkpoint's design domain.
Resampled resample(const field::Checkpoint& ck, int nx, int ny);

/// Index of the largest rho; ties go to the lowest index.
std::size_t assign_microstructure(std::span<const double> rho);

/// Catalog id per cell for a resampled field.
std::vector<int> assign_all(const field::DesignFields& fields, std::span<const int> subset);

struct RenderedDesign {
  int nx = 0;
  int ny = 0;
  int cell_resolution = 0;
  std::vector<int> ids;               // catalog id per cell, 0 when void
  std::vector<std::uint8_t> pixels;   // row-major, row 0 at the top, 1 = solid

  int width() const { return nx * cell_resolution; }
  int height() const { return ny * cell_resolution; }
  double solid_fraction() const;
};

/// Tiles each cell with its microstructure raster at the size parameter that
/// reproduces its volume fraction. Cell (i, j) follows the mesh convention
/// (j = 0 is the bottom row).
RenderedDesign render(const std::vector<mstruct::UnitCell>& catalog, std::span<const int> ids,
                      std::span<const double> v, int nx, int ny, int cell_resolution,
                      double v_cut = kDefaultVoidCut);

/// Binary PGM (P5): solid black, void white.
void write_pgm(const RenderedDesign& design, const std::filesystem::path& path);

/// Columns: x, y, v, rho_1..rho_M, id.
void write_fields_csv(const std::filesystem::path& path, std::span<const field::Coord> centers,
                      const field::DesignFields& fields, std::span<const int> subset);

}  // namespace gmto::postproc
