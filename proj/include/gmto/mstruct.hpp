#pragma once

// Catalog of parametric unit cells.
//
// A cell is the union of bar primitives on the unit square, all sharing one
// half-width w = tau * w_full, where w_full is the smallest half-width that
// covers the whole square. Bars are periodic straight lines (diagonals include
// their images shifted by one period) so rasters tile without seams.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace gmto::mstruct {

enum class Primitive : std::uint8_t {
  HorizontalBar = 0,  // y = 1/2
  VerticalBar,        // x = 1/2
  Diagonal,           // y = x
  AntiDiagonal,       // y = 1 - x
  EdgeBottom,         // y = 0
  EdgeTop,            // y = 1
  EdgeLeft,           // x = 0
  EdgeRight,          // x = 1
};

inline constexpr int kPrimitiveCount = 8;

/// Bitmask of Primitive values.
using PrimitiveSet = std::uint8_t;

constexpr PrimitiveSet bit(Primitive p) { return PrimitiveSet(1u << static_cast<unsigned>(p)); }

struct UnitCell {
  int id = 0;  // 1-based position in its catalog
  std::string name;
  PrimitiveSet primitives = 0;

  bool has(Primitive p) const { return (primitives & bit(p)) != 0; }
  bool operator==(const UnitCell&) const = default;
};

struct CellRaster {
  int resolution = 0;
  std::vector<std::uint8_t> pixels;  // row-major, row 0 at y = 0; 1 = solid

  bool solid(int ix, int iy) const { return pixels[std::size_t(iy) * resolution + ix] != 0; }
  double fill_fraction() const;
};

/// The default 11-cell catalog. Order is fixed:
///  1 X, 2 plus, 3 box, 4 X+box, 5 plus+box, 6 star (X+plus), 7 H, 8 I,
///  9 Z, 10 N, 11 lattice (all eight primitives).
std::vector<UnitCell> catalog();

/// Half-width at which the cell becomes fully solid.
double full_halfwidth(const UnitCell& cell);

/// Area fraction of the cell at size parameter tau, continuous and
/// non-decreasing in tau; vf(0) = 0, vf(1) = 1.
double volume_fraction(const UnitCell& cell, double tau);

/// Inverse of volume_fraction by bisection: |vf(tau) - v| <= 1e-4.
double tau_for_vf(const UnitCell& cell, double v);

/// n x n occupancy grid of the cell at size parameter tau. Throws
/// ResolutionError for n < 16.
CellRaster rasterize(const UnitCell& cell, double tau, int n);

/// Catalog text file: one cell per line, `id name flags` where flags is an
/// 8-character 0/1 string in Primitive order. '#' starts a comment.
void save_catalog(const std::vector<UnitCell>& cells, const std::filesystem::path& path);
std::vector<UnitCell> load_catalog(const std::filesystem::path& path);

std::string primitive_flags(PrimitiveSet set);
PrimitiveSet parse_primitive_flags(const std::string& flags);

}  // namespace gmto::mstruct
