#include "gmto/mstruct.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include "gmto/errors.hpp"

namespace gmto::mstruct {

namespace {

using P = Primitive;

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Squared (weighted) distance from (x, y) to the nearest present primitive, all lengths
// in units of `period` (the cell edge). Integer-valued inputs give results
// that are exact under the symmetries of the square.
double squared_distance(PrimitiveSet set, double x, double y, double period) {
  double best = period * period * 4.0;
  auto take = [&](double d2) { best = std::min(best, d2); };
  const double half = 0.5 * period;
  if (set & bit(P::HorizontalBar)) take((y - half) * (y - half));
  if (set & bit(P::VerticalBar)) take((x - half) * (x - half));
  // Frame edges are shared with the neighbouring cell, so each cell carries
  // half the member: distances to them count double.
  if (set & bit(P::EdgeBottom)) take(4.0 * y * y);
  if (set & bit(P::EdgeTop)) take(4.0 * (period - y) * (period - y));
  if (set & bit(P::EdgeLeft)) take(4.0 * x * x);
  if (set & bit(P::EdgeRight)) take(4.0 * (period - x) * (period - x));
  if (set & bit(P::Diagonal)) {
    for (int k = -1; k <= 1; ++k) {
      const double m = y - x - k * period;
      take(0.5 * m * m);
    }
  }
  if (set & bit(P::AntiDiagonal)) {
    for (int k = -1; k <= 1; ++k) {
      const double m = x + y - period - k * period;
      take(0.5 * m * m);
    }
  }
  return best;
}

// Sorted distances at jittered stratified sample points; the piecewise-linear
// empirical CDF through them is the area-fraction curve.
struct AreaProfile {
  std::vector<double> sorted;
  double full = 0.0;

  double area(double w) const {
    if (w <= 0.0) return 0.0;
    if (w >= full) return 1.0;
    const auto n = static_cast<double>(sorted.size());
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), w);
    const auto k = static_cast<std::size_t>(it - sorted.begin());
    if (k == sorted.size()) return 1.0;
    const double lo_d = k == 0 ? 0.0 : sorted[k - 1];
    const double hi_d = sorted[k];
    const double lo_f = static_cast<double>(k) / n;
    const double frac = hi_d > lo_d ? (w - lo_d) / (hi_d - lo_d) : 1.0;
    return lo_f + frac / n;
  }
};

constexpr int kProfileSamples = 512;

std::shared_ptr<const AreaProfile> build_profile(PrimitiveSet set) {
  auto profile = std::make_shared<AreaProfile>();
  if (set == 0) throw InvariantError("unit cell has no primitives");
  std::mt19937_64 rng(0x5eedULL + set);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  profile->sorted.reserve(std::size_t(kProfileSamples) * kProfileSamples);
  for (int j = 0; j < kProfileSamples; ++j) {
    for (int i = 0; i < kProfileSamples; ++i) {
      const double x = (i + jitter(rng)) / kProfileSamples;
      const double y = (j + jitter(rng)) / kProfileSamples;
      profile->sorted.push_back(std::sqrt(squared_distance(set, x, y, 1.0)));
    }
  }
  std::sort(profile->sorted.begin(), profile->sorted.end());
  // The farthest point of the square from the bars is a vertex of the
  // distance arrangement; refine the sampled maximum on a fine regular grid.
  constexpr int kFine = 2048;
  double far2 = 0.0;
  for (int j = 0; j <= kFine; ++j)
    for (int i = 0; i <= kFine; ++i)
      far2 = std::max(far2, squared_distance(set, double(i), double(j), double(kFine)));
  profile->full = std::max(profile->sorted.back(), std::sqrt(far2) / kFine);
  return profile;
}

const AreaProfile& profile_for(PrimitiveSet set) {
  static std::mutex mutex;
  static std::map<PrimitiveSet, std::shared_ptr<const AreaProfile>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[set];
  if (!slot) slot = build_profile(set);
  return *slot;
}

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvariantError("size parameter tau must lie in [0, 1]");
}

}  // namespace

double CellRaster::fill_fraction() const {
  if (pixels.empty()) return 0.0;
  const auto solid = std::count(pixels.begin(), pixels.end(), std::uint8_t{1});
  return static_cast<double>(solid) / static_cast<double>(pixels.size());
}

std::vector<UnitCell> catalog() {
  const PrimitiveSet x = bit(P::Diagonal) | bit(P::AntiDiagonal);
  const PrimitiveSet plus = bit(P::HorizontalBar) | bit(P::VerticalBar);
  const PrimitiveSet box =
      bit(P::EdgeBottom) | bit(P::EdgeTop) | bit(P::EdgeLeft) | bit(P::EdgeRight);
  return {
      {1, "X", x},
      {2, "plus", plus},
      {3, "box", box},
      {4, "X-box", PrimitiveSet(x | box)},
      {5, "plus-box", PrimitiveSet(plus | box)},
      {6, "star", PrimitiveSet(x | plus)},
      {7, "H", PrimitiveSet(bit(P::EdgeLeft) | bit(P::EdgeRight) | bit(P::HorizontalBar))},
      {8, "I", PrimitiveSet(bit(P::EdgeBottom) | bit(P::EdgeTop) | bit(P::VerticalBar))},
      {9, "Z", PrimitiveSet(bit(P::EdgeBottom) | bit(P::EdgeTop) | bit(P::Diagonal))},
      {10, "N", PrimitiveSet(bit(P::EdgeLeft) | bit(P::EdgeRight) | bit(P::AntiDiagonal))},
      {11, "lattice", PrimitiveSet(x | plus | box)},
  };
}

double full_halfwidth(const UnitCell& cell) { return profile_for(cell.primitives).full; }

double volume_fraction(const UnitCell& cell, double tau) {
  check_tau(tau);
  if (tau <= 0.0) return 0.0;
  if (tau >= 1.0) return 1.0;
  const AreaProfile& profile = profile_for(cell.primitives);
  return profile.area(tau * profile.full);
}

double tau_for_vf(const UnitCell& cell, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvariantError("volume fraction must lie in [0, 1]");
  if (v <= 0.0) return 0.0;
  if (v >= 1.0) return 1.0;
  const AreaProfile& profile = profile_for(cell.primitives);
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = profile.area(mid * profile.full);
    if (std::abs(f - v) <= 1e-6) return mid;
    (f < v ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

CellRaster rasterize(const UnitCell& cell, double tau, int n) {
  if (n < 16) throw ResolutionError("cell raster resolution must be at least 16, got " + std::to_string(n));
  check_tau(tau);
  CellRaster raster;
  raster.resolution = n;
  raster.pixels.assign(std::size_t(n) * n, 0);
  if (tau <= 0.0) return raster;
  if (tau >= 1.0) {
    std::fill(raster.pixels.begin(), raster.pixels.end(), std::uint8_t{1});
    return raster;
  }
  // Pixel centres on the integer lattice 2i+1 of a cell of edge 2n.
  const double period = 2.0 * n;
  const double w = tau * full_halfwidth(cell) * period;
  const double w2 = w * w;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (squared_distance(cell.primitives, 2.0 * i + 1.0, 2.0 * j + 1.0, period) <= w2)
        raster.pixels[std::size_t(j) * n + i] = 1;
  return raster;
}

std::string primitive_flags(PrimitiveSet set) {
  std::string flags(kPrimitiveCount, '0');
  for (int i = 0; i < kPrimitiveCount; ++i)
    if (set & (1u << i)) flags[std::size_t(i)] = '1';
  return flags;
}

PrimitiveSet parse_primitive_flags(const std::string& flags) {
  if (flags.size() != std::size_t(kPrimitiveCount))
    throw FormatError("primitive flags must have " + std::to_string(kPrimitiveCount) + " characters: '" + flags + "'");
  PrimitiveSet set = 0;
  for (int i = 0; i < kPrimitiveCount; ++i) {
    const char c = flags[std::size_t(i)];
    if (c == '1') set = PrimitiveSet(set | (1u << i));
    else if (c != '0') throw FormatError("primitive flags must be 0/1: '" + flags + "'");
  }
  if (set == 0) throw FormatError("unit cell without primitives");
  return set;
}

void save_catalog(const std::vector<UnitCell>& cells, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write catalog file " + path.string());
  out << "# id name flags(hbar vbar diag antidiag bottom top left right)\n";
  for (const auto& c : cells) out << c.id << ' ' << c.name << ' ' << primitive_flags(c.primitives) << '\n';
  if (!out) throw Error("failed writing catalog file " + path.string());
}

std::vector<UnitCell> load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read catalog file " + path.string());
  std::vector<UnitCell> cells;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    UnitCell cell;
    std::string flags;
    if (!(ss >> cell.id)) continue;
    if (!(ss >> cell.name >> flags))
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'id name flags'");
    cell.primitives = parse_primitive_flags(flags);
    if (cell.id != static_cast<int>(cells.size()) + 1)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": ids must be consecutive from 1");
    cells.push_back(std::move(cell));
  }
  if (cells.empty()) throw FormatError("catalog file " + path.string() + " has no cells");
  return cells;
}

}  // namespace gmto::mstruct
