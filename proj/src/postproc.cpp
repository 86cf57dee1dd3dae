#include "gmto/postproc.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include "gmto/errors.hpp"

namespace gmto::postproc {

Resampled resample(const field::Checkpoint& ck, int nx, int ny) {
  if (nx < 1 || ny < 1) throw ResolutionError("resample grid needs at least one cell per axis");
  const field::Domain domain{ck.nx * ck.h, ck.ny * ck.h};
  // Same grid as training: reuse the training spacing so centres match bitwise.
  const double hx = nx == ck.nx ? ck.h : domain.width / nx;
  const double hy = ny == ck.ny ? ck.h : domain.height / ny;
  Resampled out;
  out.nx = nx;
  out.ny = ny;
  out.centers.reserve(std::size_t(nx) * std::size_t(ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out.centers.push_back({(i + 0.5) * hx, (j + 0.5) * hy});
  const field::FieldEvaluator evaluator(domain, ck.mode, ck.mask_volume, ck.input_scale);
  out.fields = evaluator.forward(ck.params, out.centers).fields;
  return out;
}

std::size_t assign_microstructure(std::span<const double> rho) {
  if (rho.empty()) throw ContractError("empty composition vector");
  return std::size_t(std::max_element(rho.begin(), rho.end()) - rho.begin());
}

std::vector<int> assign_all(const field::DesignFields& fields, std::span<const int> subset) {
  if (subset.size() != std::size_t(fields.num_microstructures))
    throw ContractError("subset size does not match the field");
  std::vector<int> ids(fields.size());
  for (std::size_t e = 0; e < fields.size(); ++e) ids[e] = subset[assign_microstructure(fields.rho_at(e))];
  return ids;
}

double RenderedDesign::solid_fraction() const {
  if (pixels.empty()) return 0.0;
  return double(std::count(pixels.begin(), pixels.end(), std::uint8_t{1})) / double(pixels.size());
}

RenderedDesign render(const std::vector<mstruct::UnitCell>& catalog, std::span<const int> ids,
                      std::span<const double> v, int nx, int ny, int cell_resolution, double v_cut) {
  const auto cells = std::size_t(nx) * std::size_t(ny);
  if (nx < 1 || ny < 1 || ids.size() != cells || v.size() != cells)
    throw ContractError("assignments and volume fractions must cover the grid");
  RenderedDesign out;
  out.nx = nx;
  out.ny = ny;
  out.cell_resolution = cell_resolution;
  out.ids.assign(cells, 0);
  out.pixels.assign(std::size_t(out.width()) * std::size_t(out.height()), 0);
  const int n = cell_resolution;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t e = std::size_t(j) * nx + i;
      const int id = ids[e];
      if (id < 1 || std::size_t(id) > catalog.size()) throw LookupError("microstructure id " + std::to_string(id) + " not in catalog");
      const double ve = std::clamp(v[e], 0.0, 1.0);
      if (ve < v_cut) continue;
      out.ids[e] = id;
      const auto& cell = catalog[std::size_t(id - 1)];
      const auto raster = mstruct::rasterize(cell, mstruct::tau_for_vf(cell, ve), n);
      for (int iy = 0; iy < n; ++iy) {
        const std::size_t row = std::size_t(ny - 1 - j) * n + std::size_t(n - 1 - iy);
        std::uint8_t* dst = out.pixels.data() + row * std::size_t(out.width()) + std::size_t(i) * n;
        for (int ix = 0; ix < n; ++ix) dst[ix] = raster.solid(ix, iy) ? 1 : 0;
      }
    }
  return out;
}

void write_pgm(const RenderedDesign& design, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image " + path.string());
  out << "P5\n" << design.width() << ' ' << design.height() << "\n255\n";
  std::vector<char> row(std::size_t(design.width()));
  for (int r = 0; r < design.height(); ++r) {
    for (int c = 0; c < design.width(); ++c)
      row[std::size_t(c)] = design.pixels[std::size_t(r) * design.width() + c] ? char(0) : char(255);
    out.write(row.data(), std::streamsize(row.size()));
  }
  if (!out) throw Error("failed writing image " + path.string());
}

void write_fields_csv(const std::filesystem::path& path, std::span<const field::Coord> centers,
                      const field::DesignFields& fields, std::span<const int> subset) {
  if (centers.size() != fields.size()) throw ContractError("centres and fields differ in size");
  std::ofstream out(path);
  if (!out) throw Error("cannot write fields file " + path.string());
  out << "x,y,v";
  for (int id : subset) out << ",rho_" << id;
  out << ",id\n" << std::setprecision(17);
  const auto ids = assign_all(fields, subset);
  for (std::size_t e = 0; e < fields.size(); ++e) {
    out << centers[e][0] << ',' << centers[e][1] << ',' << fields.v[e];
    for (double r : fields.rho_at(e)) out << ',' << r;
    out << ',' << ids[e] << '\n';
  }
  if (!out) throw Error("failed writing fields file " + path.string());
}

}  // namespace gmto::postproc
