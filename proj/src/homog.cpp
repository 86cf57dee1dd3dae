#include "gmto/homog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "gmto/errors.hpp"
#include "gmto/fem.hpp"
#include "gmto/parallel.hpp"

namespace gmto::homog {

namespace {

using Fields = std::array<double, 6>;

Fields fields_of(const Cmat& c) { return {c.c11, c.c12, c.c13, c.c22, c.c23, c.c33}; }
Cmat cmat_of(const Fields& f) { return {f[0], f[1], f[2], f[3], f[4], f[5]}; }

constexpr std::array<const char*, 6> kComponentNames{"c11", "c12", "c13", "c22", "c23", "c33"};

}  // namespace

Homogenized homogenize(const mstruct::CellRaster& raster, const BaseMaterial& base) {
  const int n = raster.resolution;
  if (n < 1 || raster.pixels.size() != std::size_t(n) * std::size_t(n))
    throw ContractError("raster size does not match its resolution");
  const Cmat solid = base.plane_stress();
  if (std::none_of(raster.pixels.begin(), raster.pixels.end(), [](auto p) { return p != 0; }))
    return {kVoidFloor * solid, true};

  const fem::TemplateSet templates = fem::compute_templates(1.0 / n);
  const fem::ElemMatrix k_unit = fem::element_stiffness(solid, templates);

  // Periodic node (i, j), i, j in [0, n), has dofs 2 (j n + i) + {0, 1}.
  const int num_dofs = 2 * n * n;
  auto element_dofs = [n](int i, int j) {
    const int i1 = (i + 1) % n;
    const int j1 = (j + 1) % n;
    const std::array<int, 4> nodes{j * n + i, j * n + i1, j1 * n + i1, j1 * n + i};
    std::array<int, 8> d{};
    for (int a = 0; a < 4; ++a) {
      d[2 * a] = 2 * nodes[a];
      d[2 * a + 1] = 2 * nodes[a] + 1;
    }
    return d;
  };
  auto scale_of = [&](int i, int j) { return raster.solid(i, j) ? 1.0 : kVoidFloor; };

  // Node 0 is pinned to remove rigid translations: reduced index = dof - 2.
  constexpr int kPinned = 2;
  const int num_free = num_dofs - kPinned;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(std::size_t(n) * n * 64);
  // Affine displacement of each test strain at the element's unwrapped nodes.
  constexpr std::array<double, 4> kDx{0, 1, 1, 0};
  constexpr std::array<double, 4> kDy{0, 0, 1, 1};
  auto affine = [&](int i, int j, int load) {
    fem::ElemVector u;
    for (int a = 0; a < 4; ++a) {
      const double x = (i + kDx[a]) / n;
      const double y = (j + kDy[a]) / n;
      switch (load) {
        case 0: u[2 * a] = x; u[2 * a + 1] = 0; break;
        case 1: u[2 * a] = 0; u[2 * a + 1] = y; break;
        default: u[2 * a] = 0.5 * y; u[2 * a + 1] = 0.5 * x; break;
      }
    }
    return u;
  };

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(num_free, 3);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto dofs = element_dofs(i, j);
      const double s = scale_of(i, j);
      for (int a = 0; a < 8; ++a) {
        const int r = dofs[a] - kPinned;
        if (r < 0) continue;
        for (int b = 0; b < 8; ++b) {
          const int c = dofs[b] - kPinned;
          if (c >= 0) triplets.emplace_back(r, c, s * k_unit(a, b));
        }
      }
      for (int load = 0; load < 3; ++load) {
        const fem::ElemVector fe = -s * (k_unit * affine(i, j, load));
        for (int a = 0; a < 8; ++a)
          if (const int r = dofs[a] - kPinned; r >= 0) rhs(r, load) += fe[a];
      }
    }
  Eigen::SparseMatrix<double> k(num_free, num_free);
  k.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(k);
  if (llt.info() != Eigen::Success) return {kVoidFloor * solid, true};
  const Eigen::MatrixXd fluct_reduced = llt.solve(rhs);

  Eigen::Matrix3d ch = Eigen::Matrix3d::Zero();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto dofs = element_dofs(i, j);
      std::array<fem::ElemVector, 3> total;
      for (int load = 0; load < 3; ++load) {
        total[load] = affine(i, j, load);
        for (int a = 0; a < 8; ++a)
          if (const int r = dofs[a] - kPinned; r >= 0) total[load][a] += fluct_reduced(r, load);
      }
      const double s = scale_of(i, j);
      for (int p = 0; p < 3; ++p) {
        const fem::ElemVector kt = k_unit * total[p];
        for (int q = p; q < 3; ++q) ch(p, q) += s * total[q].dot(kt);
      }
    }
  ch(1, 0) = ch(0, 1);
  ch(2, 0) = ch(0, 2);
  ch(2, 1) = ch(1, 2);
  return {Cmat::from_matrix(ch), false};
}

double evaluate(const Polynomial& p, double v) {
  double r = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * v + *it;
  return r;
}

double evaluate_derivative(const Polynomial& p, double v) {
  double r = 0.0;
  for (std::size_t k = p.size() - 1; k >= 1; --k) r = r * v + double(k) * p[k];
  return r;
}

ComponentFits fit_polynomials(const std::vector<Sample>& samples, const Cmat& solid) {
  if (samples.size() < 7)
    throw InsufficientDataError("polynomial fit needs at least 7 samples, got " + std::to_string(samples.size()));
  // c(v) = s v + sum_{k=2..5} b_k (v^k - v): zero at v = 0, s at v = 1.
  constexpr int kFree = kPolynomialDegree - 1;
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(samples.size()), kFree);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const double v = samples[r].v;
    for (int k = 2; k <= kPolynomialDegree; ++k)
      basis(Eigen::Index(r), k - 2) = std::pow(v, k) - v;
  }
  const auto qr = basis.colPivHouseholderQr();
  const Fields end = fields_of(solid);
  ComponentFits fits{};
  for (int comp = 0; comp < 6; ++comp) {
    Eigen::VectorXd residual(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t r = 0; r < samples.size(); ++r)
      residual[Eigen::Index(r)] = fields_of(samples[r].c)[comp] - end[comp] * samples[r].v;
    const Eigen::VectorXd b = qr.solve(residual);
    Polynomial& p = fits[comp];
    p[0] = 0.0;
    p[1] = end[comp] - b.sum();
    for (int k = 2; k <= kPolynomialDegree; ++k) p[k] = b[k - 2];
  }
  return fits;
}

Cmat evaluate(const ComponentFits& fits, double v) {
  Fields f{};
  for (int i = 0; i < 6; ++i) f[i] = evaluate(fits[i], v);
  return cmat_of(f);
}

Cmat evaluate_derivative(const ComponentFits& fits, double v) {
  Fields f{};
  for (int i = 0; i < 6; ++i) f[i] = evaluate_derivative(fits[i], v);
  return cmat_of(f);
}

const CellEntry& MaterialDB::cell(int id) const {
  for (const auto& c : cells)
    if (c.id == id) return c;
  throw LookupError("microstructure id " + std::to_string(id) + " not in material database");
}

FitReport fit_report(const CellEntry& entry) {
  FitReport report;
  report.id = entry.id;
  report.name = entry.name;
  for (const auto& s : entry.samples) {
    const Fields fit = fields_of(evaluate(entry.fits, s.v));
    const Fields raw = fields_of(s.c);
    for (int i = 0; i < 6; ++i) report.max_residual = std::max(report.max_residual, std::abs(fit[i] - raw[i]));
  }
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    const double v = 0.01 + 0.99 * k / 99.0;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(evaluate(entry.fits, v).matrix(),
                                                             Eigen::EigenvaluesOnly);
    report.min_eigenvalue = std::min(report.min_eigenvalue, eig.eigenvalues()[0]);
  }
  report.spd = report.min_eigenvalue >= 0.0;
  return report;
}

std::vector<double> default_sample_vs() {
  std::vector<double> vs;
  for (int i = 0; i <= 10; ++i) vs.push_back(i / 10.0);
  return vs;
}

MaterialDB build_material_db(const std::vector<mstruct::UnitCell>& cells, const BaseMaterial& base,
                             const std::vector<double>& sample_vs, int resolution) {
  if (cells.empty()) throw InvariantError("empty microstructure catalog");
  const std::size_t nv = sample_vs.size();
  std::vector<Sample> results(cells.size() * nv);
  parallel_for(results.size(), [&](std::size_t task) {
    const auto& cell = cells[task / nv];
    const double v = sample_vs[task % nv];
    const auto raster = mstruct::rasterize(cell, mstruct::tau_for_vf(cell, v), resolution);
    // Fit against the realised pixel fraction; the endpoints stay exact.
    const double realised = (v <= 0.0 || v >= 1.0) ? v : raster.fill_fraction();
    results[task] = {realised, homogenize(raster, base).c};
  });

  MaterialDB db;
  db.base = base;
  db.sample_vs = sample_vs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellEntry entry;
    entry.id = cells[c].id;
    entry.name = cells[c].name;
    entry.samples.assign(results.begin() + std::ptrdiff_t(c * nv), results.begin() + std::ptrdiff_t((c + 1) * nv));
    entry.fits = fit_polynomials(entry.samples, base.plane_stress());
    db.cells.push_back(std::move(entry));
  }
  return db;
}

void save_material_db(const MaterialDB& db, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write material database " + path.string());
  out << std::setprecision(17);
  out << "gmto-material-db 1\n";
  out << "E " << db.base.E << "\nnu " << db.base.nu << "\ndegree " << db.degree << "\n";
  out << "samples " << db.sample_vs.size();
  for (double v : db.sample_vs) out << ' ' << v;
  out << "\ncells " << db.cells.size() << "\n";
  for (const auto& c : db.cells) {
    out << "cell " << c.id << ' ' << c.name << "\n";
    for (int i = 0; i < 6; ++i) {
      out << "coef " << kComponentNames[i];
      for (double a : c.fits[i]) out << ' ' << a;
      out << "\n";
    }
    for (const auto& s : c.samples) {
      out << "sample " << s.v;
      for (double x : fields_of(s.c)) out << ' ' << x;
      out << "\n";
    }
    out << "end\n";
  }
  if (!out) throw Error("failed writing material database " + path.string());
}

MaterialDB load_material_db(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read material database " + path.string());
  int lineno = 0;
  std::string line;
  auto next = [&](const std::string& keyword) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string key;
      ss >> key;
      if (key != keyword)
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected '" + keyword + "', found '" + key + "'");
      return std::istringstream(line.substr(key.size()));
    }
    throw FormatError(path.string() + ": unexpected end of file, expected '" + keyword + "'");
  };
  auto fail = [&](const std::string& what) {
    return FormatError(path.string() + ":" + std::to_string(lineno) + ": " + what);
  };

  MaterialDB db;
  {
    auto ss = next("gmto-material-db");
    int version = 0;
    if (!(ss >> version) || version != 1) throw fail("unsupported database version");
  }
  if (!(next("E") >> db.base.E)) throw fail("bad E");
  if (!(next("nu") >> db.base.nu)) throw fail("bad nu");
  if (!(next("degree") >> db.degree) || db.degree != kPolynomialDegree) throw fail("unsupported degree");
  std::size_t nv = 0;
  {
    auto ss = next("samples");
    if (!(ss >> nv)) throw fail("bad sample count");
    db.sample_vs.resize(nv);
    for (double& v : db.sample_vs)
      if (!(ss >> v)) throw fail("bad sample grid");
  }
  std::size_t ncells = 0;
  if (!(next("cells") >> ncells)) throw fail("bad cell count");
  for (std::size_t c = 0; c < ncells; ++c) {
    CellEntry entry;
    if (!(next("cell") >> entry.id >> entry.name)) throw fail("bad cell header");
    for (int i = 0; i < 6; ++i) {
      auto ss = next("coef");
      std::string name;
      ss >> name;
      if (name != kComponentNames[i]) throw fail("expected coefficients of " + std::string(kComponentNames[i]));
      for (double& a : entry.fits[i])
        if (!(ss >> a)) throw fail("bad coefficient");
    }
    for (std::size_t s = 0; s < nv; ++s) {
      auto ss = next("sample");
      Sample sample;
      Fields f{};
      if (!(ss >> sample.v)) throw fail("bad sample");
      for (double& x : f)
        if (!(ss >> x)) throw fail("bad sample");
      sample.c = cmat_of(f);
      entry.samples.push_back(sample);
    }
    next("end");
    db.cells.push_back(std::move(entry));
  }
  return db;
}

}  // namespace gmto::homog
