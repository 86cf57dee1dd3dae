// gmtopt: homogenize a microstructure catalog, optimize a graded design,
// render a trained field.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gmto/config.hpp"
#include "gmto/errors.hpp"
#include "gmto/homog.hpp"
#include "gmto/mstruct.hpp"
#include "gmto/opt.hpp"
#include "gmto/postproc.hpp"

namespace fs = std::filesystem;
using namespace gmto;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

struct HomogenizeArgs {
  std::string catalog_path;
  double E = 1.0;
  double nu = 0.3;
  int resolution = homog::kDefaultResolution;
  std::string out = "material.db";
};

struct OptimizeArgs {
  std::string config;
  std::string db;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string subset;
  std::optional<double> vf;
  std::optional<int> k_max;
  std::optional<double> eps_star;
  int render_res = 16;
  bool quiet = false;
};

struct RenderArgs {
  std::string checkpoint;
  int nx = 0;
  int ny = 0;
  int cell_res = 32;
  double void_cut = postproc::kDefaultVoidCut;
  std::string out = "design.pgm";
  std::string fields;
  std::string catalog_path;
};

std::vector<mstruct::UnitCell> load_cells(const std::string& path) {
  return path.empty() ? mstruct::catalog() : mstruct::load_catalog(path);
}

int cmd_homogenize(const HomogenizeArgs& a) {
  const auto cells = load_cells(a.catalog_path);
  const BaseMaterial base{a.E, a.nu};
  const auto db = homog::build_material_db(cells, base, homog::default_sample_vs(), a.resolution);
  bool all_spd = true;
  std::printf("%-4s %-10s %14s %14s %s\n", "id", "name", "max_residual", "min_eig", "spd");
  for (const auto& entry : db.cells) {
    const auto r = homog::fit_report(entry);
    all_spd = all_spd && r.spd;
    std::printf("%-4d %-10s %14.6e %14.6e %s\n", r.id, r.name.c_str(), r.max_residual, r.min_eigenvalue,
                r.spd ? "ok" : "clipped");
  }
  homog::save_material_db(db, a.out);
  std::printf("wrote %zu cells to %s%s\n", db.cells.size(), a.out.c_str(),
              all_spd ? "" : " (non-SPD fits are clipped at evaluation)");
  return kExitConverged;
}

int cmd_optimize(const OptimizeArgs& a) {
  auto cfg = config::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.subset.empty()) cfg.subset = config::parse_id_list(a.subset);
  if (a.vf) cfg.vf_star = *a.vf;
  if (a.k_max) cfg.schedules.k_max = *a.k_max;
  if (a.eps_star) cfg.schedules.eps_star = *a.eps_star;
  fs::path db_path = a.db.empty() ? fs::path(cfg.db_path) : fs::path(a.db);
  if (a.db.empty() && db_path.is_relative() && !fs::exists(db_path))
    db_path = fs::path(a.config).parent_path() / db_path;
  if (!fs::exists(db_path)) throw LookupError("material database not found: " + db_path.string());
  const auto db = homog::load_material_db(db_path);
  const auto spec = config::to_problem(cfg, db);

  const fs::path out(a.out);
  fs::create_directories(out);
  opt::RunOptions options;
  options.history_path = out / "history.csv";
  options.checkpoint_path = out / "checkpoint.txt";
  if (!a.quiet)
    options.on_iteration = [](const opt::IterationRecord& r) {
      if (r.k % 10 == 0)
        std::printf("k=%4d  J=%.6g  g_v=%+.4f  L=%.6g  p=%.2f  t=%.3f\n", r.k, r.J, r.g_v, r.L, r.p, r.t);
    };
  const auto result = opt::run_optimization(spec, db, options);

  const auto centers = spec.mesh.element_centers();
  postproc::write_fields_csv(out / "fields.csv", centers, result.fields, spec.subset);
  const auto ids = postproc::assign_all(result.fields, spec.subset);
  std::vector<double> v = result.fields.v;
  for (std::size_t e = 0; e < v.size(); ++e)
    if (!spec.mesh.is_active(int(e))) v[e] = 0.0;
  const auto design = postproc::render(mstruct::catalog(), ids, v, spec.mesh.nx, spec.mesh.ny, a.render_res);
  postproc::write_pgm(design, out / "design.pgm");

  const auto& last = result.history.back();
  std::printf("%s after %zu iterations: J=%.6g g_v=%+.5f pure=%.3f (%.1f s)\n",
              result.converged ? "converged" : "stopped at k_max", result.history.size(), last.J, last.g_v,
              opt::mixing_metric(result.fields, spec.mesh.active), result.wall_seconds);
  return result.converged ? kExitConverged : kExitNotConverged;
}

int cmd_render(const RenderArgs& a) {
  if (!fs::exists(a.checkpoint)) throw LookupError("checkpoint not found: " + a.checkpoint);
  const auto ck = field::load_checkpoint(a.checkpoint);
  const int nx = a.nx > 0 ? a.nx : ck.nx;
  const int ny = a.ny > 0 ? a.ny : ck.ny;
  const auto sampled = postproc::resample(ck, nx, ny);
  const auto ids = postproc::assign_all(sampled.fields, ck.subset);
  const auto design = postproc::render(load_cells(a.catalog_path), ids, sampled.fields.v, nx, ny, a.cell_res,
                                       a.void_cut);
  postproc::write_pgm(design, a.out);
  if (!a.fields.empty()) postproc::write_fields_csv(a.fields, sampled.centers, sampled.fields, ck.subset);
  std::printf("rendered %dx%d cells at %d px to %s (solid %.3f)\n", nx, ny, a.cell_res, a.out.c_str(),
              design.solid_fraction());
  return kExitConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graded multiscale topology optimization with a neural design field"};
  app.require_subcommand(1);

  HomogenizeArgs h;
  auto* homogenize = app.add_subcommand("homogenize", "Homogenize the microstructure catalog into a material database");
  homogenize->add_option("--catalog", h.catalog_path, "Catalog file (default: built-in 11 cells)");
  homogenize->add_option("--E", h.E, "Base Young's modulus")->check(CLI::PositiveNumber);
  homogenize->add_option("--nu", h.nu, "Base Poisson ratio")->check(CLI::Range(-0.99, 0.49));
  homogenize->add_option("--resolution", h.resolution, "Pixels per cell side")->check(CLI::Range(16, 1024));
  homogenize->add_option("--out", h.out, "Output database path");

  OptimizeArgs o;
  auto* optimize = app.add_subcommand("optimize", "Run the design optimization for a problem config");
  optimize->add_option("config", o.config, "Problem config file")->required()->check(CLI::ExistingFile);
  optimize->add_option("--db", o.db, "Material database (overrides mstruct.db_path)");
  optimize->add_option("--out", o.out, "Output directory");
  optimize->add_option("--seed", o.seed, "Network initialization seed");
  optimize->add_option("--subset", o.subset, "Comma-separated microstructure ids");
  optimize->add_option("--vf", o.vf, "Target volume fraction")->check(CLI::Range(0.0, 1.0));
  optimize->add_option("--k-max", o.k_max, "Iteration limit")->check(CLI::PositiveNumber);
  optimize->add_option("--eps", o.eps_star, "Convergence tolerance")->check(CLI::NonNegativeNumber);
  optimize->add_option("--render-res", o.render_res, "Pixels per cell in design.pgm")->check(CLI::Range(16, 256));
  optimize->add_flag("--quiet", o.quiet, "Only print the summary");

  RenderArgs r;
  auto* rend = app.add_subcommand("render", "Resample a checkpoint and draw the microstructure layout");
  rend->add_option("--checkpoint", r.checkpoint, "Checkpoint file")->required();
  rend->add_option("--nx", r.nx, "Cells along x (default: training mesh)");
  rend->add_option("--ny", r.ny, "Cells along y (default: training mesh)");
  rend->add_option("--cell-res", r.cell_res, "Pixels per cell")->check(CLI::Range(16, 512));
  rend->add_option("--void-cut", r.void_cut, "Cells with v below this are left empty");
  rend->add_option("--out", r.out, "Output PGM path");
  rend->add_option("--fields", r.fields, "Also write resampled fields CSV");
  rend->add_option("--catalog", r.catalog_path, "Catalog file (default: built-in 11 cells)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (homogenize->parsed()) return cmd_homogenize(h);
    if (optimize->parsed()) return cmd_optimize(o);
    return cmd_render(r);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gmtopt: %s\n", e.what());
    return kExitError;
  }
}
