#pragma once

// Problem configuration documents (YAML). Sections: name, mesh, bc, opt, nn,
// mstruct. Omitted keys take the published defaults; unknown keys are errors.
//
// Node selectors:
//   left-edge | right-edge | top-edge | bottom-edge
//   point(x, y)               nearest node
//   segment(x0, y0, x1, y1)   nodes inside the axis-aligned box spanned by the ends
// Loads on multi-node selectors apply `magnitude` at every selected node.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gmto/fem.hpp"
#include "gmto/homog.hpp"
#include "gmto/opt.hpp"

namespace gmto::config {

struct MaskSpec {
  std::string type = "none";  // none | lbracket
  int cut_nx = 0;             // lbracket: removed upper-right block
  int cut_ny = 0;
  bool operator==(const MaskSpec&) const = default;
};

struct FixedSpec {
  std::string at;
  std::string dofs = "xy";  // x | y | xy
  bool operator==(const FixedSpec&) const = default;
};

struct LoadSpec {
  std::string at;
  std::string axis = "y";  // x | y
  double magnitude = 1.0;
  bool operator==(const LoadSpec&) const = default;
};

struct Config {
  std::string name = "problem";
  int nx = 60;
  int ny = 30;
  double h = 1.0;
  MaskSpec mask;
  std::vector<FixedSpec> fixed;
  std::vector<LoadSpec> loads;
  double vf_star = 0.5;
  std::uint64_t seed = 0;
  opt::Schedules schedules;
  int hidden_layers = 4;
  int neurons_per_layer = 20;
  double input_scale = field::kDefaultInputScale;
  std::string db_path = "material.db";
  std::vector<int> subset;  // empty: every cell in the database
  std::string symmetry_mode = "none";
  bool symmetry_masks_volume = true;
  bool operator==(const Config&) const = default;
};

/// Throws ConfigError (with the offending line when known).
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
std::string serialize(const Config& config);

/// Node indices picked by a selector; throws ConfigError on bad syntax.
std::vector<int> select_nodes(const fem::Mesh& mesh, const std::string& selector);

fem::Mesh build_mesh(const Config& config);
fem::BoundaryConditions build_bc(const Config& config, const fem::Mesh& mesh);

/// Full problem; an empty subset expands to all database ids in order.
opt::ProblemSpec to_problem(const Config& config, const homog::MaterialDB& db);

/// Parses "1,2,5" into ids.
std::vector<int> parse_id_list(const std::string& text);

}  // namespace gmto::config
