#include "gmto/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "gmto/errors.hpp"
#include "gmto/field.hpp"

namespace gmto::config {

namespace {

int line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& section) {
  if (!map.IsMap()) throw ConfigError("section '" + section + "' must be a mapping", line_of(map));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in section '" + section + "'", line_of(kv.first));
  }
}

template <class T>
void read(const YAML::Node& map, const char* key, T& out) {
  const YAML::Node node = map[key];
  if (!node) return;
  try {
    out = node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("invalid value for '") + key + "'", line_of(node));
  }
}

const std::string kNumber = R"(\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*)";
const std::regex kPoint("point\\(" + kNumber + "," + kNumber + "\\)");
const std::regex kSegment("segment\\(" + kNumber + "," + kNumber + "," + kNumber + "," + kNumber + "\\)");

bool valid_selector(const std::string& s) {
  static const std::set<std::string> named{"left-edge", "right-edge", "top-edge", "bottom-edge"};
  return named.count(s) || std::regex_match(s, kPoint) || std::regex_match(s, kSegment);
}

}  // namespace

Config parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  Config c;
  if (!root || root.IsNull()) return c;
  check_keys(root, {"name", "mesh", "bc", "opt", "nn", "mstruct"}, "top level");
  read(root, "name", c.name);

  if (const auto mesh = root["mesh"]) {
    check_keys(mesh, {"nx", "ny", "h", "mask"}, "mesh");
    read(mesh, "nx", c.nx);
    read(mesh, "ny", c.ny);
    read(mesh, "h", c.h);
    if (const auto mask = mesh["mask"]) {
      if (mask.IsScalar()) {
        c.mask.type = mask.as<std::string>();
      } else {
        check_keys(mask, {"type", "cut_nx", "cut_ny"}, "mesh.mask");
        read(mask, "type", c.mask.type);
        read(mask, "cut_nx", c.mask.cut_nx);
        read(mask, "cut_ny", c.mask.cut_ny);
      }
      if (c.mask.type != "none" && c.mask.type != "lbracket")
        throw ConfigError("unknown mask type '" + c.mask.type + "'", line_of(mask));
    }
    if (c.nx < 1 || c.ny < 1) throw ConfigError("mesh needs nx, ny >= 1", line_of(mesh));
    if (!(c.h > 0.0)) throw ConfigError("element size h must be positive", line_of(mesh));
  }

  if (const auto bc = root["bc"]) {
    check_keys(bc, {"fixed", "loads"}, "bc");
    if (const auto fixed = bc["fixed"]) {
      if (!fixed.IsSequence()) throw ConfigError("bc.fixed must be a list", line_of(fixed));
      for (const auto& item : fixed) {
        check_keys(item, {"at", "dofs"}, "bc.fixed");
        FixedSpec f;
        read(item, "at", f.at);
        read(item, "dofs", f.dofs);
        if (!valid_selector(f.at)) throw ConfigError("bad node selector '" + f.at + "'", line_of(item));
        if (f.dofs != "x" && f.dofs != "y" && f.dofs != "xy")
          throw ConfigError("dofs must be x, y or xy", line_of(item));
        c.fixed.push_back(f);
      }
    }
    if (const auto loads = bc["loads"]) {
      if (!loads.IsSequence()) throw ConfigError("bc.loads must be a list", line_of(loads));
      for (const auto& item : loads) {
        check_keys(item, {"at", "axis", "magnitude"}, "bc.loads");
        LoadSpec l;
        read(item, "at", l.at);
        read(item, "axis", l.axis);
        read(item, "magnitude", l.magnitude);
        if (!valid_selector(l.at)) throw ConfigError("bad node selector '" + l.at + "'", line_of(item));
        if (l.axis != "x" && l.axis != "y") throw ConfigError("load axis must be x or y", line_of(item));
        if (!std::isfinite(l.magnitude)) throw ConfigError("load magnitude must be finite", line_of(item));
        c.loads.push_back(l);
      }
    }
  }

  if (const auto o = root["opt"]) {
    check_keys(o, {"vf_star", "k_max", "eps_star", "lr", "clip", "p0", "dp", "p_max", "t0", "mu", "seed", "window"},
               "opt");
    auto& s = c.schedules;
    read(o, "vf_star", c.vf_star);
    read(o, "k_max", s.k_max);
    read(o, "eps_star", s.eps_star);
    read(o, "lr", s.lr);
    read(o, "clip", s.clip);
    read(o, "p0", s.p0);
    read(o, "dp", s.dp);
    read(o, "p_max", s.p_max);
    read(o, "t0", s.t0);
    read(o, "mu", s.mu);
    read(o, "seed", c.seed);
    read(o, "window", s.window);
    if (!(c.vf_star > 0.0 && c.vf_star < 1.0)) throw ConfigError("vf_star must lie in (0, 1)", line_of(o));
    if (s.k_max < 1) throw ConfigError("k_max must be positive", line_of(o));
  }

  if (const auto nn = root["nn"]) {
    check_keys(nn, {"hidden_layers", "neurons_per_layer", "input_scale"}, "nn");
    read(nn, "hidden_layers", c.hidden_layers);
    read(nn, "neurons_per_layer", c.neurons_per_layer);
    read(nn, "input_scale", c.input_scale);
    if (!(c.input_scale > 0.0)) throw ConfigError("input_scale must be positive", line_of(nn));
    if (c.hidden_layers < 1 || c.neurons_per_layer < 1)
      throw ConfigError("network needs at least one hidden layer and neuron", line_of(nn));
  }

  if (const auto ms = root["mstruct"]) {
    check_keys(ms, {"db_path", "subset", "symmetry_mode", "symmetry_masks_volume"}, "mstruct");
    read(ms, "db_path", c.db_path);
    if (const auto subset = ms["subset"]) {
      if (subset.IsScalar() && subset.as<std::string>() == "all") {
        c.subset.clear();
      } else {
        read(ms, "subset", c.subset);
        if (c.subset.empty()) throw ConfigError("subset must not be empty", line_of(subset));
      }
    }
    read(ms, "symmetry_mode", c.symmetry_mode);
    read(ms, "symmetry_masks_volume", c.symmetry_masks_volume);
    try {
      field::parse_symmetry_mode(c.symmetry_mode);
    } catch (const InvariantError& e) {
      throw ConfigError(e.what(), line_of(ms["symmetry_mode"]));
    }
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what(), e.line());
  }
}

std::string serialize(const Config& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.name;
  out << YAML::Key << "mesh" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "nx" << YAML::Value << c.nx << YAML::Key << "ny" << YAML::Value << c.ny;
  out << YAML::Key << "h" << YAML::Value << c.h;
  out << YAML::Key << "mask" << YAML::Value << YAML::BeginMap << YAML::Key << "type" << YAML::Value << c.mask.type
      << YAML::Key << "cut_nx" << YAML::Value << c.mask.cut_nx << YAML::Key << "cut_ny" << YAML::Value
      << c.mask.cut_ny << YAML::EndMap;
  out << YAML::EndMap;
  out << YAML::Key << "bc" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "fixed" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : c.fixed)
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "at" << YAML::Value << f.at << YAML::Key << "dofs"
        << YAML::Value << f.dofs << YAML::EndMap;
  out << YAML::EndSeq;
  out << YAML::Key << "loads" << YAML::Value << YAML::BeginSeq;
  for (const auto& l : c.loads)
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "at" << YAML::Value << l.at << YAML::Key << "axis"
        << YAML::Value << l.axis << YAML::Key << "magnitude" << YAML::Value << l.magnitude << YAML::EndMap;
  out << YAML::EndSeq;
  out << YAML::EndMap;
  const auto& s = c.schedules;
  out << YAML::Key << "opt" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "vf_star" << YAML::Value << c.vf_star;
  out << YAML::Key << "k_max" << YAML::Value << s.k_max;
  out << YAML::Key << "eps_star" << YAML::Value << s.eps_star;
  out << YAML::Key << "lr" << YAML::Value << s.lr;
  out << YAML::Key << "clip" << YAML::Value << s.clip;
  out << YAML::Key << "p0" << YAML::Value << s.p0;
  out << YAML::Key << "dp" << YAML::Value << s.dp;
  out << YAML::Key << "p_max" << YAML::Value << s.p_max;
  out << YAML::Key << "t0" << YAML::Value << s.t0;
  out << YAML::Key << "mu" << YAML::Value << s.mu;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "window" << YAML::Value << s.window;
  out << YAML::EndMap;
  out << YAML::Key << "nn" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "hidden_layers" << YAML::Value << c.hidden_layers;
  out << YAML::Key << "neurons_per_layer" << YAML::Value << c.neurons_per_layer;
  out << YAML::Key << "input_scale" << YAML::Value << c.input_scale;
  out << YAML::EndMap;
  out << YAML::Key << "mstruct" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "db_path" << YAML::Value << c.db_path;
  out << YAML::Key << "subset" << YAML::Value;
  if (c.subset.empty()) out << "all";
  else out << YAML::Flow << c.subset;
  out << YAML::Key << "symmetry_mode" << YAML::Value << c.symmetry_mode;
  out << YAML::Key << "symmetry_masks_volume" << YAML::Value << c.symmetry_masks_volume;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<int> select_nodes(const fem::Mesh& mesh, const std::string& selector) {
  std::vector<int> nodes;
  const double tol = 0.5 * mesh.h;
  auto in_box = [&](double x0, double y0, double x1, double y1) {
    const double lo_x = std::min(x0, x1) - tol, hi_x = std::max(x0, x1) + tol;
    const double lo_y = std::min(y0, y1) - tol, hi_y = std::max(y0, y1) + tol;
    for (int j = 0; j <= mesh.ny; ++j)
      for (int i = 0; i <= mesh.nx; ++i) {
        const double x = i * mesh.h, y = j * mesh.h;
        if (x >= lo_x && x <= hi_x && y >= lo_y && y <= hi_y) nodes.push_back(mesh.node(i, j));
      }
  };
  const double w = mesh.width(), hgt = mesh.height();
  std::smatch m;
  if (selector == "left-edge") in_box(0, 0, 0, hgt);
  else if (selector == "right-edge") in_box(w, 0, w, hgt);
  else if (selector == "bottom-edge") in_box(0, 0, w, 0);
  else if (selector == "top-edge") in_box(0, hgt, w, hgt);
  else if (std::regex_match(selector, m, kPoint)) {
    const double x = std::stod(m[1]), y = std::stod(m[2]);
    const int i = std::clamp(int(std::lround(x / mesh.h)), 0, mesh.nx);
    const int j = std::clamp(int(std::lround(y / mesh.h)), 0, mesh.ny);
    nodes.push_back(mesh.node(i, j));
  } else if (std::regex_match(selector, m, kSegment)) {
    in_box(std::stod(m[1]), std::stod(m[2]), std::stod(m[3]), std::stod(m[4]));
  } else {
    throw ConfigError("bad node selector '" + selector + "'", 0);
  }
  if (nodes.empty()) throw ConfigError("selector '" + selector + "' matches no node", 0);
  return nodes;
}

fem::Mesh build_mesh(const Config& c) {
  fem::Mesh mesh = fem::Mesh::rectangular(c.nx, c.ny, c.h);
  if (c.mask.type == "lbracket") {
    if (c.mask.cut_nx < 1 || c.mask.cut_ny < 1 || c.mask.cut_nx >= c.nx || c.mask.cut_ny >= c.ny)
      throw ConfigError("lbracket mask needs 0 < cut_nx < nx and 0 < cut_ny < ny", 0);
    for (int j = c.ny - c.mask.cut_ny; j < c.ny; ++j)
      for (int i = c.nx - c.mask.cut_nx; i < c.nx; ++i) mesh.active[std::size_t(mesh.element(i, j))] = 0;
  }
  return mesh;
}

fem::BoundaryConditions build_bc(const Config& c, const fem::Mesh& mesh) {
  fem::BoundaryConditions bc;
  for (const auto& f : c.fixed)
    for (int n : select_nodes(mesh, f.at)) {
      if (f.dofs.find('x') != std::string::npos) bc.fixed_dofs.push_back(2 * n);
      if (f.dofs.find('y') != std::string::npos) bc.fixed_dofs.push_back(2 * n + 1);
    }
  std::sort(bc.fixed_dofs.begin(), bc.fixed_dofs.end());
  bc.fixed_dofs.erase(std::unique(bc.fixed_dofs.begin(), bc.fixed_dofs.end()), bc.fixed_dofs.end());
  for (const auto& l : c.loads)
    for (int n : select_nodes(mesh, l.at)) bc.loads.emplace_back(2 * n + (l.axis == "y" ? 1 : 0), l.magnitude);
  return bc;
}

opt::ProblemSpec to_problem(const Config& c, const homog::MaterialDB& db) {
  opt::ProblemSpec spec;
  spec.mesh = build_mesh(c);
  spec.bc = build_bc(c, spec.mesh);
  spec.vf_star = c.vf_star;
  spec.hidden_layers = c.hidden_layers;
  spec.neurons_per_layer = c.neurons_per_layer;
  spec.input_scale = c.input_scale;
  spec.seed = c.seed;
  spec.schedules = c.schedules;
  spec.symmetry = field::parse_symmetry_mode(c.symmetry_mode);
  spec.symmetry_masks_volume = c.symmetry_masks_volume;
  spec.subset = c.subset;
  if (spec.subset.empty())
    for (const auto& cell : db.cells) spec.subset.push_back(cell.id);
  for (int id : spec.subset) db.cell(id);
  spec.validate();
  return spec;
}

std::vector<int> parse_id_list(const std::string& text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int id = std::stoi(item, &used);
      if (used != item.size() && item.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument(item);
      ids.push_back(id);
    } catch (const std::exception&) {
      throw ConfigError("bad id list '" + text + "'", 0);
    }
  }
  if (ids.empty()) throw ConfigError("empty id list", 0);
  return ids;
}

}  // namespace gmto::config
