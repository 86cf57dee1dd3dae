#include <doctest.h>

#include <filesystem>

#include "gmto/config.hpp"
#include "gmto/errors.hpp"

using namespace gmto;
using namespace gmto::config;

namespace {

homog::MaterialDB fake_db(int count = 11) {
  homog::MaterialDB db;
  for (int id = 1; id <= count; ++id) {
    homog::CellEntry e;
    e.id = id;
    e.name = "cell" + std::to_string(id);
    db.cells.push_back(e);
  }
  return db;
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("empty document takes the defaults") {
  const auto c = parse_config("{}");
  CHECK(c == Config{});
  CHECK(c.schedules.k_max == 300);
  CHECK(c.schedules.lr == 0.01);
  CHECK(c.input_scale == field::kDefaultInputScale);
  CHECK(c.subset.empty());
}

TEST_CASE("unknown keys are rejected with their line") {
  CHECK(config_error_line("name: a\nmesh:\n  nx: 10\n  nz: 4\n") == 4);
  CHECK(config_error_line("name: a\nopt:\n  vf_star: 0.4\n\n  learning_rate: 2\n") == 5);
  CHECK(config_error_line("color: red\n") == 1);
  CHECK(config_error_line("mesh:\n  nx: ten\n") == 2);
  CHECK(config_error_line("mesh: [1, 2\n") >= 1);
  try {
    parse_config("opt:\n  bogus: 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("serialize round trip") {
  Config c;
  c.name = "trip";
  c.nx = 12;
  c.ny = 7;
  c.h = 0.25;
  c.mask = {"lbracket", 5, 3};
  c.fixed = {{"left-edge", "x"}, {"point(0, 0)", "xy"}};
  c.loads = {{"segment(1, 7, 3, 7)", "y", -0.1 + 1e-16}};
  c.vf_star = 0.37;
  c.seed = 123456789012345ULL;
  c.schedules.k_max = 42;
  c.schedules.p_max = 6.0;
  c.input_scale = 3.0;
  c.subset = {3, 1, 7};
  c.symmetry_mode = "uniform-x";
  c.symmetry_masks_volume = false;
  CHECK(parse_config(serialize(c)) == c);
  CHECK(parse_config(serialize(Config{})) == Config{});
}

TEST_CASE("node selectors") {
  const auto mesh = fem::Mesh::rectangular(4, 2);
  CHECK(select_nodes(mesh, "left-edge") == std::vector<int>{0, 5, 10});
  CHECK(select_nodes(mesh, "right-edge") == std::vector<int>{4, 9, 14});
  CHECK(select_nodes(mesh, "bottom-edge") == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(select_nodes(mesh, "top-edge") == std::vector<int>{10, 11, 12, 13, 14});
  CHECK(select_nodes(mesh, "point(4, 0)") == std::vector<int>{4});
  CHECK(select_nodes(mesh, "point(2.4, 0.6)") == std::vector<int>{7});
  CHECK(select_nodes(mesh, "point(99, -3)") == std::vector<int>{4});
  CHECK(select_nodes(mesh, "segment(0, 2, 1, 2)") == std::vector<int>{10, 11});
  CHECK_THROWS_AS(select_nodes(mesh, "middle"), ConfigError);
  CHECK_THROWS_AS(select_nodes(mesh, "segment(9, 9, 9, 9)"), ConfigError);
}

TEST_CASE("boundary conditions are sorted and deduplicated") {
  Config c;
  c.nx = 3;
  c.ny = 1;
  c.fixed = {{"left-edge", "xy"}, {"point(0, 0)", "x"}};
  c.loads = {{"top-edge", "y", -1.0}};
  const auto mesh = build_mesh(c);
  const auto bc = build_bc(c, mesh);
  CHECK(bc.fixed_dofs == std::vector<int>{0, 1, 8, 9});
  REQUIRE(bc.loads.size() == 4);
  for (const auto& [dof, f] : bc.loads) {
    CHECK(dof % 2 == 1);
    CHECK(f == -1.0);
  }
}

TEST_CASE("lbracket mask removes the upper-right block") {
  Config c;
  c.nx = 33;
  c.ny = 33;
  c.mask = {"lbracket", 17, 17};
  const auto mesh = build_mesh(c);
  CHECK(mesh.active_count() == 800);
  CHECK(mesh.is_active(mesh.element(15, 32)));
  CHECK_FALSE(mesh.is_active(mesh.element(16, 32)));
  CHECK_FALSE(mesh.is_active(mesh.element(32, 16)));
  CHECK(mesh.is_active(mesh.element(32, 15)));
  c.mask.cut_nx = 33;
  CHECK_THROWS_AS(build_mesh(c), ConfigError);
}

TEST_CASE("to_problem expands and validates the subset") {
  Config c;
  c.nx = 6;
  c.ny = 3;
  c.fixed = {{"left-edge", "xy"}};
  c.loads = {{"point(6, 0)", "y", -1.0}};
  const auto db = fake_db(4);
  CHECK(to_problem(c, db).subset == std::vector<int>{1, 2, 3, 4});
  c.subset = {2, 4};
  const auto spec = to_problem(c, db);
  CHECK(spec.subset == std::vector<int>{2, 4});
  CHECK(spec.mesh.num_elements() == 18);
  c.subset = {2, 9};
  CHECK_THROWS_AS(to_problem(c, db), LookupError);
  c.subset.clear();
  c.vf_star = 1.5;
  CHECK_THROWS_AS(to_problem(c, db), InvariantError);
}

TEST_CASE("bundled configs load and convert") {
  const std::filesystem::path dir(GMTO_CONFIG_DIR);
  const auto db = fake_db();
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    ++count;
    CAPTURE(entry.path().string());
    const auto c = load_config(entry.path());
    CHECK(c.name == entry.path().stem().string());
    const auto spec = to_problem(c, db);
    CHECK(spec.subset.size() == 11);
    CHECK_FALSE(spec.bc.loads.empty());
  }
  CHECK(count == 6);
  CHECK(to_problem(load_config(dir / "lbracket.cfg"), db).mesh.active_count() == 800);
  CHECK(load_config(dir / "edge_beam.cfg").symmetry_mode == "uniform-x");
}

TEST_CASE("id lists") {
  CHECK(parse_id_list("1,2,5") == std::vector<int>{1, 2, 5});
  CHECK(parse_id_list(" 7 , 3") == std::vector<int>{7, 3});
  CHECK_THROWS_AS(parse_id_list("1,,2"), ConfigError);
  CHECK_THROWS_AS(parse_id_list("a"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), Error);
}
