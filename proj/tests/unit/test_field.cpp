#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "gmto/errors.hpp"
#include "gmto/field.hpp"

using namespace gmto;
using namespace gmto::field;

namespace {

std::vector<Coord> random_points(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Coord> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

NetworkParams random_params(std::mt19937_64& rng, const std::vector<int>& widths, double scale = 0.8) {
  NetworkParams params = init(17, widths);
  std::normal_distribution<double> n(0.0, scale);
  for (auto& w : params.values) w = n(rng);
  return params;
}

// sum_i (a_rho_i . rho_i + a_v_i v_i): the scalar whose gradient backward returns.
double weighted_sum(const DesignFields& f, const std::vector<double>& a_rho, const std::vector<double>& a_v) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.rho.size(); ++i) s += a_rho[i] * f.rho[i];
  for (std::size_t i = 0; i < f.v.size(); ++i) s += a_v[i] * f.v[i];
  return s;
}

}  // namespace

TEST_CASE("widths and parameter counts") {
  const auto w = make_widths(11);
  CHECK(w == std::vector<int>{2, 20, 20, 20, 20, 12});
  const std::size_t n11 = parameter_count(w);
  CHECK(n11 == 3 * 20 + 3 * 21 * 20 + 21 * 12);
  CHECK(parameter_count(make_widths(12)) - n11 == 21);
  const auto params = init(1, w);
  CHECK(params.values.size() == n11);
  CHECK(params.num_microstructures() == 11);
}

TEST_CASE("initialization is deterministic and within the Glorot bound") {
  const auto w = make_widths(4);
  const auto a = init(99, w);
  CHECK(a == init(99, w));
  CHECK(a.values != init(100, w).values);
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const int fan_in = w[l];
    const int fan_out = w[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_in * fan_out; ++i) CHECK(std::abs(a.values[a.weight_offset(l) + std::size_t(i)]) <= bound);
    for (int i = 0; i < fan_out; ++i) CHECK(a.values[a.bias_offset(l) + std::size_t(i)] == 0.0);
  }
}

TEST_CASE("zero network gives uniform composition and half fill") {
  auto params = init(0, make_widths(5));
  std::fill(params.values.begin(), params.values.end(), 0.0);
  const std::vector<Coord> pts{{0.1, -0.3}, {0.9, 0.9}};
  const auto f = forward(params, pts);
  for (double r : f.rho) CHECK(r == doctest::Approx(0.2));
  for (double v : f.v) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("outputs satisfy the partition of unity and lie in range") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto params = random_params(rng, make_widths(1 + trial), 2.0);
    const auto f = forward(params, random_points(rng, 64, -5.0, 5.0));
    for (std::size_t i = 0; i < f.size(); ++i) {
      double sum = 0.0;
      for (double r : f.rho_at(i)) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        sum += r;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      CHECK(f.v[i] >= 0.0);
      CHECK(f.v[i] <= 1.0);
    }
  }
}

TEST_CASE("initial network does not commit to a microstructure") {
  const Domain domain{60.0, 30.0};
  const FieldEvaluator evaluator(domain);
  std::vector<Coord> centers;
  for (int j = 0; j < 30; ++j)
    for (int i = 0; i < 60; ++i) centers.push_back({i + 0.5, j + 0.5});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = evaluator.forward(init(seed, make_widths(11)), centers).fields;
    std::vector<double> mean(11, 0.0);
    for (std::size_t e = 0; e < f.size(); ++e)
      for (int m = 0; m < 11; ++m) mean[std::size_t(m)] += f.rho_at(e)[std::size_t(m)] / double(f.size());
    CHECK(*std::max_element(mean.begin(), mean.end()) <= 0.3);
  }
}

TEST_CASE("swish derivative in a one-neuron network") {
  // widths {2, 1, 2}: v = sigmoid(w2 swish(w1 . x + b1) + b2); d v / d b1 by hand.
  NetworkParams p = init(0, {2, 1, 2});
  std::fill(p.values.begin(), p.values.end(), 0.0);
  p.values[p.weight_offset(0) + 0] = 0.7;
  p.values[p.weight_offset(0) + 1] = -0.4;
  p.values[p.bias_offset(0)] = 0.3;
  p.values[p.weight_offset(1) + 1] = 1.5;
  p.values[p.bias_offset(1) + 1] = -0.2;
  const std::vector<Coord> pt{{0.5, 0.25}};
  const auto cache = forward_cached(p, pt);
  const double z = 0.7 * 0.5 - 0.4 * 0.25 + 0.3;
  const double s = 1.0 / (1.0 + std::exp(-z));
  const double swish = z * s;
  const double dswish = s + z * s * (1.0 - s);
  const double v = 1.0 / (1.0 + std::exp(-(1.5 * swish - 0.2)));
  CHECK(cache.fields.v[0] == doctest::Approx(v).epsilon(1e-14));
  CHECK(cache.fields.rho[0] == 1.0);
  const auto g = backward(p, cache, std::vector<double>(1, 0.0), std::vector<double>{1.0});
  CHECK(g[p.bias_offset(0)] == doctest::Approx(v * (1.0 - v) * 1.5 * dswish).epsilon(1e-12));
  CHECK(g[p.bias_offset(1) + 1] == doctest::Approx(v * (1.0 - v)).epsilon(1e-12));
  CHECK(g[p.bias_offset(1)] == 0.0);
}

TEST_CASE("backward matches central finite differences") {
  std::mt19937_64 rng(33);
  for (int m : {1, 3}) {
    const auto params = random_params(rng, make_widths(m, 2, 6));
    const auto pts = random_points(rng, 7);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> a_rho(pts.size() * std::size_t(m));
    std::vector<double> a_v(pts.size());
    for (auto& x : a_rho) x = n(rng);
    for (auto& x : a_v) x = n(rng);
    const auto grad = backward(params, forward_cached(params, pts), a_rho, a_v);
    REQUIRE(grad.size() == params.values.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
      auto plus = params;
      auto minus = params;
      plus.values[i] += 1e-6;
      minus.values[i] -= 1e-6;
      const double fd = (weighted_sum(forward(plus, pts), a_rho, a_v) - weighted_sum(forward(minus, pts), a_rho, a_v)) / 2e-6;
      CHECK(std::abs(grad[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("backward contracts") {
  std::mt19937_64 rng(2);
  const auto params = random_params(rng, make_widths(2, 2, 4));
  const auto pts = random_points(rng, 3);
  const auto cache = forward_cached(params, pts);
  const auto zero = backward(params, cache, std::vector<double>(6, 0.0), std::vector<double>(3, 0.0));
  for (double g : zero) CHECK(g == 0.0);
  CHECK_THROWS_AS(backward(params, cache, std::vector<double>(5, 0.0), std::vector<double>(3, 0.0)), ContractError);
  auto bad = params;
  bad.values[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward(bad, pts), NumericError);
}

TEST_CASE("normalization and symmetry masks") {
  const Domain d{60.0, 30.0};
  const std::vector<Coord> pts{{0.0, 0.0}, {60.0, 30.0}, {30.0, 15.0}};
  const auto n = normalize(pts, d);
  CHECK(n[0] == Coord{-1.0, -1.0});
  CHECK(n[1] == Coord{1.0, 1.0});
  CHECK(n[2] == Coord{0.0, 0.0});
  CHECK(normalize(pts, d, 5.0)[1] == Coord{5.0, 5.0});
  CHECK(apply_symmetry_mask(pts, SymmetryMode::None, d) == pts);
  const auto ux = apply_symmetry_mask(pts, SymmetryMode::UniformX, d);
  CHECK(ux[0] == Coord{30.0, 0.0});
  const auto uy = apply_symmetry_mask(pts, SymmetryMode::UniformY, d);
  CHECK(uy[1] == Coord{60.0, 15.0});
  CHECK(parse_symmetry_mode(to_string(SymmetryMode::UniformX)) == SymmetryMode::UniformX);
  CHECK_THROWS_AS(parse_symmetry_mode("diagonal"), InvariantError);
}

TEST_CASE("uniform-x evaluator: rows share one design") {
  const Domain d{8.0, 4.0};
  std::vector<Coord> centers;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 8; ++i) centers.push_back({i + 0.5, j + 0.5});
  std::mt19937_64 rng(4);
  const auto params = random_params(rng, make_widths(3, 2, 8));
  SUBCASE("both fields masked") {
    const auto f = FieldEvaluator(d, SymmetryMode::UniformX, true).forward(params, centers).fields;
    for (int j = 0; j < 4; ++j)
      for (int i = 1; i < 8; ++i) {
        const std::size_t a = std::size_t(j * 8), b = std::size_t(j * 8 + i);
        CHECK(f.v[a] == f.v[b]);
        for (int m = 0; m < 3; ++m) CHECK(f.rho_at(a)[std::size_t(m)] == f.rho_at(b)[std::size_t(m)]);
      }
  }
  SUBCASE("composition masked, volume free; gradient through both passes") {
    const FieldEvaluator ev(d, SymmetryMode::UniformX, false);
    const auto eval = ev.forward(params, centers);
    bool v_varies = false;
    for (int i = 1; i < 8; ++i) v_varies = v_varies || eval.fields.v[std::size_t(i)] != eval.fields.v[0];
    CHECK(v_varies);
    for (int i = 1; i < 8; ++i) CHECK(eval.fields.rho_at(std::size_t(i))[0] == eval.fields.rho_at(0)[0]);
    std::vector<double> a_rho(centers.size() * 3, 0.0), a_v(centers.size(), 0.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& x : a_rho) x = n(rng);
    for (auto& x : a_v) x = n(rng);
    const auto grad = ev.backward(params, eval, a_rho, a_v);
    for (std::size_t i = 0; i < grad.size(); i += 7) {
      auto plus = params;
      auto minus = params;
      plus.values[i] += 1e-6;
      minus.values[i] -= 1e-6;
      const double fd = (weighted_sum(ev.forward(plus, centers).fields, a_rho, a_v) -
                         weighted_sum(ev.forward(minus, centers).fields, a_rho, a_v)) / 2e-6;
      CHECK(std::abs(grad[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("checkpoint round trip") {
  Checkpoint ck;
  ck.params = init(5, make_widths(3));
  ck.params.values[3] = 0.1 + 1e-17;
  ck.nx = 40;
  ck.ny = 20;
  ck.h = 0.5;
  ck.mode = SymmetryMode::UniformY;
  ck.mask_volume = false;
  ck.input_scale = 2.5;
  ck.subset = {4, 1, 9};
  ck.iteration = 77;
  const auto path = std::filesystem::temp_directory_path() / "gmto_ck.txt";
  save_checkpoint(ck, path);
  CHECK(load_checkpoint(path) == ck);
  std::ofstream(path) << "gmto-checkpoint 1\nseed x\n";
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  CHECK_THROWS_AS(load_checkpoint(path.string() + ".missing"), Error);
}
