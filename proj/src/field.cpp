#include "gmto/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "gmto/errors.hpp"
#include "gmto/simd.hpp"

namespace gmto::field {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
double unit_uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::size_t parameter_count(std::span<const int> widths) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += std::size_t(widths[l] + 1) * std::size_t(widths[l + 1]);
  return n;
}

std::size_t NetworkParams::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += std::size_t(widths[l] + 1) * std::size_t(widths[l + 1]);
  return off;
}

std::size_t NetworkParams::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + std::size_t(widths[layer]) * std::size_t(widths[layer + 1]);
}

std::vector<int> make_widths(int num_microstructures, int hidden_layers, int neurons) {
  if (num_microstructures < 1) throw InvariantError("need at least one microstructure");
  if (hidden_layers < 1 || neurons < 1) throw InvariantError("network needs at least one hidden neuron");
  std::vector<int> w{2};
  for (int i = 0; i < hidden_layers; ++i) w.push_back(neurons);
  w.push_back(num_microstructures + 1);
  return w;
}

NetworkParams init(std::uint64_t seed, const std::vector<int>& widths) {
  if (widths.size() < 2 || widths.front() != 2 || widths.back() < 2 ||
      std::any_of(widths.begin(), widths.end(), [](int w) { return w < 1; }))
    throw InvariantError("invalid layer widths");
  NetworkParams p;
  p.widths = widths;
  p.seed = seed;
  p.values.assign(parameter_count(widths), 0.0);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    const std::size_t off = p.weight_offset(l);
    for (std::size_t k = 0; k < std::size_t(fan_in) * std::size_t(fan_out); ++k)
      p.values[off + k] = limit * (2.0 * unit_uniform(rng) - 1.0);
  }
  return p;
}

ForwardCache forward_cached(const NetworkParams& params, std::span<const Coord> coords) {
  if (params.values.size() != parameter_count(params.widths))
    throw ContractError("parameter vector does not match the layer widths");
  const auto& k = simd::active_kernels();
  const std::size_t batch = coords.size();
  const std::size_t layers = params.num_layers();
  ForwardCache cache;
  cache.batch = batch;
  cache.pre.resize(layers + 1);
  cache.act.resize(layers + 1);
  cache.act[0].resize(batch * 2);
  for (std::size_t i = 0; i < batch; ++i) {
    cache.act[0][2 * i] = coords[i][0];
    cache.act[0][2 * i + 1] = coords[i][1];
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t fan_in = std::size_t(params.widths[l]);
    const std::size_t fan_out = std::size_t(params.widths[l + 1]);
    const double* w = params.values.data() + params.weight_offset(l);
    const double* b = params.values.data() + params.bias_offset(l);
    auto& z = cache.pre[l + 1];
    auto& a = cache.act[l + 1];
    z.resize(batch * fan_out);
    a.resize(batch * fan_out);
    const double* in = cache.act[l].data();
    const bool hidden = l + 1 < layers;
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t o = 0; o < fan_out; ++o) {
        const double zi = k.dot(w + o * fan_in, in + i * fan_in, fan_in) + b[o];
        z[i * fan_out + o] = zi;
        a[i * fan_out + o] = hidden ? zi * sigmoid(zi) : zi;
      }
  }

  const std::size_t m = std::size_t(params.num_microstructures());
  const auto& logits = cache.act[layers];
  DesignFields& f = cache.fields;
  f.num_microstructures = int(m);
  f.rho.resize(batch * m);
  f.v.resize(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const double* zi = logits.data() + i * (m + 1);
    const double zmax = *std::max_element(zi, zi + m);
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) sum += (f.rho[i * m + j] = std::exp(zi[j] - zmax));
    for (std::size_t j = 0; j < m; ++j) f.rho[i * m + j] /= sum;
    f.v[i] = sigmoid(zi[m]);
  }
  const bool finite = std::all_of(f.rho.begin(), f.rho.end(), [](double x) { return std::isfinite(x); }) &&
                      std::all_of(f.v.begin(), f.v.end(), [](double x) { return std::isfinite(x); });
  if (!finite) throw NumericError("design field produced a non-finite output");
  return cache;
}

DesignFields forward(const NetworkParams& params, std::span<const Coord> coords) {
  return forward_cached(params, coords).fields;
}

std::vector<double> backward(const NetworkParams& params, const ForwardCache& cache,
                             std::span<const double> d_rho, std::span<const double> d_v) {
  const std::size_t batch = cache.batch;
  const std::size_t m = std::size_t(params.num_microstructures());
  if (d_rho.size() != batch * m || d_v.size() != batch || cache.fields.size() != batch ||
      cache.act.size() != params.widths.size())
    throw ContractError("upstream gradient shape does not match the forward pass");
  const auto& k = simd::active_kernels();
  const std::size_t layers = params.num_layers();
  std::vector<double> grad(params.values.size(), 0.0);

  // Output layer: softmax and sigmoid Jacobians.
  std::vector<double> dz(batch * (m + 1));
  for (std::size_t i = 0; i < batch; ++i) {
    const double* rho = cache.fields.rho.data() + i * m;
    const double* g = d_rho.data() + i * m;
    double inner = 0.0;
    for (std::size_t j = 0; j < m; ++j) inner += rho[j] * g[j];
    for (std::size_t j = 0; j < m; ++j) dz[i * (m + 1) + j] = rho[j] * (g[j] - inner);
    const double v = cache.fields.v[i];
    dz[i * (m + 1) + m] = d_v[i] * v * (1.0 - v);
  }

  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t fan_in = std::size_t(params.widths[l]);
    const std::size_t fan_out = std::size_t(params.widths[l + 1]);
    const double* w = params.values.data() + params.weight_offset(l);
    double* gw = grad.data() + params.weight_offset(l);
    double* gb = grad.data() + params.bias_offset(l);
    const double* in = cache.act[l].data();
    std::vector<double> d_in(l > 0 ? batch * fan_in : 0, 0.0);
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t o = 0; o < fan_out; ++o) {
        const double g = dz[i * fan_out + o];
        if (g == 0.0) continue;
        gb[o] += g;
        k.axpy(g, in + i * fan_in, gw + o * fan_in, fan_in);
        if (l > 0) k.axpy(g, w + o * fan_in, d_in.data() + i * fan_in, fan_in);
      }
    if (l == 0) break;
    // Through the Swish of the previous layer: d/dz [z s(z)] = s + z s (1 - s).
    const auto& z = cache.pre[l];
    for (std::size_t idx = 0; idx < d_in.size(); ++idx) {
      const double s = sigmoid(z[idx]);
      d_in[idx] *= s + z[idx] * s * (1.0 - s);
    }
    dz = std::move(d_in);
  }
  return grad;
}

std::string to_string(SymmetryMode mode) {
  switch (mode) {
    case SymmetryMode::UniformX: return "uniform-x";
    case SymmetryMode::UniformY: return "uniform-y";
    case SymmetryMode::None: break;
  }
  return "none";
}

SymmetryMode parse_symmetry_mode(const std::string& text) {
  if (text == "none") return SymmetryMode::None;
  if (text == "uniform-x") return SymmetryMode::UniformX;
  if (text == "uniform-y") return SymmetryMode::UniformY;
  throw InvariantError("unknown symmetry mode '" + text + "' (expected none, uniform-x or uniform-y)");
}

std::vector<Coord> normalize(std::span<const Coord> coords, const Domain& domain, double scale) {
  std::vector<Coord> out(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i)
    out[i] = {scale * (2.0 * coords[i][0] / domain.width - 1.0),
              scale * (2.0 * coords[i][1] / domain.height - 1.0)};
  return out;
}

std::vector<Coord> apply_symmetry_mask(std::span<const Coord> coords, SymmetryMode mode,
                                       const Domain& domain) {
  std::vector<Coord> out(coords.begin(), coords.end());
  if (mode == SymmetryMode::UniformX)
    for (auto& c : out) c[0] = 0.5 * domain.width;
  else if (mode == SymmetryMode::UniformY)
    for (auto& c : out) c[1] = 0.5 * domain.height;
  return out;
}

FieldEvaluator::FieldEvaluator(Domain domain, SymmetryMode mode, bool mask_volume, double input_scale)
    : domain_(domain), mode_(mode), mask_volume_(mask_volume), input_scale_(input_scale) {
  if (!(domain.width > 0.0 && domain.height > 0.0)) throw InvariantError("domain must have positive extent");
  if (!(input_scale > 0.0) || !std::isfinite(input_scale)) throw InvariantError("input scale must be positive");
}

FieldEvaluator::Evaluation FieldEvaluator::forward(const NetworkParams& params,
                                                   std::span<const Coord> points) const {
  Evaluation eval;
  const auto masked = normalize(apply_symmetry_mask(points, mode_, domain_), domain_, input_scale_);
  eval.rho_pass = forward_cached(params, masked);
  eval.fields = eval.rho_pass.fields;
  if (mode_ != SymmetryMode::None && !mask_volume_) {
    eval.v_pass = forward_cached(params, normalize(points, domain_, input_scale_));
    eval.fields.v = eval.v_pass->fields.v;
  }
  return eval;
}

std::vector<double> FieldEvaluator::backward(const NetworkParams& params, const Evaluation& eval,
                                             std::span<const double> d_rho,
                                             std::span<const double> d_v) const {
  if (!eval.v_pass) return field::backward(params, eval.rho_pass, d_rho, d_v);
  const std::vector<double> zero_v(d_v.size(), 0.0);
  const std::vector<double> zero_rho(d_rho.size(), 0.0);
  auto grad = field::backward(params, eval.rho_pass, d_rho, zero_v);
  const auto grad_v = field::backward(params, *eval.v_pass, zero_rho, d_v);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += grad_v[i];
  return grad;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << std::setprecision(17);
  out << "gmto-checkpoint 1\n";
  out << "seed " << ck.params.seed << "\n";
  out << "widths";
  for (int w : ck.params.widths) out << ' ' << w;
  out << "\nmesh " << ck.nx << ' ' << ck.ny << ' ' << ck.h << "\n";
  out << "symmetry " << to_string(ck.mode) << ' ' << (ck.mask_volume ? 1 : 0) << "\n";
  out << "input_scale " << ck.input_scale << "\n";
  out << "subset";
  for (int id : ck.subset) out << ' ' << id;
  out << "\niteration " << ck.iteration << "\n";
  out << "params " << ck.params.values.size() << "\n";
  for (double v : ck.params.values) out << v << "\n";
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  auto fail = [&](const std::string& what) { return FormatError(path.string() + ": " + what); };
  auto expect = [&](const std::string& key) {
    std::string word;
    if (!(in >> word) || word != key) throw fail("expected '" + key + "'");
  };
  auto read_ints = [&](std::vector<int>& out) {
    std::string line;
    std::getline(in, line);
    std::istringstream ss(line);
    int x = 0;
    while (ss >> x) out.push_back(x);
  };
  Checkpoint ck;
  int version = 0;
  expect("gmto-checkpoint");
  if (!(in >> version) || version != 1) throw fail("unsupported version");
  expect("seed");
  if (!(in >> ck.params.seed)) throw fail("bad seed");
  expect("widths");
  read_ints(ck.params.widths);
  expect("mesh");
  if (!(in >> ck.nx >> ck.ny >> ck.h)) throw fail("bad mesh line");
  expect("symmetry");
  std::string mode;
  int mask = 1;
  if (!(in >> mode >> mask)) throw fail("bad symmetry line");
  ck.mode = parse_symmetry_mode(mode);
  ck.mask_volume = mask != 0;
  expect("input_scale");
  if (!(in >> ck.input_scale) || !(ck.input_scale > 0.0)) throw fail("bad input scale");
  expect("subset");
  read_ints(ck.subset);
  expect("iteration");
  if (!(in >> ck.iteration)) throw fail("bad iteration");
  expect("params");
  std::size_t n = 0;
  if (!(in >> n)) throw fail("bad parameter count");
  if (ck.params.widths.size() < 2 || n != parameter_count(ck.params.widths))
    throw fail("parameter count does not match widths");
  if (ck.subset.size() != std::size_t(ck.params.num_microstructures()))
    throw fail("subset size does not match the network output");
  ck.params.values.resize(n);
  for (double& v : ck.params.values)
    if (!(in >> v)) throw fail("truncated parameter list");
  return ck;
}

}  // namespace gmto::field
