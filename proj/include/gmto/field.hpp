#pragma once

// Coordinate-based design field: a dense MLP with Swish hidden layers maps a
// normalized point (x, y) to M + 1 outputs; the first M go through a softmax
// (microstructure composition rho) and the last through a sigmoid (volume
// fraction v).

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gmto::field {

using Coord = std::array<double, 2>;

/// Layer widths including input (2) and output (M + 1); parameters stored
/// flat, per layer the row-major (fan_out x fan_in) weights then the biases.
struct NetworkParams {
  std::vector<int> widths;
  std::uint64_t seed = 0;
  std::vector<double> values;

  int num_microstructures() const { return widths.back() - 1; }
  std::size_t num_layers() const { return widths.size() - 1; }
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;
  bool operator==(const NetworkParams&) const = default;
};

std::size_t parameter_count(std::span<const int> widths);

/// {2, neurons x hidden_layers, M + 1}.
std::vector<int> make_widths(int num_microstructures, int hidden_layers = 4, int neurons = 20);

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
NetworkParams init(std::uint64_t seed, const std::vector<int>& widths);

struct DesignFields {
  int num_microstructures = 0;
  std::vector<double> rho;  // row-major, one row of M entries per point
  std::vector<double> v;

  std::size_t size() const { return v.size(); }
  std::span<const double> rho_at(std::size_t i) const {
    return {rho.data() + i * std::size_t(num_microstructures), std::size_t(num_microstructures)};
  }
};

/// Activations retained for the reverse pass.
struct ForwardCache {
  std::size_t batch = 0;
  std::vector<std::vector<double>> pre;  // pre-activations per layer
  std::vector<std::vector<double>> act;  // act[0] = inputs, act[l] = output of layer l
  DesignFields fields;
};

/// Batch evaluation at already-normalized coordinates. Throws NumericError if
/// any output is not finite.
ForwardCache forward_cached(const NetworkParams& params, std::span<const Coord> coords);
DesignFields forward(const NetworkParams& params, std::span<const Coord> coords);

/// Reverse pass: gradient of sum_i (d_rho_i . rho_i + d_v_i v_i) with respect
/// to all parameters. Throws ContractError on shape mismatch.
std::vector<double> backward(const NetworkParams& params, const ForwardCache& cache,
                             std::span<const double> d_rho, std::span<const double> d_v);

enum class SymmetryMode { None, UniformX, UniformY };

std::string to_string(SymmetryMode mode);
SymmetryMode parse_symmetry_mode(const std::string& text);  // throws InvariantError

/// Design domain [0, width] x [0, height].
struct Domain {
  double width = 1.0;
  double height = 1.0;
  bool operator==(const Domain&) const = default;
};

/// Half-width of the network input box. Inputs confined to [-1, 1] leave the
/// field too smooth to form trusses; wider boxes let the first layer develop
/// finer spatial features, while much wider ones saturate the initial design.
inline constexpr double kDefaultInputScale = 5.0;

/// Maps the domain bounding box onto [-scale, scale]^2.
std::vector<Coord> normalize(std::span<const Coord> coords, const Domain& domain, double scale = 1.0);

/// UniformX replaces x by the domain midpoint (rows of constant y see one
/// input); UniformY does the same for y.
std::vector<Coord> apply_symmetry_mask(std::span<const Coord> coords, SymmetryMode mode,
                                       const Domain& domain);

/// Network plus input handling for one design domain. With a symmetry mode and
/// `mask_volume` false, rho comes from the masked input and v from the raw
/// input (two passes); otherwise both come from the masked input.
class FieldEvaluator {
public:
  FieldEvaluator(Domain domain, SymmetryMode mode = SymmetryMode::None, bool mask_volume = true,
                 double input_scale = kDefaultInputScale);

  struct Evaluation {
    ForwardCache rho_pass;
    std::optional<ForwardCache> v_pass;
    DesignFields fields;
  };

  Evaluation forward(const NetworkParams& params, std::span<const Coord> points) const;
  std::vector<double> backward(const NetworkParams& params, const Evaluation& eval,
                               std::span<const double> d_rho, std::span<const double> d_v) const;

  const Domain& domain() const { return domain_; }
  SymmetryMode mode() const { return mode_; }
  bool mask_volume() const { return mask_volume_; }
  double input_scale() const { return input_scale_; }

private:
  Domain domain_;
  SymmetryMode mode_;
  bool mask_volume_;
  double input_scale_;
};

/// Restartable snapshot of a trained field.
struct Checkpoint {
  NetworkParams params;
  int nx = 0;
  int ny = 0;
  double h = 1.0;
  SymmetryMode mode = SymmetryMode::None;
  bool mask_volume = true;
  double input_scale = kDefaultInputScale;
  std::vector<int> subset;  // catalog ids, one per rho output
  int iteration = 0;
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gmto::field
