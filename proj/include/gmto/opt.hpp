#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gmto/fem.hpp"
#include "gmto/field.hpp"
#include "gmto/homog.hpp"
#include "gmto/material.hpp"

namespace gmto::opt {

/// Continuation and optimizer settings; defaults are the published ones.
struct Schedules {
  double p0 = 1.0;
  double dp = 0.02;
  double p_max = 8.0;
  double t0 = 1.0;
  double mu = 1.01;
  double lr = 0.01;
  double clip = 1.0;
  int k_max = 300;
  double eps_star = 0.01;
  int window = 10;  // moving-average window of the termination test

  double p_at(int k) const;  // min(p0 + dp k, p_max)
  double t_at(int k) const;  // t0 mu^k
  bool operator==(const Schedules&) const = default;
};

struct ProblemSpec {
  fem::Mesh mesh;
  fem::BoundaryConditions bc;
  double vf_star = 0.5;
  int hidden_layers = 4;
  int neurons_per_layer = 20;
  std::uint64_t seed = 0;
  Schedules schedules;
  field::SymmetryMode symmetry = field::SymmetryMode::None;
  bool symmetry_masks_volume = true;
  double input_scale = field::kDefaultInputScale;
  std::vector<int> subset;  // ordered catalog ids

  /// Throws InvariantError on an invalid specification.
  void validate() const;
  bool operator==(const ProblemSpec&) const = default;
};

/// sum_active v_e A_e / (vf_star sum_active A_e) - 1.
double volume_constraint(std::span<const double> v, std::span<const std::uint8_t> active, double vf_star);

/// Two-branch extended log barrier and its derivative in g.
double log_barrier(double g, double t);
double log_barrier_derivative(double g, double t);

/// J / J0 + barrier(g_v).
double loss(double J, double g_v, double t, double J0);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int step = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;
};

/// Global-norm clipping to `clip`, then one bias-corrected Adam update of
/// `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, double lr,
               double clip);

struct Evaluation {
  double J = 0;
  double g_v = 0;
  double L = 0;
  double p = 0;
  double t = 0;
  double max_partition_error = 0;  // max_e |sum_m rho_m - 1|
  field::DesignFields fields;
  Eigen::VectorXd u;
  std::vector<double> grad;  // empty unless requested
};

/// Everything that stays fixed across iterations of one problem: mesh,
/// templates, factorization pattern, material model and network inputs.
class DesignProblem {
public:
  DesignProblem(const ProblemSpec& spec, const homog::MaterialDB& db);

  /// Forward chain (field -> effective C -> solve -> J, g_v -> L) and, when
  /// `with_gradient`, the reverse chain to dL/dparams. `J0` scales J.
  Evaluation evaluate(const field::NetworkParams& params, double p, double t, double J0,
                      bool with_gradient);

  const ProblemSpec& spec() const { return spec_; }
  const field::FieldEvaluator& field() const { return field_; }
  const material::MaterialModel& material() const { return material_; }
  const std::vector<field::Coord>& centers() const { return centers_; }
  field::NetworkParams initial_params() const;

private:
  ProblemSpec spec_;
  material::MaterialModel material_;
  fem::StiffnessSolver solver_;
  field::FieldEvaluator field_;
  std::vector<field::Coord> centers_;
};

/// dL/dparams via adjoint element seeds, material derivatives and the
/// network's reverse pass.
std::vector<double> total_gradient(DesignProblem& problem, const field::NetworkParams& params,
                                   double p, double t, double J0);

struct IterationRecord {
  int k = 0;
  double J = 0;
  double g_v = 0;
  double L = 0;
  double p = 0;
  double t = 0;
  double max_partition_error = 0;
  bool operator==(const IterationRecord&) const = default;
};

struct RunOptions {
  std::optional<std::filesystem::path> history_path;     // streamed CSV
  std::optional<std::filesystem::path> checkpoint_path;  // rewritten every checkpoint_every
  int checkpoint_every = 50;
  std::function<void(const IterationRecord&)> on_iteration;
};

struct OptimizationResult {
  field::NetworkParams params;
  field::DesignFields fields;
  std::vector<IterationRecord> history;
  double J0 = 0;
  bool converged = false;
  double wall_seconds = 0;
};

/// True when the relative change between the last two `window`-iteration
/// moving averages of L is below eps_star.
bool has_converged(std::span<const IterationRecord> history, int window, double eps_star);

/// The loss test is only consulted for a feasible design (g_v <= 0) once the
/// penalty continuation has reached half its cap; before that L drifts slowly
/// while the design is still mixed.
bool may_terminate(const IterationRecord& record, const Schedules& schedules);

OptimizationResult run_optimization(const ProblemSpec& spec, const homog::MaterialDB& db,
                                    const RunOptions& options = {});

/// Fraction of active elements with v > 0.1 whose largest rho is >= 0.9.
double mixing_metric(const field::DesignFields& fields, std::span<const std::uint8_t> active);

field::Checkpoint make_checkpoint(const ProblemSpec& spec, const field::NetworkParams& params,
                                  int iteration);

void write_history_header(std::ostream& out);
void write_history_row(std::ostream& out, const IterationRecord& r);

}  // namespace gmto::opt
