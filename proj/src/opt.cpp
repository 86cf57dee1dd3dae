#include "gmto/opt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "gmto/errors.hpp"

namespace gmto::opt {

double Schedules::p_at(int k) const { return std::min(p0 + dp * k, p_max); }

double Schedules::t_at(int k) const { return t0 * std::pow(mu, k); }

void ProblemSpec::validate() const {
  mesh.validate();
  bc.validate(mesh);
  if (!(vf_star > 0.0 && vf_star < 1.0)) throw InvariantError("vf_star must lie in (0, 1)");
  if (subset.empty()) throw InvariantError("microstructure subset is empty");
  if (hidden_layers < 1 || neurons_per_layer < 1) throw InvariantError("network needs hidden neurons");
  if (!(input_scale > 0.0) || !std::isfinite(input_scale)) throw InvariantError("input scale must be positive");
  const auto& s = schedules;
  if (!(s.p0 >= 1.0 && s.p_max >= s.p0 && s.dp >= 0.0)) throw InvariantError("need 1 <= p0 <= p_max and dp >= 0");
  if (!(s.t0 > 0.0 && s.mu > 1.0)) throw InvariantError("need t0 > 0 and mu > 1");
  if (!(s.lr > 0.0 && s.clip > 0.0)) throw InvariantError("learning rate and clip norm must be positive");
  if (s.k_max < 1 || s.window < 1 || !(s.eps_star >= 0.0)) throw InvariantError("invalid termination settings");
}

double volume_constraint(std::span<const double> v, std::span<const std::uint8_t> active, double vf_star) {
  if (v.size() != active.size()) throw ContractError("volume field and mask sizes differ");
  double filled = 0.0;
  double total = 0.0;
  for (std::size_t e = 0; e < v.size(); ++e) {
    if (!active[e]) continue;
    filled += v[e];
    total += 1.0;
  }
  return filled / (vf_star * total) - 1.0;
}

double log_barrier(double g, double t) {
  if (g <= -1.0 / (t * t)) return -std::log(-g) / t;
  return t * g - std::log(1.0 / (t * t)) / t + 1.0 / t;
}

double log_barrier_derivative(double g, double t) {
  if (g <= -1.0 / (t * t)) return -1.0 / (t * g);
  return t;
}

double loss(double J, double g_v, double t, double J0) { return J / J0 + log_barrier(g_v, t); }

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, double lr,
               double clip) {
  if (grad.size() != params.size()) throw ContractError("gradient and parameter sizes differ");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw ContractError("optimizer state does not match parameters");
  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  const double norm = std::sqrt(norm2);
  const double scale = norm > clip ? clip / norm : 1.0;
  ++state.step;
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, state.step);
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i] * scale;
    state.m[i] = AdamState::kBeta1 * state.m[i] + (1.0 - AdamState::kBeta1) * g;
    state.v[i] = AdamState::kBeta2 * state.v[i] + (1.0 - AdamState::kBeta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
  }
}

DesignProblem::DesignProblem(const ProblemSpec& spec, const homog::MaterialDB& db)
    : spec_((spec.validate(), spec)),
      material_(db, spec.subset),
      solver_(spec.mesh, spec.bc, fem::compute_templates(spec.mesh.h)),
      field_(field::Domain{spec.mesh.width(), spec.mesh.height()}, spec.symmetry,
             spec.symmetry_masks_volume, spec.input_scale),
      centers_(spec.mesh.element_centers()) {}

field::NetworkParams DesignProblem::initial_params() const {
  return field::init(spec_.seed, field::make_widths(int(spec_.subset.size()), spec_.hidden_layers,
                                                    spec_.neurons_per_layer));
}

Evaluation DesignProblem::evaluate(const field::NetworkParams& params, double p, double t, double J0,
                                   bool with_gradient) {
  if (params.num_microstructures() != int(material_.size()))
    throw ContractError("network output count does not match the microstructure subset");
  const fem::Mesh& mesh = spec_.mesh;
  const auto ne = std::size_t(mesh.num_elements());
  const std::size_t m = material_.size();
  const auto field_eval = field_.forward(params, centers_);
  const auto& fields = field_eval.fields;

  Evaluation out;
  out.p = p;
  out.t = t;
  std::vector<Cmat> element_c(ne, material_.floor());
  std::vector<material::EffectiveC> derivs(with_gradient ? ne : 0);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto rho = fields.rho_at(e);
    const double sum = std::accumulate(rho.begin(), rho.end(), 0.0);
    out.max_partition_error = std::max(out.max_partition_error, std::abs(sum - 1.0));
    if (!mesh.is_active(int(e))) continue;
    if (with_gradient) {
      derivs[e] = material::effective_C_with_derivatives(material_, rho, fields.v[e], p);
      element_c[e] = derivs[e].c;
    } else {
      element_c[e] = material::effective_C(material_, rho, fields.v[e], p);
    }
  }
  out.u = solver_.solve(element_c);
  out.J = fem::compliance(solver_.force(), out.u);
  out.g_v = volume_constraint(fields.v, mesh.active, spec_.vf_star);
  out.L = loss(out.J, out.g_v, t, J0);
  out.fields = fields;
  if (!with_gradient) return out;

  const auto seeds = fem::adjoint_element_seeds(mesh, out.u, solver_.templates());
  const double dvol = log_barrier_derivative(out.g_v, t) / (spec_.vf_star * double(mesh.active_count()));
  std::vector<double> d_rho(ne * m, 0.0);
  std::vector<double> d_v(ne, 0.0);
  for (std::size_t e = 0; e < ne; ++e) {
    if (!mesh.is_active(int(e))) continue;
    std::array<double, 6> s = seeds[e];
    for (double& x : s) x /= J0;
    auto contract = [&s](const Cmat& dc) {
      const auto w = dc.template_weights();
      double r = 0.0;
      for (int i = 0; i < 6; ++i) r += s[std::size_t(i)] * w[std::size_t(i)];
      return r;
    };
    for (std::size_t k = 0; k < m; ++k) d_rho[e * m + k] = contract(derivs[e].d_rho[k]);
    d_v[e] = contract(derivs[e].d_v) + dvol;
  }
  out.grad = field_.backward(params, field_eval, d_rho, d_v);
  return out;
}

std::vector<double> total_gradient(DesignProblem& problem, const field::NetworkParams& params,
                                   double p, double t, double J0) {
  return problem.evaluate(params, p, t, J0, true).grad;
}

bool may_terminate(const IterationRecord& r, const Schedules& s) {
  return r.g_v <= 0.0 && r.p >= 0.5 * s.p_max;
}

bool has_converged(std::span<const IterationRecord> history, int window, double eps_star) {
  const std::size_t w = std::size_t(window);
  if (history.size() < 2 * w) return false;
  double now = 0.0;
  double before = 0.0;
  const std::size_t n = history.size();
  for (std::size_t i = 0; i < w; ++i) {
    now += history[n - 1 - i].L;
    before += history[n - 1 - w - i].L;
  }
  now /= double(w);
  before /= double(w);
  const double scale = std::max(std::abs(before), 1e-12);
  return std::abs(now - before) / scale < eps_star;
}

double mixing_metric(const field::DesignFields& fields, std::span<const std::uint8_t> active) {
  std::size_t considered = 0;
  std::size_t pure = 0;
  for (std::size_t e = 0; e < fields.size(); ++e) {
    if (!active[e] || !(fields.v[e] > 0.1)) continue;
    ++considered;
    const auto rho = fields.rho_at(e);
    if (*std::max_element(rho.begin(), rho.end()) >= 0.9) ++pure;
  }
  return considered == 0 ? 1.0 : double(pure) / double(considered);
}

field::Checkpoint make_checkpoint(const ProblemSpec& spec, const field::NetworkParams& params,
                                  int iteration) {
  field::Checkpoint ck;
  ck.params = params;
  ck.nx = spec.mesh.nx;
  ck.ny = spec.mesh.ny;
  ck.h = spec.mesh.h;
  ck.mode = spec.symmetry;
  ck.mask_volume = spec.symmetry_masks_volume;
  ck.input_scale = spec.input_scale;
  ck.subset = spec.subset;
  ck.iteration = iteration;
  return ck;
}

void write_history_header(std::ostream& out) { out << "iteration,J,g_v,L,p,t,max_partition_error\n"; }

void write_history_row(std::ostream& out, const IterationRecord& r) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17) << r.k << ',' << r.J << ',' << r.g_v << ',' << r.L << ',' << r.p << ','
      << r.t << ',' << r.max_partition_error << '\n';
  out.flags(flags);
  out.precision(precision);
}

OptimizationResult run_optimization(const ProblemSpec& spec, const homog::MaterialDB& db,
                                    const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  DesignProblem problem(spec, db);
  const Schedules& s = spec.schedules;
  OptimizationResult result;
  result.params = problem.initial_params();
  AdamState adam;

  std::ofstream history_file;
  if (options.history_path) {
    history_file.open(*options.history_path);
    if (!history_file) throw Error("cannot write history file " + options.history_path->string());
    write_history_header(history_file);
  }
  auto save_ck = [&](int k) {
    if (options.checkpoint_path)
      field::save_checkpoint(make_checkpoint(spec, result.params, k), *options.checkpoint_path);
  };

  double J0 = 1.0;
  for (int k = 0; k < s.k_max; ++k) {
    const double p = s.p_at(k);
    const double t = s.t_at(k);
    Evaluation eval;
    try {
      if (k == 0) {
        // The first design's compliance normalizes J for the whole run.
        J0 = problem.evaluate(result.params, p, t, 1.0, false).J;
        if (!(J0 > 0.0) || !std::isfinite(J0))
          throw NumericError("initial compliance must be positive and finite, got " + std::to_string(J0));
        result.J0 = J0;
      }
      eval = problem.evaluate(result.params, p, t, J0, true);
    } catch (const SingularSystemError&) {
      save_ck(k);
      throw;
    }
    const bool finite = std::isfinite(eval.L) &&
                        std::all_of(eval.grad.begin(), eval.grad.end(), [](double g) { return std::isfinite(g); });
    if (!finite) {
      save_ck(k);
      std::ostringstream msg;
      msg << "non-finite loss or gradient at iteration " << k << " (J = " << eval.J << ", g_v = " << eval.g_v
          << ", L = " << eval.L << ", p = " << p << ", t = " << t << ")";
      throw NumericError(msg.str());
    }
    const IterationRecord rec{k, eval.J, eval.g_v, eval.L, p, t, eval.max_partition_error};
    result.history.push_back(rec);
    if (history_file) {
      write_history_row(history_file, rec);
      history_file.flush();
    }
    if (options.on_iteration) options.on_iteration(rec);
    result.fields = std::move(eval.fields);

    result.converged = may_terminate(rec, s) && has_converged(result.history, s.window, s.eps_star);
    if (result.converged || k + 1 == s.k_max) break;
    adam_step(adam, result.params.values, eval.grad, s.lr, s.clip);
    if (options.checkpoint_every > 0 && (k + 1) % options.checkpoint_every == 0) save_ck(k + 1);
  }
  save_ck(result.history.back().k);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace gmto::opt
