#include "lowrank/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace lowrank {

void SolverConfig::validate() const {
  if (eta && !(*eta >= 0.0 && std::isfinite(*eta))) {
    throw ConfigError("solver: explicit step size must be finite and nonnegative");
  }
  if (!(auto_eta_coeff > 0.0)) throw ConfigError("solver: auto step coefficient must be positive");
  if (max_iters < 1) throw ConfigError("solver: max_iters must be at least 1");
  if (!(tol_rel_change >= 0.0)) throw ConfigError("solver: tolerance must be nonnegative");
  if (projection_radius && !(*projection_radius > 0.0)) {
    throw ConfigError("solver: projection radius must be positive");
  }
  if (!(divergence_factor > 1.0)) throw ConfigError("solver: divergence factor must exceed 1");
}

void InitConfig::validate() const {
  if (tau && !(*tau > 0.0 && std::isfinite(*tau))) {
    throw ConfigError("init: explicit step size must be positive and finite");
  }
  if (iters < 1) throw ConfigError("init: need at least one iteration");
  if (rank < 1) throw ConfigError("init: rank must be positive");
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::MaxIters:
      return "max_iters";
    case RunStatus::Converged:
      return "converged";
    case RunStatus::Diverged:
      return "diverged";
    case RunStatus::NonFinite:
      return "nonfinite";
  }
  return "unknown";
}

void write_trace_log(std::ostream& os, const RunTrace& trace) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(17);
  for (const auto& r : trace.records) {
    os << "iter=" << r.iter << " objective=" << r.objective << " balance=" << r.balance;
    if (r.rel_change) os << " rel_change=" << *r.rel_change;
    if (r.distance) os << " distance=" << *r.distance;
    if (r.sq_error) os << " sq_error=" << *r.sq_error;
    if (r.sq_rel_error) os << " sq_rel_error=" << *r.sq_rel_error;
    if (r.normalized_error) os << " normalized_error=" << *r.normalized_error;
    os << '\n';
  }
  os << "status=" << to_string(trace.status) << " iterations=" << trace.iterations
     << " eta=" << trace.eta << '\n';
  os.flags(flags);
  os.precision(precision);
}

double regularized_objective(const FactorPair& z, const Observations& obs) {
  return loss(z.product(), obs) + balance_penalty(z);
}

FactorPair regularized_gradient(const FactorPair& z, const Observations& obs) {
  return factored_gradient(gradient(z.product(), obs), z) + balance_gradient(z);
}

namespace {

void project(FactorPair& z, std::optional<double> gamma) {
  if (!gamma) return;
  project_row_norm_inplace(z.u, *gamma);
  project_row_norm_inplace(z.v, *gamma);
}

void check_obs_shape(const FactorPair& z, const Observations& obs, const char* what) {
  if (z.d1() != rows_of(obs) || z.d2() != cols_of(obs)) {
    throw DimensionError(std::string(what) + ": factors give " + shape_str(z.d1(), z.d2()) +
                         " but observations are " + shape_str(rows_of(obs), cols_of(obs)));
  }
  if (z.u.cols() != z.v.cols()) {
    throw DimensionError(std::string(what) + ": U is " + shape_str(z.u) + " but V is " +
                         shape_str(z.v));
  }
}

// Step from Z along a precomputed model gradient G at X = U V^T.
FactorPair step_from(const FactorPair& z, const Matrix& model_gradient, double eta,
                     std::optional<double> gamma, int iter) {
  FactorPair direction = factored_gradient(model_gradient, z) + balance_gradient(z);
  if (!direction.all_finite()) {
    throw NumericError("gd_step: non-finite gradient at iteration " + std::to_string(iter));
  }
  FactorPair next = z;
  next.u.noalias() -= eta * direction.u;
  next.v.noalias() -= eta * direction.v;
  project(next, gamma);
  return next;
}

void fill_truth_metrics(TraceRecord& rec, const FactorPair& z, const Matrix& x,
                        const GroundTruth& truth) {
  rec.distance = procrustes_distance(z, truth.z_star);
  const double sq = (x - truth.x_star).squaredNorm();
  rec.sq_error = sq;
  rec.sq_rel_error = sq / truth.x_star.squaredNorm();
  rec.normalized_error = sq / (static_cast<double>(x.rows()) * static_cast<double>(x.cols()));
}

}  // namespace

FactorPair gd_step(const FactorPair& z, const Observations& obs, double eta,
                   std::optional<double> gamma) {
  check_obs_shape(z, obs, "gd_step");
  if (!(eta >= 0.0)) throw DomainError("gd_step: step size must be nonnegative");
  return step_from(z, gradient(z.product(), obs), eta, gamma, 0);
}

RunResult run_gd(const FactorPair& z0, const Observations& obs, const SolverConfig& config,
                 const GroundTruth* truth) {
  config.validate();
  check_obs_shape(z0, obs, "run_gd");
  if (truth && !truth->z_star.same_shape(z0)) {
    throw DimensionError("run_gd: ground truth shape does not match the initial factors");
  }
  const bool track = truth != nullptr && config.record_ground_truth_error;

  RunResult result;
  RunTrace& trace = result.trace;
  FactorPair z = z0;
  project(z, config.projection_radius);
  if (!z.all_finite()) throw NumericError("run_gd: initial factors are not finite");

  if (config.eta) {
    trace.eta = *config.eta;
  } else {
    const double norm = z.spectral_norm();
    if (!(norm > 0.0)) throw DomainError("run_gd: automatic step size needs a nonzero Z0");
    trace.eta = config.auto_eta_coeff /
                (std::max(1.0, smoothness_estimate(obs)) * norm * norm);
  }

  Matrix x = z.product();
  LossAndGradient eval = evaluate(x, obs);
  const double initial_objective = eval.loss + balance_penalty(z);
  if (!std::isfinite(initial_objective)) {
    trace.status = RunStatus::NonFinite;
    trace.message = "objective is not finite at the initial point";
    result.z = std::move(z);
    return result;
  }

  auto record = [&](int iter, double objective, const FactorPair& zi, const Matrix& xi,
                    std::optional<double> rel) {
    TraceRecord rec;
    rec.iter = iter;
    rec.objective = objective;
    rec.balance = balance_penalty(zi);
    rec.rel_change = rel;
    if (track) fill_truth_metrics(rec, zi, xi, *truth);
    trace.records.push_back(rec);
  };
  record(0, initial_objective, z, x, std::nullopt);

  trace.status = RunStatus::MaxIters;
  for (int t = 0; t < config.max_iters; ++t) {
    FactorPair next;
    try {
      next = step_from(z, eval.gradient, trace.eta, config.projection_radius, t);
    } catch (const NumericError& e) {
      trace.status = RunStatus::NonFinite;
      trace.message = e.what();
      break;
    }
    Matrix x_next = next.product();
    LossAndGradient eval_next = evaluate(x_next, obs);
    const double objective = eval_next.loss + balance_penalty(next);
    if (!std::isfinite(objective) || !next.all_finite()) {
      trace.status = RunStatus::NonFinite;
      trace.message = "objective is not finite at iteration " + std::to_string(t + 1);
      break;
    }

    const double base = x.norm();
    const double delta = (x_next - x).norm();
    const double rel = base > 0.0 ? delta / base
                                  : (delta > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);

    z = std::move(next);
    x = std::move(x_next);
    eval = std::move(eval_next);
    trace.iterations = t + 1;
    record(t + 1, objective, z, x, rel);

    if (initial_objective > 0.0 && objective > config.divergence_factor * initial_objective) {
      trace.status = RunStatus::Diverged;
      trace.message = "objective grew past the divergence guard at iteration " +
                      std::to_string(t + 1);
      break;
    }
    if (rel < config.tol_rel_change) {
      trace.status = RunStatus::Converged;
      break;
    }
  }

  result.z = std::move(z);
  return result;
}

InitResult initialize(const Observations& obs, const InitConfig& init) {
  init.validate();
  const Index d1 = rows_of(obs);
  const Index d2 = cols_of(obs);
  if (init.rank > std::min(d1, d2)) {
    throw DomainError("initialize: rank " + std::to_string(init.rank) + " exceeds min(d1, d2) for " +
                      shape_str(d1, d2));
  }

  InitResult out;
  InitDiagnostics& diag = out.diagnostics;
  diag.tau = init.tau ? *init.tau : 1.0 / smoothness_estimate(obs);
  diag.iters = init.iters;

  Matrix x = Matrix::Zero(d1, d2);
  TruncatedSvd svd;
  for (int s = 0; s < init.iters; ++s) {
    const Matrix g = gradient(x, obs);
    if (!g.allFinite()) {
      throw NumericError("initialize: non-finite gradient at step " + std::to_string(s + 1));
    }
    const Matrix target = x - diag.tau * g;
    if (s + 1 == init.iters) {
      const Index k = std::min(init.rank + 1, std::min(d1, d2));
      diag.spectrum = rank_r_truncate(target, k).sigma;
    }
    svd = rank_r_truncate(target, init.rank);
    Matrix next = svd.reconstruct();
    diag.last_change = (next - x).norm();
    x = std::move(next);
  }

  out.z = balanced_split(svd);
  return out;
}

FactorPair one_step_svd_init(const Observations& obs, Index r, double tau) {
  InitConfig cfg;
  cfg.tau = tau;
  cfg.iters = 1;
  cfg.rank = r;
  return initialize(obs, cfg).z;
}

FactorPair random_init(Index d1, Index d2, Index r, double scale, const RngStream& rng) {
  if (!(scale > 0.0)) throw DomainError("random_init: scale must be positive");
  if (d1 < 1 || d2 < 1 || r < 1) throw DomainError("random_init: dimensions must be positive");
  auto engine = rng.engine(substream::kInit);
  std::normal_distribution<double> normal(0.0, scale / std::sqrt(static_cast<double>(r)));
  FactorPair z = FactorPair::zeros(d1, d2, r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < d1; ++i) z.u(i, j) = normal(engine);
    for (Index i = 0; i < d2; ++i) z.v(i, j) = normal(engine);
  }
  return z;
}

FactorPair random_init(Index d1, Index d2, Index r, double scale, std::uint64_t seed) {
  return random_init(d1, d2, r, scale, RngStream{seed, 0});
}

std::optional<double> default_projection_radius(const Observations& obs, double onebit_alpha) {
  if (const auto* c = std::get_if<SampledEntries>(&obs)) {
    double alpha = 0.0;
    for (double v : c->values) alpha = std::max(alpha, std::abs(v));
    if (!(alpha > 0.0)) return std::nullopt;
    return std::sqrt(alpha);
  }
  if (std::holds_alternative<BinaryEntries>(obs)) {
    if (!(onebit_alpha > 0.0)) throw DomainError("projection radius: alpha must be positive");
    return std::sqrt(onebit_alpha);
  }
  return std::nullopt;
}

}  // namespace lowrank
