#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lowrank/factorspace.hpp"
#include "lowrank/models.hpp"
#include "lowrank/rng.hpp"

namespace lowrank {

struct SolverConfig {
  /// Explicit step size; empty selects eta = c' / (max(1, L) ||Z0||_2^2).
  std::optional<double> eta;
  double auto_eta_coeff = 0.25;
  int max_iters = 500;
  /// Stop once ||X^{t+1} - X^t||_F / ||X^t||_F falls below this.
  double tol_rel_change = 1e-9;
  /// Row-norm radius of the feasible sets; empty means unconstrained.
  std::optional<double> projection_radius;
  bool record_ground_truth_error = true;
  /// Abort when the objective exceeds this multiple of its initial value.
  double divergence_factor = 1e6;

  void validate() const;
};

struct InitConfig {
  /// Empty ("auto") selects tau = 1 / smoothness_estimate(obs).
  std::optional<double> tau = 1.0;
  int iters = 3;
  Index rank = 1;

  void validate() const;
};

enum class RunStatus { MaxIters, Converged, Diverged, NonFinite };
std::string to_string(RunStatus status);

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double balance = 0.0;
  /// Empty for the initial record.
  std::optional<double> rel_change;
  // Populated only when ground truth is supplied.
  std::optional<double> distance;
  std::optional<double> sq_error;
  std::optional<double> sq_rel_error;
  std::optional<double> normalized_error;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  RunStatus status = RunStatus::MaxIters;
  double eta = 0.0;
  int iterations = 0;
  /// Set when the run stopped on a numeric problem.
  std::string message;
};

/// One key=value line per record.
void write_trace_log(std::ostream& os, const RunTrace& trace);

struct RunResult {
  FactorPair z;
  RunTrace trace;
};

struct InitDiagnostics {
  double tau = 0.0;
  int iters = 0;
  /// ||X_S - X_{S-1}||_F
  double last_change = 0.0;
  /// Top r+1 singular values (r when r = min(d1, d2)) of the last matrix fed
  /// to the rank-r projection, i.e. before truncation. The gap between the
  /// r-th and (r+1)-th says how well separated the recovered subspace is.
  Vector spectrum;
};

struct InitResult {
  FactorPair z;
  InitDiagnostics diagnostics;
};

/// L(U V^T) + (1/8) ||U^T U - V^T V||_F^2
double regularized_objective(const FactorPair& z, const Observations& obs);

/// Gradient of regularized_objective in (U, V).
FactorPair regularized_gradient(const FactorPair& z, const Observations& obs);

/// One simultaneous projected step on both factors, gradients taken at Z.
/// Throws NumericError on a non-finite gradient.
FactorPair gd_step(const FactorPair& z, const Observations& obs, double eta,
                   std::optional<double> gamma);

/// Projected factored gradient descent from Z0. Z0 is projected on entry.
/// Numeric trouble ends the run early with a status, never with an exception;
/// configuration errors throw.
RunResult run_gd(const FactorPair& z0, const Observations& obs, const SolverConfig& config,
                 const GroundTruth* truth = nullptr);

/// Rank-r projected gradient iterations from X = 0, then a balanced split.
InitResult initialize(const Observations& obs, const InitConfig& init);

/// Balanced split of P_r(-tau grad L(0)).
FactorPair one_step_svd_init(const Observations& obs, Index r, double tau = 1.0);

/// I.i.d. N(0, scale^2 / r) entries in both factors.
FactorPair random_init(Index d1, Index d2, Index r, double scale, const RngStream& rng);
FactorPair random_init(Index d1, Index d2, Index r, double scale, std::uint64_t seed);

/// Default radius for the row-norm constraint of an observation set: none for
/// regression, sqrt(max |Y_jk|) for completion, sqrt(alpha) for one-bit.
std::optional<double> default_projection_radius(const Observations& obs, double onebit_alpha = 1.0);

}  // namespace lowrank
