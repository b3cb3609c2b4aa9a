#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lowrank/factorspace.hpp"
#include "lowrank/link.hpp"
#include "lowrank/models.hpp"
#include "lowrank/solver.hpp"
#include "lowrank/synthgen.hpp"

namespace lowrank {

enum class InitKind { ProjectedGd, OneStep, Random };
std::string to_string(InitKind kind);
/// Accepts pgd, onestep, random.
InitKind parse_init_kind(const std::string& name);

struct ExperimentConfig {
  ModelKind model = ModelKind::Regression;
  Index d1 = 100;
  Index d2 = 100;
  Index r = 5;
  /// Regression: number of measurements. Completion / one-bit: expected
  /// number of observed entries, converted to p = n / (d1 d2).
  std::optional<Index> n;
  /// Completion / one-bit sampling probability; ignored when n is set.
  std::optional<double> p;
  NoiseSpec noise;
  LinkKind link = LinkKind::Probit;
  double link_scale = 0.18;
  double alpha = 1.0;
  /// Empty picks gaussian for regression / completion and uniform for one-bit.
  std::optional<FactorScheme> scheme;
  SamplingMode sampling = SamplingMode::Bernoulli;
  InitKind init = InitKind::ProjectedGd;
  /// Random init scale; empty derives it from the top singular value of tau grad L(0).
  std::optional<double> random_scale;
  SolverConfig solver;
  InitConfig init_cfg;
  int trials = 30;
  std::uint64_t base_seed = 1;
  double success_threshold = 1e-3;
  /// Compare the threshold against the squared relative error (default) or its square root.
  bool squared_threshold = true;
  std::string output_path;
  /// When false the wall-time column is left empty, making output byte-reproducible.
  bool include_wall_time = true;
  int jobs = 1;

  void validate() const;
  FactorScheme resolved_scheme() const;
  LinkFunction link_function() const;
  /// Sampling probability for completion / one-bit.
  double sample_probability() const;
  /// n for regression, expected |Omega| otherwise.
  double sample_budget() const;
  /// sample_budget / (r max(d1, d2))
  double normalized_budget() const;
};

/// Applies one key=value setting. Keys match the long CLI flag names.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
/// Applies settings in map order; throws ConfigError naming the bad key.
void apply_settings(ExperimentConfig& config, const std::map<std::string, std::string>& settings);
/// Reads a flat key=value file. Blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> read_config_file(const std::string& path);

struct TrialRow {
  int trial_id = 0;
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::Regression;
  Index d1 = 0;
  Index d2 = 0;
  Index r = 0;
  /// n for regression, |Omega| otherwise.
  Index n_obs = 0;
  /// Realized |Omega| / (d1 d2); empty for regression.
  std::optional<double> p;
  double noise_sigma = 0.0;
  InitKind init = InitKind::ProjectedGd;
  int iterations = 0;
  double sq_rel_error = 0.0;
  double normalized_error = 0.0;
  bool success = false;
  std::optional<double> wall_time_s;
  RunStatus status = RunStatus::MaxIters;
};

const std::vector<std::string>& trial_csv_header();
std::vector<std::string> trial_csv_fields(const TrialRow& row);
/// success recomputed from the error column under the config's threshold rule.
bool meets_threshold(double sq_rel_error, const ExperimentConfig& config);

struct TrialDetail {
  TrialRow row;
  GroundTruth truth;
  FactorPair z0;
  /// d(Z0, Z*)
  double init_distance = 0.0;
  std::optional<double> projection_radius;
  RunResult run;
};

/// Runs one trial with seed base_seed + trial_id.
TrialDetail run_trial(const ExperimentConfig& config, int trial_id);

struct ExperimentSummary {
  int trials = 0;
  int successes = 0;
  double success_probability = 0.0;
  double median_sq_rel_error = 0.0;
  double mean_sq_rel_error = 0.0;
  double mean_normalized_error = 0.0;
  double mean_observed_fraction = 0.0;
};

ExperimentSummary summarize(const std::vector<TrialRow>& rows);

/// Runs the battery. Rows are appended to config.output_path (when set) as
/// trials finish; with jobs > 1 the file is rewritten in trial order at the
/// end. A summary line goes to `log` when it is non-null.
std::vector<TrialRow> run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

enum class SweepAxis { N, P, Dims };
std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepRow {
  double axis_value = 0.0;
  /// n / (r d') for the n and dims axes, mean |Omega| / (d1 d2) for p.
  double normalized_axis = 0.0;
  double success_prob = 0.0;
  double mean_sq_rel_error = 0.0;
  double mean_normalized_error = 0.0;
  int trials = 0;
};

const std::vector<std::string>& sweep_csv_header();
std::vector<std::string> sweep_csv_fields(const SweepRow& row);

/// Config for one sweep point; for the n axis, `normalized` reads the value as a multiple of r d'.
ExperimentConfig sweep_point(const ExperimentConfig& base, SweepAxis axis, double value,
                             bool normalized = false);

/// One battery per value; the aggregated CSV goes to base.output_path, a row per value.
std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            const std::vector<double>& values, bool normalized = false,
                            std::ostream* log = nullptr);

struct TracePoint {
  InitKind init = InitKind::ProjectedGd;
  int iter = 0;
  double objective = 0.0;
  double log10_sq_rel_error = 0.0;
  double distance = 0.0;
  double balance_penalty = 0.0;
};

const std::vector<std::string>& trace_csv_header();

/// Trial 0 of the config run once per init kind on the same instance; the
/// per-iteration CSV goes to config.output_path when set.
std::vector<TracePoint> trace_export(const ExperimentConfig& config);

}  // namespace lowrank
