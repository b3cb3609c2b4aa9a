#include "lowrank/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "lowrank/csv.hpp"

namespace lowrank {

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::ProjectedGd:
      return "pgd";
    case InitKind::OneStep:
      return "onestep";
    case InitKind::Random:
      return "random";
  }
  return "unknown";
}

InitKind parse_init_kind(const std::string& name) {
  if (name == "pgd") return InitKind::ProjectedGd;
  if (name == "onestep") return InitKind::OneStep;
  if (name == "random") return InitKind::Random;
  throw ConfigError("unknown init '" + name + "' (expected pgd, onestep or random)");
}

void ExperimentConfig::validate() const {
  if (d1 < 1 || d2 < 1) throw ConfigError("dimensions must be positive");
  if (r < 1 || r > std::min(d1, d2)) {
    throw ConfigError("rank must lie in [1, min(d1, d2)], got " + std::to_string(r));
  }
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (!(success_threshold > 0.0)) throw ConfigError("threshold must be positive");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (n && *n < 1) throw ConfigError("n must be positive");
  if (model == ModelKind::Regression) {
    if (!n) throw ConfigError("regression needs n");
  } else {
    if (!n && !p) throw ConfigError(to_string(model) + " needs n or p");
    const double prob = sample_probability();
    if (!(prob > 0.0 && prob <= 1.0)) {
      throw ConfigError("sampling probability must lie in (0, 1], got " + format_number(prob));
    }
  }
  if (model == ModelKind::OneBit) {
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (!(link_scale > 0.0)) throw ConfigError("link scale must be positive");
  }
  if (random_scale && !(*random_scale > 0.0)) throw ConfigError("random init scale must be positive");
  solver.validate();
  InitConfig ic = init_cfg;
  ic.rank = r;
  ic.validate();
}

FactorScheme ExperimentConfig::resolved_scheme() const {
  if (scheme) return *scheme;
  return model == ModelKind::OneBit ? FactorScheme::UniformScaled : FactorScheme::Gaussian;
}

LinkFunction ExperimentConfig::link_function() const {
  return link == LinkKind::Logistic ? LinkFunction::logistic() : LinkFunction::probit(link_scale);
}

double ExperimentConfig::sample_probability() const {
  const double cells = static_cast<double>(d1) * static_cast<double>(d2);
  if (n) return static_cast<double>(*n) / cells;
  return p ? *p : 0.0;
}

double ExperimentConfig::sample_budget() const {
  if (model == ModelKind::Regression || n) return n ? static_cast<double>(*n) : 0.0;
  return sample_probability() * static_cast<double>(d1) * static_cast<double>(d2);
}

double ExperimentConfig::normalized_budget() const {
  return sample_budget() / (static_cast<double>(r) * static_cast<double>(std::max(d1, d2)));
}

namespace {

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<T>(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + value + "' is not an integer");
  }
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + value + "' is not a nonnegative integer");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + value + "' is not a number");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": '" + value + "' is not a boolean");
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "model") {
    c.model = parse_model_kind(value);
  } else if (key == "d1") {
    c.d1 = parse_integer<Index>(key, value);
  } else if (key == "d2") {
    c.d2 = parse_integer<Index>(key, value);
  } else if (key == "rank") {
    c.r = parse_integer<Index>(key, value);
  } else if (key == "n") {
    c.n = parse_integer<Index>(key, value);
  } else if (key == "p") {
    c.p = parse_real(key, value);
  } else if (key == "noise") {
    c.noise = NoiseSpec::parse(value);
  } else if (key == "link") {
    c.link = parse_link_kind(value);
  } else if (key == "link-scale") {
    c.link_scale = parse_real(key, value);
  } else if (key == "alpha") {
    c.alpha = parse_real(key, value);
  } else if (key == "scheme") {
    c.scheme = parse_factor_scheme(value);
  } else if (key == "sampling") {
    c.sampling = parse_sampling_mode(value);
  } else if (key == "init") {
    c.init = parse_init_kind(value);
  } else if (key == "random-scale") {
    if (value == "auto") {
      c.random_scale.reset();
    } else {
      c.random_scale = parse_real(key, value);
    }
  } else if (key == "trials") {
    c.trials = parse_integer<int>(key, value);
  } else if (key == "seed") {
    c.base_seed = parse_seed(key, value);
  } else if (key == "eta") {
    if (value == "auto") {
      c.solver.eta.reset();
    } else {
      c.solver.eta = parse_real(key, value);
    }
  } else if (key == "eta-coeff") {
    c.solver.auto_eta_coeff = parse_real(key, value);
  } else if (key == "tau") {
    if (value == "auto") {
      c.init_cfg.tau.reset();
    } else {
      c.init_cfg.tau = parse_real(key, value);
    }
  } else if (key == "init-iters") {
    c.init_cfg.iters = parse_integer<int>(key, value);
  } else if (key == "max-iters") {
    c.solver.max_iters = parse_integer<int>(key, value);
  } else if (key == "tol") {
    c.solver.tol_rel_change = parse_real(key, value);
  } else if (key == "radius") {
    if (value == "auto") {
      c.solver.projection_radius.reset();
    } else {
      c.solver.projection_radius = parse_real(key, value);
    }
  } else if (key == "threshold") {
    c.success_threshold = parse_real(key, value);
  } else if (key == "unsquared") {
    c.squared_threshold = !parse_bool(key, value);
  } else if (key == "out") {
    c.output_path = value;
  } else if (key == "wall-time") {
    c.include_wall_time = parse_bool(key, value);
  } else if (key == "jobs") {
    c.jobs = parse_integer<int>(key, value);
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

void apply_settings(ExperimentConfig& config, const std::map<std::string, std::string>& settings) {
  for (const auto& [key, value] : settings) apply_setting(config, key, value);
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

const std::vector<std::string>& trial_csv_header() {
  static const std::vector<std::string> header = {
      "trial_id", "seed",       "model",        "d1",           "d2",
      "r",        "n_obs",      "p",            "noise_sigma",  "init",
      "iterations", "sq_rel_error", "normalized_error", "success", "wall_time_s",
      "status"};
  return header;
}

std::vector<std::string> trial_csv_fields(const TrialRow& row) {
  return {std::to_string(row.trial_id),
          std::to_string(row.seed),
          to_string(row.model),
          std::to_string(row.d1),
          std::to_string(row.d2),
          std::to_string(row.r),
          std::to_string(row.n_obs),
          row.p ? format_number(*row.p) : std::string(),
          format_number(row.noise_sigma),
          to_string(row.init),
          std::to_string(row.iterations),
          format_number(row.sq_rel_error),
          format_number(row.normalized_error),
          row.success ? "1" : "0",
          row.wall_time_s ? format_number(*row.wall_time_s) : std::string(),
          to_string(row.status)};
}

bool meets_threshold(double sq_rel_error, const ExperimentConfig& config) {
  if (!std::isfinite(sq_rel_error)) return false;
  const double err = config.squared_threshold ? sq_rel_error : std::sqrt(sq_rel_error);
  return err < config.success_threshold;
}

namespace {

Observations generate(const ExperimentConfig& c, const GroundTruth& truth, const RngStream& rng) {
  switch (c.model) {
    case ModelKind::Regression:
      return gen_regression(truth, *c.n, c.noise, rng);
    case ModelKind::Completion:
      return gen_completion(truth, c.sample_probability(), c.noise, rng, c.sampling);
    case ModelKind::OneBit:
      return gen_onebit(truth, c.sample_probability(), c.link_function(), rng, c.sampling);
  }
  throw ConfigError("unknown model");
}

// Radius that keeps Z* feasible: the entrywise bound alone can cut into the
// rows of Z* when factor rows are uneven.
std::optional<double> harness_radius(const ExperimentConfig& c, const GroundTruth& truth) {
  if (c.solver.projection_radius) return c.solver.projection_radius;
  if (c.model == ModelKind::Regression) return std::nullopt;
  return std::max({std::sqrt(truth.x_star.cwiseAbs().maxCoeff()), max_row_norm(truth.z_star.u),
                   max_row_norm(truth.z_star.v)});
}

double resolved_tau(const ExperimentConfig& c, const Observations& obs) {
  return c.init_cfg.tau ? *c.init_cfg.tau : 1.0 / smoothness_estimate(obs);
}

FactorPair make_initial(const ExperimentConfig& c, const Observations& obs, const RngStream& rng) {
  switch (c.init) {
    case InitKind::ProjectedGd: {
      InitConfig ic = c.init_cfg;
      ic.rank = c.r;
      return initialize(obs, ic).z;
    }
    case InitKind::OneStep:
      return one_step_svd_init(obs, c.r, resolved_tau(c, obs));
    case InitKind::Random: {
      double scale = 0.0;
      if (c.random_scale) {
        scale = *c.random_scale;
      } else {
        const Matrix g = resolved_tau(c, obs) * gradient(Matrix::Zero(c.d1, c.d2), obs);
        const double top = rank_r_truncate(g, 1).sigma(0);
        const double rr = static_cast<double>(c.r);
        scale = std::sqrt(rr) * std::sqrt(2.0 * top) /
                (std::sqrt(static_cast<double>(c.d1 + c.d2)) + std::sqrt(rr));
        if (!(scale > 0.0)) scale = 1.0;
      }
      return random_init(c.d1, c.d2, c.r, scale, rng);
    }
  }
  throw ConfigError("unknown init");
}

}  // namespace

TrialDetail run_trial(const ExperimentConfig& config, int trial_id) {
  const auto start = std::chrono::steady_clock::now();
  TrialDetail out;
  const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(trial_id);
  const RngStream rng{seed, 0};

  out.truth = gen_ground_truth(config.d1, config.d2, config.r, config.resolved_scheme(), rng,
                               config.alpha);
  const Observations obs = generate(config, out.truth, rng);
  out.z0 = make_initial(config, obs, rng);
  out.init_distance = procrustes_distance(out.z0, out.truth.z_star);
  out.projection_radius = harness_radius(config, out.truth);

  SolverConfig sc = config.solver;
  sc.projection_radius = out.projection_radius;
  out.run = run_gd(out.z0, obs, sc, &out.truth);

  TrialRow& row = out.row;
  row.trial_id = trial_id;
  row.seed = seed;
  row.model = config.model;
  row.d1 = config.d1;
  row.d2 = config.d2;
  row.r = config.r;
  row.n_obs = observation_count(obs);
  if (config.model != ModelKind::Regression) {
    row.p = static_cast<double>(row.n_obs) /
            (static_cast<double>(config.d1) * static_cast<double>(config.d2));
  }
  row.noise_sigma = config.model == ModelKind::OneBit ? 0.0 : config.noise.sigma(out.truth.x_star);
  row.init = config.init;
  row.iterations = out.run.trace.iterations;
  const Matrix diff = out.run.z.product() - out.truth.x_star;
  const double sq = diff.squaredNorm();
  row.sq_rel_error = sq / out.truth.x_star.squaredNorm();
  row.normalized_error = sq / (static_cast<double>(config.d1) * static_cast<double>(config.d2));
  row.success = meets_threshold(row.sq_rel_error, config);
  row.status = out.run.trace.status;
  if (config.include_wall_time) {
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return out;
}

ExperimentSummary summarize(const std::vector<TrialRow>& rows) {
  ExperimentSummary s;
  s.trials = static_cast<int>(rows.size());
  if (rows.empty()) return s;
  std::vector<double> errs;
  double fraction = 0.0;
  for (const auto& r : rows) {
    s.successes += r.success ? 1 : 0;
    errs.push_back(r.sq_rel_error);
    s.mean_sq_rel_error += r.sq_rel_error;
    s.mean_normalized_error += r.normalized_error;
    fraction += r.p ? *r.p : 0.0;
  }
  const double n = static_cast<double>(rows.size());
  s.success_probability = s.successes / n;
  s.mean_sq_rel_error /= n;
  s.mean_normalized_error /= n;
  s.mean_observed_fraction = fraction / n;
  std::sort(errs.begin(), errs.end());
  const std::size_t mid = errs.size() / 2;
  s.median_sq_rel_error = errs.size() % 2 ? errs[mid] : 0.5 * (errs[mid - 1] + errs[mid]);
  return s;
}

namespace {

class TrialSink {
 public:
  explicit TrialSink(const std::string& path) : path_(path) {
    if (path_.empty()) return;
    out_.open(path_, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out_) throw IoError("cannot open output file '" + path_ + "'");
    CsvWriter(out_).row(trial_csv_header());
    flush();
  }

  void append(const TrialRow& row) {
    if (path_.empty()) return;
    CsvWriter(out_).row(trial_csv_fields(row));
    flush();
  }

  void rewrite(const std::vector<TrialRow>& rows) {
    if (path_.empty()) return;
    out_.close();
    out_.open(path_, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out_) throw IoError("cannot rewrite output file '" + path_ + "'");
    CsvWriter csv(out_);
    csv.row(trial_csv_header());
    for (const auto& r : rows) csv.row(trial_csv_fields(r));
    flush();
  }

 private:
  void flush() {
    out_.flush();
    if (!out_) throw IoError("write to '" + path_ + "' failed");
  }

  std::string path_;
  std::ofstream out_;
};

}  // namespace

std::vector<TrialRow> run_experiment(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  TrialSink sink(config.output_path);
  std::vector<TrialRow> rows(static_cast<std::size_t>(config.trials));

  if (config.jobs == 1) {
    for (int t = 0; t < config.trials; ++t) {
      rows[t] = run_trial(config, t).row;
      sink.append(rows[t]);
    }
  } else {
    std::atomic<int> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    auto worker = [&]() {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= config.trials) return;
        try {
          TrialRow row = run_trial(config, t).row;
          std::lock_guard<std::mutex> lock(mu);
          rows[t] = row;
          sink.append(row);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
          next.store(config.trials);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const int n = std::min(config.jobs, config.trials);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    sink.rewrite(rows);
  }

  if (log) {
    const ExperimentSummary s = summarize(rows);
    *log << "model=" << to_string(config.model) << " d1=" << config.d1 << " d2=" << config.d2
         << " r=" << config.r << " budget=" << format_number(config.sample_budget())
         << " init=" << to_string(config.init) << " trials=" << s.trials
         << " successes=" << s.successes
         << " success_prob=" << format_number(s.success_probability)
         << " median_sq_rel_error=" << format_number(s.median_sq_rel_error) << '\n';
  }
  return rows;
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::N:
      return "n";
    case SweepAxis::P:
      return "p";
    case SweepAxis::Dims:
      return "dims";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "n") return SweepAxis::N;
  if (name == "p") return SweepAxis::P;
  if (name == "dims") return SweepAxis::Dims;
  throw ConfigError("unknown sweep axis '" + name + "' (expected n, p or dims)");
}

const std::vector<std::string>& sweep_csv_header() {
  static const std::vector<std::string> header = {"axis_value",        "normalized_axis",
                                                  "success_prob",      "mean_sq_rel_error",
                                                  "mean_normalized_error", "trials"};
  return header;
}

std::vector<std::string> sweep_csv_fields(const SweepRow& row) {
  return {format_number(row.axis_value),        format_number(row.normalized_axis),
          format_number(row.success_prob),      format_number(row.mean_sq_rel_error),
          format_number(row.mean_normalized_error), std::to_string(row.trials)};
}

ExperimentConfig sweep_point(const ExperimentConfig& base, SweepAxis axis, double value,
                             bool normalized) {
  ExperimentConfig c = base;
  c.output_path.clear();
  switch (axis) {
    case SweepAxis::N: {
      const double scale =
          normalized ? static_cast<double>(c.r) * static_cast<double>(std::max(c.d1, c.d2)) : 1.0;
      c.n = static_cast<Index>(std::llround(value * scale));
      c.p.reset();
      break;
    }
    case SweepAxis::P:
      c.p = value;
      c.n.reset();
      break;
    case SweepAxis::Dims: {
      // Keep the normalized budget fixed while the dimensions move.
      const double ratio = base.normalized_budget();
      const double frac = base.model == ModelKind::Regression ? 0.0 : base.sample_probability();
      c.d1 = c.d2 = static_cast<Index>(std::llround(value));
      if (base.n) {
        c.n = static_cast<Index>(std::llround(ratio * static_cast<double>(c.r) *
                                              static_cast<double>(c.d1)));
      } else {
        c.p = frac;
      }
      break;
    }
  }
  return c;
}

std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            const std::vector<double>& values, bool normalized,
                            std::ostream* log) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (!std::is_sorted(values.begin(), values.end())) {
    throw ConfigError("sweep values must be sorted ascending");
  }
  for (double v : values) sweep_point(base, axis, v, normalized).validate();

  std::ofstream out;
  if (!base.output_path.empty()) {
    out.open(base.output_path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open output file '" + base.output_path + "'");
    CsvWriter(out).row(sweep_csv_header());
    out.flush();
  }

  std::vector<SweepRow> rows;
  for (double v : values) {
    const ExperimentConfig c = sweep_point(base, axis, v, normalized);
    const ExperimentSummary s = summarize(run_experiment(c, log));
    SweepRow row;
    row.axis_value = v;
    row.normalized_axis = axis == SweepAxis::P ? s.mean_observed_fraction : c.normalized_budget();
    row.success_prob = s.success_probability;
    row.mean_sq_rel_error = s.mean_sq_rel_error;
    row.mean_normalized_error = s.mean_normalized_error;
    row.trials = s.trials;
    rows.push_back(row);
    if (out.is_open()) {
      CsvWriter(out).row(sweep_csv_fields(row));
      out.flush();
      if (!out) throw IoError("write to '" + base.output_path + "' failed");
    }
  }
  return rows;
}

const std::vector<std::string>& trace_csv_header() {
  static const std::vector<std::string> header = {
      "init", "iter", "objective", "log10_sq_rel_error", "distance", "balance_penalty"};
  return header;
}

std::vector<TracePoint> trace_export(const ExperimentConfig& config) {
  config.validate();
  std::vector<TracePoint> points;
  for (InitKind kind : {InitKind::ProjectedGd, InitKind::OneStep, InitKind::Random}) {
    ExperimentConfig c = config;
    c.init = kind;
    const TrialDetail d = run_trial(c, 0);
    for (const auto& rec : d.run.trace.records) {
      TracePoint pt;
      pt.init = kind;
      pt.iter = rec.iter;
      pt.objective = rec.objective;
      pt.log10_sq_rel_error = std::log10(rec.sq_rel_error.value_or(0.0));
      pt.distance = rec.distance.value_or(0.0);
      pt.balance_penalty = rec.balance;
      points.push_back(pt);
    }
  }
  if (!config.output_path.empty()) {
    std::ofstream out(config.output_path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open output file '" + config.output_path + "'");
    CsvWriter csv(out);
    csv.row(trace_csv_header());
    for (const auto& pt : points) {
      csv.row({to_string(pt.init), std::to_string(pt.iter), format_number(pt.objective),
               format_number(pt.log10_sq_rel_error), format_number(pt.distance),
               format_number(pt.balance_penalty)});
    }
    out.flush();
    if (!out) throw IoError("write to '" + config.output_path + "' failed");
  }
  return points;
}

}  // namespace lowrank
