#include "lowrank/synthgen.hpp"

#include <cmath>
#include <random>

#include "lowrank/csv.hpp"

namespace lowrank {

std::string to_string(FactorScheme scheme) {
  return scheme == FactorScheme::Gaussian ? "gaussian" : "uniform";
}

FactorScheme parse_factor_scheme(const std::string& name) {
  if (name == "gaussian") return FactorScheme::Gaussian;
  if (name == "uniform") return FactorScheme::UniformScaled;
  throw ConfigError("unknown factor scheme '" + name + "' (expected gaussian or uniform)");
}

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::Bernoulli ? "bernoulli" : "replacement";
}

SamplingMode parse_sampling_mode(const std::string& name) {
  if (name == "bernoulli") return SamplingMode::Bernoulli;
  if (name == "replacement") return SamplingMode::WithReplacement;
  throw ConfigError("unknown sampling mode '" + name + "' (expected bernoulli or replacement)");
}

NoiseSpec NoiseSpec::absolute(double sd) {
  if (!(sd >= 0.0) || !std::isfinite(sd)) throw ConfigError("noise: sd must be nonnegative");
  return NoiseSpec{Kind::Gaussian, Rule::Absolute, sd};
}

NoiseSpec NoiseSpec::relative(double factor) {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw ConfigError("noise: relative factor must be nonnegative");
  }
  return NoiseSpec{Kind::Gaussian, Rule::RelativeToMax, factor};
}

namespace {

double parse_number(const std::string& text, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(context + ": '" + text + "' is not a number");
  }
  if (used != text.size()) throw ConfigError(context + ": '" + text + "' is not a number");
  return v;
}

}  // namespace

NoiseSpec NoiseSpec::parse(const std::string& text) {
  if (text == "none") return none();
  if (text.rfind("rel", 0) == 0) return relative(parse_number(text.substr(3), "noise"));
  if (text.rfind("abs:", 0) == 0) return absolute(parse_number(text.substr(4), "noise"));
  throw ConfigError("unknown noise spec '" + text + "' (expected none, rel<f> or abs:<sd>)");
}

std::string NoiseSpec::to_string() const {
  if (kind == Kind::None) return "none";
  return (rule == Rule::RelativeToMax ? "rel" : "abs:") + format_number(value);
}

double NoiseSpec::sigma(const Matrix& x_star) const {
  if (kind == Kind::None) return 0.0;
  if (rule == Rule::Absolute) return value;
  return value * x_star.cwiseAbs().maxCoeff();
}

GroundTruth gen_ground_truth(Index d1, Index d2, Index r, FactorScheme scheme,
                             const RngStream& rng, double alpha, int* attempts) {
  if (d1 < 1 || d2 < 1 || r < 1 || r > std::min(d1, d2)) {
    throw DomainError("gen_ground_truth: need 1 <= r <= min(d1, d2), got r = " +
                      std::to_string(r) + " for " + shape_str(d1, d2));
  }
  if (scheme == FactorScheme::UniformScaled && !(alpha > 0.0)) {
    throw DomainError("gen_ground_truth: alpha must be positive");
  }
  constexpr int kMaxAttempts = 10;
  auto engine = rng.engine(substream::kTruth);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);

  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    Matrix u(d1, r);
    Matrix v(d2, r);
    auto draw = [&]() { return scheme == FactorScheme::Gaussian ? normal(engine) : uniform(engine); };
    for (Index j = 0; j < r; ++j) {
      for (Index i = 0; i < d1; ++i) u(i, j) = draw();
      for (Index i = 0; i < d2; ++i) v(i, j) = draw();
    }
    Matrix x = u * v.transpose();
    if (scheme == FactorScheme::UniformScaled) {
      const double peak = x.cwiseAbs().maxCoeff();
      if (!(peak > 0.0)) continue;
      x *= alpha / peak;
    }
    TruncatedSvd svd = rank_r_truncate(x, r);
    if (!(svd.sigma(r - 1) >= 1e-8 * svd.sigma(0)) || !(svd.sigma(0) > 0.0)) continue;

    if (attempts) *attempts = attempt;
    GroundTruth gt;
    gt.x_star = std::move(x);
    gt.z_star = balanced_split(svd);
    gt.u_bar = std::move(svd.u);
    gt.v_bar = std::move(svd.v);
    gt.sigma = std::move(svd.sigma);
    return gt;
  }
  throw NumericError("gen_ground_truth: no well-conditioned rank-" + std::to_string(r) +
                     " draw in " + std::to_string(kMaxAttempts) + " attempts");
}

LinearMeasurements gen_regression(const GroundTruth& truth, Index n, const NoiseSpec& noise,
                                  const RngStream& rng) {
  if (n < 1) throw DomainError("gen_regression: need at least one measurement");
  LinearMeasurements obs;
  obs.d1 = truth.x_star.rows();
  obs.d2 = truth.x_star.cols();
  obs.noise_level = noise.sigma(truth.x_star);

  auto engine = rng.engine(substream::kSampling);
  std::normal_distribution<double> normal(0.0, 1.0);
  obs.design.resize(obs.d1 * obs.d2, n);
  double* data = obs.design.data();
  for (Index i = 0; i < obs.design.size(); ++i) data[i] = normal(engine);

  obs.y = obs.apply(truth.x_star);
  if (obs.noise_level > 0.0) {
    auto noise_engine = rng.engine(substream::kNoise);
    std::normal_distribution<double> eps(0.0, obs.noise_level);
    for (Index i = 0; i < n; ++i) obs.y(i) += eps(noise_engine);
  }
  return obs;
}

namespace {

struct Support {
  std::vector<Index> rows;
  std::vector<Index> cols;
};

Support sample_support(Index d1, Index d2, double p, SamplingMode mode, const RngStream& rng) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("sampling: p must lie in (0, 1]");
  auto engine = rng.engine(substream::kSampling);
  Support s;
  if (mode == SamplingMode::Bernoulli) {
    std::bernoulli_distribution keep(p);
    for (Index k = 0; k < d2; ++k) {
      for (Index j = 0; j < d1; ++j) {
        if (keep(engine)) {
          s.rows.push_back(j);
          s.cols.push_back(k);
        }
      }
    }
  } else {
    const auto count = static_cast<Index>(
        std::llround(p * static_cast<double>(d1) * static_cast<double>(d2)));
    std::uniform_int_distribution<Index> row(0, d1 - 1);
    std::uniform_int_distribution<Index> col(0, d2 - 1);
    for (Index i = 0; i < count; ++i) {
      s.rows.push_back(row(engine));
      s.cols.push_back(col(engine));
    }
  }
  if (s.rows.empty()) throw DomainError("sampling: drew an empty observation set; resample");
  return s;
}

}  // namespace

SampledEntries gen_completion(const GroundTruth& truth, double p, const NoiseSpec& noise,
                              const RngStream& rng, SamplingMode mode) {
  const Index d1 = truth.x_star.rows();
  const Index d2 = truth.x_star.cols();
  Support s = sample_support(d1, d2, p, mode, rng);
  const double sd = noise.sigma(truth.x_star);
  auto engine = rng.engine(substream::kNoise);
  std::normal_distribution<double> eps(0.0, sd > 0.0 ? sd : 1.0);
  std::vector<double> values(s.rows.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = truth.x_star(s.rows[i], s.cols[i]);
    if (sd > 0.0) values[i] += eps(engine);
  }
  return SampledEntries::make(d1, d2, std::move(s.rows), std::move(s.cols), std::move(values), sd);
}

BinaryEntries gen_onebit(const GroundTruth& truth, double p, const LinkFunction& link,
                         const RngStream& rng, SamplingMode mode) {
  const Index d1 = truth.x_star.rows();
  const Index d2 = truth.x_star.cols();
  Support s = sample_support(d1, d2, p, mode, rng);
  auto engine = rng.engine(substream::kNoise);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::int8_t> signs(s.rows.size());
  for (std::size_t i = 0; i < signs.size(); ++i) {
    signs[i] = unit(engine) < link.value(truth.x_star(s.rows[i], s.cols[i])) ? 1 : -1;
  }
  return BinaryEntries::make(d1, d2, std::move(s.rows), std::move(s.cols), std::move(signs), link);
}

void dump_instance(std::ostream& os, const GroundTruth& truth, const Observations& obs) {
  CsvWriter csv(os);
  csv.row({"kind", "row", "col", "value"});
  const Matrix& x = truth.x_star;
  for (Index j = 0; j < x.rows(); ++j) {
    for (Index k = 0; k < x.cols(); ++k) {
      csv.row({"xstar", std::to_string(j), std::to_string(k), format_number(x(j, k))});
    }
  }
  if (const auto* reg = std::get_if<LinearMeasurements>(&obs)) {
    for (Index i = 0; i < reg->count(); ++i) {
      csv.row({"y", std::to_string(i), "", format_number(reg->y(i))});
    }
  } else if (const auto* c = std::get_if<SampledEntries>(&obs)) {
    for (std::size_t i = 0; i < c->rows.size(); ++i) {
      csv.row({"entry", std::to_string(c->rows[i]), std::to_string(c->cols[i]),
               format_number(c->values[i])});
    }
  } else if (const auto* b = std::get_if<BinaryEntries>(&obs)) {
    for (std::size_t i = 0; i < b->rows.size(); ++i) {
      csv.row({"sign", std::to_string(b->rows[i]), std::to_string(b->cols[i]),
               std::to_string(static_cast<int>(b->signs[i]))});
    }
  }
}

}  // namespace lowrank
