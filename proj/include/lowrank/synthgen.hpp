#pragma once

#include <ostream>
#include <string>

#include "lowrank/factorspace.hpp"
#include "lowrank/link.hpp"
#include "lowrank/models.hpp"
#include "lowrank/rng.hpp"

namespace lowrank {

enum class FactorScheme {
  /// U*, V* with i.i.d. N(0, 1) entries.
  Gaussian,
  /// U*, V* with i.i.d. U[-1/2, 1/2] entries, then X* rescaled so ||X*||_inf = alpha.
  UniformScaled,
};

std::string to_string(FactorScheme scheme);
FactorScheme parse_factor_scheme(const std::string& name);

enum class SamplingMode {
  /// Each entry observed independently with probability p.
  Bernoulli,
  /// round(p d1 d2) entries drawn uniformly with replacement.
  WithReplacement,
};

std::string to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(const std::string& name);

struct NoiseSpec {
  enum class Kind { None, Gaussian };
  enum class Rule { Absolute, RelativeToMax };

  Kind kind = Kind::None;
  Rule rule = Rule::Absolute;
  double value = 0.0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec absolute(double sd);
  static NoiseSpec relative(double factor = 0.1);

  /// Accepts "none", "rel<factor>" (e.g. rel0.1) and "abs:<sd>".
  static NoiseSpec parse(const std::string& text);
  std::string to_string() const;

  /// Standard deviation for a given X*: 0, value, or value * ||X*||_inf.
  double sigma(const Matrix& x_star) const;
};

/// Draws X* = U* V*^T of rank r. A draw with sigma_r < 1e-8 sigma_1 is
/// redrawn, up to 10 attempts; `attempts`, when given, receives the count.
GroundTruth gen_ground_truth(Index d1, Index d2, Index r, FactorScheme scheme,
                             const RngStream& rng, double alpha = 1.0, int* attempts = nullptr);

/// n Gaussian sensing matrices and responses y_i = <A_i, X*> + eps_i.
LinearMeasurements gen_regression(const GroundTruth& truth, Index n, const NoiseSpec& noise,
                                  const RngStream& rng);

/// Noisy entries of X* on a random Omega; throws DomainError when Omega is empty.
SampledEntries gen_completion(const GroundTruth& truth, double p, const NoiseSpec& noise,
                              const RngStream& rng,
                              SamplingMode mode = SamplingMode::Bernoulli);

/// Signs with P(Y_jk = +1) = f(X*_jk) on a random Omega.
BinaryEntries gen_onebit(const GroundTruth& truth, double p, const LinkFunction& link,
                         const RngStream& rng, SamplingMode mode = SamplingMode::Bernoulli);

/// Writes X* and the observations as CSV rows (kind,row,col,value):
/// "xstar" for every entry of X*, then "entry" / "sign" rows for Omega, or
/// "y" rows (row = measurement index, empty col) for regression. Sensing
/// matrices are not written; they are reproducible from the seed.
void dump_instance(std::ostream& os, const GroundTruth& truth, const Observations& obs);

}  // namespace lowrank
