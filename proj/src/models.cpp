#include "lowrank/models.hpp"

#include <cmath>

namespace lowrank {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Regression:
      return "regression";
    case ModelKind::Completion:
      return "completion";
    case ModelKind::OneBit:
      return "onebit";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "regression") return ModelKind::Regression;
  if (name == "completion") return ModelKind::Completion;
  if (name == "onebit") return ModelKind::OneBit;
  throw ConfigError("unknown model '" + name + "' (expected regression, completion or onebit)");
}

namespace {

void check_shape(const Matrix& x, Index d1, Index d2, const char* what) {
  if (x.rows() != d1 || x.cols() != d2) {
    throw DimensionError(std::string(what) + ": X is " + shape_str(x) +
                         " but observations are " + shape_str(d1, d2));
  }
}

void check_indices(Index d1, Index d2, const std::vector<Index>& rows,
                   const std::vector<Index>& cols, std::size_t n_values, const char* what) {
  if (rows.size() != cols.size() || rows.size() != n_values) {
    throw DimensionError(std::string(what) + ": index and value lists differ in length");
  }
  if (rows.empty()) throw DomainError(std::string(what) + ": empty observation set");
  if (static_cast<double>(rows.size()) > static_cast<double>(d1) * static_cast<double>(d2)) {
    throw DomainError(std::string(what) + ": more observations than matrix entries");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= d1 || cols[i] < 0 || cols[i] >= d2) {
      throw DimensionError(std::string(what) + ": index (" + std::to_string(rows[i]) + ", " +
                           std::to_string(cols[i]) + ") outside " + shape_str(d1, d2));
    }
  }
}

const double kLogLow = std::log(LinkFunction::kClamp);
const double kLogHigh = std::log1p(-LinkFunction::kClamp);

// Clamped log-probability term and its derivative in x.
struct LogTerm {
  double value;
  double slope;
};

LogTerm log_prob(const LinkFunction& link, double x, bool positive) {
  const double lp = positive ? link.log_cdf(x) : link.log_ccdf(x);
  if (lp < kLogLow) return {kLogLow, 0.0};
  if (lp > kLogHigh) return {kLogHigh, 0.0};
  return {lp, positive ? link.hazard_plus(x) : -link.hazard_minus(x)};
}

}  // namespace

Vector LinearMeasurements::apply(const Matrix& x) const {
  check_shape(x, d1, d2, "LinearMeasurements::apply");
  const Eigen::Map<const Vector> vx(x.data(), x.size());
  return design.transpose() * vx;
}

Matrix LinearMeasurements::adjoint(const Vector& w) const {
  if (w.size() != count()) {
    throw DimensionError("LinearMeasurements::adjoint: weight vector has " +
                         std::to_string(w.size()) + " entries, expected " +
                         std::to_string(count()));
  }
  Matrix out(d1, d2);
  Eigen::Map<Vector>(out.data(), out.size()).noalias() = design * w;
  return out;
}

LinearMeasurements LinearMeasurements::from_matrices(const std::vector<Matrix>& mats, Vector y,
                                                     double noise_level) {
  if (mats.empty()) throw DomainError("LinearMeasurements: need at least one measurement");
  if (static_cast<std::size_t>(y.size()) != mats.size()) {
    throw DimensionError("LinearMeasurements: " + std::to_string(mats.size()) +
                         " matrices but " + std::to_string(y.size()) + " responses");
  }
  LinearMeasurements out;
  out.d1 = mats.front().rows();
  out.d2 = mats.front().cols();
  out.design.resize(out.d1 * out.d2, static_cast<Index>(mats.size()));
  for (std::size_t i = 0; i < mats.size(); ++i) {
    check_shape(mats[i], out.d1, out.d2, "LinearMeasurements");
    out.design.col(static_cast<Index>(i)) =
        Eigen::Map<const Vector>(mats[i].data(), mats[i].size());
  }
  out.y = std::move(y);
  out.noise_level = noise_level;
  return out;
}

SampledEntries SampledEntries::make(Index d1, Index d2, std::vector<Index> rows,
                                    std::vector<Index> cols, std::vector<double> values,
                                    double noise_level) {
  check_indices(d1, d2, rows, cols, values.size(), "SampledEntries");
  SampledEntries out;
  out.d1 = d1;
  out.d2 = d2;
  out.p = static_cast<double>(rows.size()) / (static_cast<double>(d1) * static_cast<double>(d2));
  out.rows = std::move(rows);
  out.cols = std::move(cols);
  out.values = std::move(values);
  out.noise_level = noise_level;
  return out;
}

BinaryEntries BinaryEntries::make(Index d1, Index d2, std::vector<Index> rows,
                                  std::vector<Index> cols, std::vector<std::int8_t> signs,
                                  LinkFunction link) {
  check_indices(d1, d2, rows, cols, signs.size(), "BinaryEntries");
  for (auto s : signs) {
    if (s != 1 && s != -1) throw DomainError("BinaryEntries: signs must be +1 or -1");
  }
  BinaryEntries out;
  out.d1 = d1;
  out.d2 = d2;
  out.p = static_cast<double>(rows.size()) / (static_cast<double>(d1) * static_cast<double>(d2));
  out.rows = std::move(rows);
  out.cols = std::move(cols);
  out.signs = std::move(signs);
  out.link = link;
  return out;
}

ModelKind model_kind(const Observations& obs) {
  return static_cast<ModelKind>(obs.index());
}

Index rows_of(const Observations& obs) {
  return std::visit([](const auto& o) { return o.d1; }, obs);
}

Index cols_of(const Observations& obs) {
  return std::visit([](const auto& o) { return o.d2; }, obs);
}

Index observation_count(const Observations& obs) {
  return std::visit([](const auto& o) { return o.count(); }, obs);
}

// ---- regression ------------------------------------------------------------

LossAndGradient regression_evaluate(const Matrix& x, const LinearMeasurements& obs) {
  check_shape(x, obs.d1, obs.d2, "regression");
  const Vector residual = obs.apply(x) - obs.y;
  const double n = static_cast<double>(obs.count());
  LossAndGradient out;
  out.loss = residual.squaredNorm() / (2.0 * n);
  out.gradient = obs.adjoint(residual / n);
  return out;
}

double regression_loss(const Matrix& x, const LinearMeasurements& obs) {
  check_shape(x, obs.d1, obs.d2, "regression_loss");
  return (obs.apply(x) - obs.y).squaredNorm() / (2.0 * static_cast<double>(obs.count()));
}

Matrix regression_gradient(const Matrix& x, const LinearMeasurements& obs) {
  return regression_evaluate(x, obs).gradient;
}

// ---- completion ------------------------------------------------------------

LossAndGradient completion_evaluate(const Matrix& x, const SampledEntries& obs) {
  check_shape(x, obs.d1, obs.d2, "completion");
  LossAndGradient out;
  out.gradient = Matrix::Zero(obs.d1, obs.d2);
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.rows.size(); ++i) {
    const double r = x(obs.rows[i], obs.cols[i]) - obs.values[i];
    sum += r * r;
    out.gradient(obs.rows[i], obs.cols[i]) += r / obs.p;
  }
  out.loss = sum / (2.0 * obs.p);
  return out;
}

double completion_loss(const Matrix& x, const SampledEntries& obs) {
  return completion_evaluate(x, obs).loss;
}

Matrix completion_gradient(const Matrix& x, const SampledEntries& obs) {
  return completion_evaluate(x, obs).gradient;
}

// ---- one-bit ---------------------------------------------------------------

LossAndGradient onebit_evaluate(const Matrix& x, const BinaryEntries& obs) {
  check_shape(x, obs.d1, obs.d2, "onebit");
  LossAndGradient out;
  out.gradient = Matrix::Zero(obs.d1, obs.d2);
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.rows.size(); ++i) {
    const LogTerm t = log_prob(obs.link, x(obs.rows[i], obs.cols[i]), obs.signs[i] > 0);
    sum += t.value;
    out.gradient(obs.rows[i], obs.cols[i]) -= t.slope / obs.p;
  }
  out.loss = -sum / obs.p;
  return out;
}

double onebit_loss(const Matrix& x, const BinaryEntries& obs) {
  return onebit_evaluate(x, obs).loss;
}

Matrix onebit_gradient(const Matrix& x, const BinaryEntries& obs) {
  return onebit_evaluate(x, obs).gradient;
}

double onebit_expected_loss(const Matrix& x, const Matrix& x_star, const BinaryEntries& obs) {
  check_shape(x, obs.d1, obs.d2, "onebit_expected_loss");
  check_shape(x_star, obs.d1, obs.d2, "onebit_expected_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.rows.size(); ++i) {
    const double xi = x(obs.rows[i], obs.cols[i]);
    const double f_star = obs.link.value(x_star(obs.rows[i], obs.cols[i]));
    sum += f_star * log_prob(obs.link, xi, true).value +
           (1.0 - f_star) * log_prob(obs.link, xi, false).value;
  }
  return -sum / obs.p;
}

Matrix onebit_expected_gradient(const Matrix& x, const Matrix& x_star, const BinaryEntries& obs) {
  check_shape(x, obs.d1, obs.d2, "onebit_expected_gradient");
  check_shape(x_star, obs.d1, obs.d2, "onebit_expected_gradient");
  Matrix g = Matrix::Zero(obs.d1, obs.d2);
  for (std::size_t i = 0; i < obs.rows.size(); ++i) {
    const double xi = x(obs.rows[i], obs.cols[i]);
    const double f_star = obs.link.value(x_star(obs.rows[i], obs.cols[i]));
    const double slope = f_star * log_prob(obs.link, xi, true).slope +
                         (1.0 - f_star) * log_prob(obs.link, xi, false).slope;
    g(obs.rows[i], obs.cols[i]) -= slope / obs.p;
  }
  return g;
}

// ---- dispatch --------------------------------------------------------------

LossAndGradient evaluate(const Matrix& x, const Observations& obs) {
  struct Visitor {
    const Matrix& x;
    LossAndGradient operator()(const LinearMeasurements& o) const { return regression_evaluate(x, o); }
    LossAndGradient operator()(const SampledEntries& o) const { return completion_evaluate(x, o); }
    LossAndGradient operator()(const BinaryEntries& o) const { return onebit_evaluate(x, o); }
  };
  return std::visit(Visitor{x}, obs);
}

double loss(const Matrix& x, const Observations& obs) {
  struct Visitor {
    const Matrix& x;
    double operator()(const LinearMeasurements& o) const { return regression_loss(x, o); }
    double operator()(const SampledEntries& o) const { return completion_loss(x, o); }
    double operator()(const BinaryEntries& o) const { return onebit_loss(x, o); }
  };
  return std::visit(Visitor{x}, obs);
}

Matrix gradient(const Matrix& x, const Observations& obs) { return evaluate(x, obs).gradient; }

double smoothness_estimate(const Observations& obs) {
  if (const auto* b = std::get_if<BinaryEntries>(&obs)) return b->link.curvature_at_zero();
  return 1.0;
}

FactorPair factored_gradient(const Matrix& model_gradient, const FactorPair& z) {
  if (model_gradient.rows() != z.d1() || model_gradient.cols() != z.d2()) {
    throw DimensionError("factored_gradient: gradient is " + shape_str(model_gradient) +
                         " but U V^T is " + shape_str(z.d1(), z.d2()));
  }
  return FactorPair{model_gradient * z.v, model_gradient.transpose() * z.u};
}

}  // namespace lowrank
