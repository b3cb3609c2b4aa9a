#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "lowrank/error.hpp"
#include "lowrank/factorspace.hpp"
#include "lowrank/link.hpp"

namespace lowrank {

enum class ModelKind { Regression, Completion, OneBit };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// y_i = <A_i, X*> + eps_i with dense sensing matrices.
///
/// The A_i are stored as columns of one (d1 d2) x n matrix, each column being
/// the column-major vectorization of A_i, so that A(X) and its adjoint are
/// single matrix-vector products.
struct LinearMeasurements {
  Index d1 = 0;
  Index d2 = 0;
  Matrix design;
  Vector y;
  double noise_level = 0.0;

  Index count() const { return design.cols(); }
  Eigen::Map<const Matrix> measurement(Index i) const {
    return Eigen::Map<const Matrix>(design.col(i).data(), d1, d2);
  }
  /// A(X) = (<A_1, X>, ..., <A_n, X>).
  Vector apply(const Matrix& x) const;
  /// A^*(w) = sum_i w_i A_i.
  Matrix adjoint(const Vector& w) const;

  static LinearMeasurements from_matrices(const std::vector<Matrix>& mats, Vector y,
                                          double noise_level = 0.0);
};

/// Observed entries Y_jk for (j, k) in Omega.
struct SampledEntries {
  Index d1 = 0;
  Index d2 = 0;
  std::vector<Index> rows;
  std::vector<Index> cols;
  std::vector<double> values;
  double p = 0.0;  // |Omega| / (d1 d2)
  double noise_level = 0.0;

  Index count() const { return static_cast<Index>(rows.size()); }

  /// Validates bounds and fills p.
  static SampledEntries make(Index d1, Index d2, std::vector<Index> rows, std::vector<Index> cols,
                             std::vector<double> values, double noise_level = 0.0);
};

/// Signs Y_jk in {+1, -1} for (j, k) in Omega.
struct BinaryEntries {
  Index d1 = 0;
  Index d2 = 0;
  std::vector<Index> rows;
  std::vector<Index> cols;
  std::vector<std::int8_t> signs;
  double p = 0.0;
  LinkFunction link = LinkFunction::logistic();

  Index count() const { return static_cast<Index>(rows.size()); }

  static BinaryEntries make(Index d1, Index d2, std::vector<Index> rows, std::vector<Index> cols,
                            std::vector<std::int8_t> signs, LinkFunction link);
};

using Observations = std::variant<LinearMeasurements, SampledEntries, BinaryEntries>;

ModelKind model_kind(const Observations& obs);
Index rows_of(const Observations& obs);
Index cols_of(const Observations& obs);
/// Number of scalar observations (n or |Omega|).
Index observation_count(const Observations& obs);

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;
};

// Matrix regression: (1/2n) ||y - A(X)||^2.
double regression_loss(const Matrix& x, const LinearMeasurements& obs);
Matrix regression_gradient(const Matrix& x, const LinearMeasurements& obs);
LossAndGradient regression_evaluate(const Matrix& x, const LinearMeasurements& obs);

// Matrix completion: (1/2p) sum_Omega (X_jk - Y_jk)^2.
double completion_loss(const Matrix& x, const SampledEntries& obs);
Matrix completion_gradient(const Matrix& x, const SampledEntries& obs);
LossAndGradient completion_evaluate(const Matrix& x, const SampledEntries& obs);

// One-bit completion: -(1/p) sum_Omega {1[Y=1] log f(X_jk) + 1[Y=-1] log(1 - f(X_jk))}.
double onebit_loss(const Matrix& x, const BinaryEntries& obs);
Matrix onebit_gradient(const Matrix& x, const BinaryEntries& obs);
LossAndGradient onebit_evaluate(const Matrix& x, const BinaryEntries& obs);

/// Population negative log-likelihood given X*, restricted to Omega:
/// -(1/p) sum_Omega {f(X*_jk) log f(X_jk) + (1 - f(X*_jk)) log(1 - f(X_jk))}.
double onebit_expected_loss(const Matrix& x, const Matrix& x_star, const BinaryEntries& obs);
Matrix onebit_expected_gradient(const Matrix& x, const Matrix& x_star, const BinaryEntries& obs);

double loss(const Matrix& x, const Observations& obs);
Matrix gradient(const Matrix& x, const Observations& obs);
LossAndGradient evaluate(const Matrix& x, const Observations& obs);

/// Scale of the loss curvature in X, used for the automatic step sizes: 1 for
/// the two quadratic models (their Hessians are isotropic in expectation) and
/// the link curvature at zero for one-bit completion.
double smoothness_estimate(const Observations& obs);

/// (G V, G^T U) for G the loss gradient at X = U V^T.
FactorPair factored_gradient(const Matrix& model_gradient, const FactorPair& z);

}  // namespace lowrank
