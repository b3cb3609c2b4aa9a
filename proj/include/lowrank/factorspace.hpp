#pragma once

#include <utility>

#include <Eigen/Dense>

#include "lowrank/error.hpp"

namespace lowrank {

/// The lifted variable Z = [U; V] with U (d1 x r) and V (d2 x r).
///
/// Kept as two blocks rather than one stacked matrix since nearly every
/// operation touches U and V separately.
struct FactorPair {
  Matrix u;
  Matrix v;

  Index d1() const { return u.rows(); }
  Index d2() const { return v.rows(); }
  Index rank() const { return u.cols(); }

  /// (d1 + d2) x r stacked copy.
  Matrix stacked() const;
  /// X = U V^T.
  Matrix product() const { return u * v.transpose(); }

  double squared_norm() const { return u.squaredNorm() + v.squaredNorm(); }
  double norm() const;
  /// Largest singular value of the stacked matrix.
  double spectral_norm() const;
  bool all_finite() const { return u.allFinite() && v.allFinite(); }
  bool same_shape(const FactorPair& other) const;

  /// Right-multiply both blocks: Z R.
  FactorPair times(const Matrix& r) const;

  FactorPair& operator+=(const FactorPair& other);
  FactorPair& operator-=(const FactorPair& other);
  FactorPair& operator*=(double s);

  static FactorPair zeros(Index d1, Index d2, Index r);
};

FactorPair operator+(FactorPair a, const FactorPair& b);
FactorPair operator-(FactorPair a, const FactorPair& b);
FactorPair operator*(double s, FactorPair a);

/// <U, U'> + <V, V'>.
double inner(const FactorPair& a, const FactorPair& b);

/// Builds Z from its blocks; throws DimensionError when column counts differ.
FactorPair lift(Matrix u, Matrix v);
std::pair<Matrix, Matrix> split(const FactorPair& z);
/// Splits a stacked (d1 + d2) x r matrix at row d1.
FactorPair unstack(const Matrix& stacked, Index d1);

/// Top-r singular triples, sorted descending.
struct TruncatedSvd {
  Matrix u;      // d1 x r, orthonormal columns
  Vector sigma;  // r
  Matrix v;      // d2 x r, orthonormal columns

  Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

/// Best rank-r approximation factors of X.
///
/// Signs are fixed so that the largest-magnitude entry of every left singular
/// vector is nonnegative (lowest index wins ties); the matching right vector
/// is flipped with it. Exactly r triples are returned even when X has lower
/// rank, in which case the trailing ones carry zero singular values.
TruncatedSvd rank_r_truncate(const Matrix& x, Index r);

/// U = Ubar diag(sqrt(sigma)), V = Vbar diag(sqrt(sigma)).
FactorPair balanced_split(const TruncatedSvd& svd);
FactorPair balanced_split(const Matrix& u_bar, const Vector& sigma, const Matrix& v_bar);

/// Planted low-rank matrix with its SVD and balanced lift.
struct GroundTruth {
  Matrix x_star;
  Matrix u_bar;
  Matrix v_bar;
  Vector sigma;
  FactorPair z_star;

  Index rank() const { return sigma.size(); }
  double sigma1() const { return sigma(0); }
  double sigmar() const { return sigma(sigma.size() - 1); }
  double kappa() const { return sigma1() / sigmar(); }
};

/// Decomposes X (assumed rank r) into a GroundTruth. Throws NumericError when
/// sigma_r(X) is zero.
GroundTruth make_ground_truth(const Matrix& x, Index r);

struct AlignmentResult {
  Matrix rotation;       // r x r orthogonal
  double distance = 0.0; // min over orthogonal R of ||Z - Z* R||_F
  FactorPair residual;   // H = Z - Z* R
};

/// Orthogonal Procrustes alignment of Z onto the orbit of Z*.
///
/// With M = Z*^T Z = P S Q^T the minimizer is R = P Q^T. Reflections are
/// allowed. When Z* is rank deficient the minimizer is not unique and one of
/// them is returned.
AlignmentResult procrustes_align(const FactorPair& z, const FactorPair& z_star);

/// Shortcut for procrustes_align(z, z_star).distance.
double procrustes_distance(const FactorPair& z, const FactorPair& z_star);

/// (1/8) ||U^T U - V^T V||_F^2
double balance_penalty(const FactorPair& z);

/// Gradient of balance_penalty: (U (U^T U - V^T V) / 2, V (V^T V - U^T U) / 2).
FactorPair balance_gradient(const FactorPair& z);

/// Euclidean projection onto {A : every row has l2 norm <= gamma}.
Matrix project_row_norm(const Matrix& a, double gamma);
void project_row_norm_inplace(Matrix& a, double gamma);

/// ||A||_{2,inf}: largest row l2 norm.
double max_row_norm(const Matrix& a);

/// sqrt(d1 d2) ||X||_inf / ||X||_F. Throws DomainError on the zero matrix.
double spikiness(const Matrix& x);

}  // namespace lowrank
