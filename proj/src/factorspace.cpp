#include "lowrank/factorspace.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace lowrank {

Matrix FactorPair::stacked() const {
  Matrix z(d1() + d2(), rank());
  z.topRows(d1()) = u;
  z.bottomRows(d2()) = v;
  return z;
}

double FactorPair::norm() const { return std::sqrt(squared_norm()); }

double FactorPair::spectral_norm() const {
  // ||Z||_2^2 is the top eigenvalue of Z^T Z = U^T U + V^T V.
  if (rank() == 0) return 0.0;
  const Matrix gram = u.transpose() * u + v.transpose() * v;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("spectral_norm: eigen solver failed");
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

bool FactorPair::same_shape(const FactorPair& other) const {
  return u.rows() == other.u.rows() && u.cols() == other.u.cols() &&
         v.rows() == other.v.rows() && v.cols() == other.v.cols();
}

FactorPair FactorPair::times(const Matrix& r) const { return FactorPair{u * r, v * r}; }

FactorPair& FactorPair::operator+=(const FactorPair& other) {
  u += other.u;
  v += other.v;
  return *this;
}

FactorPair& FactorPair::operator-=(const FactorPair& other) {
  u -= other.u;
  v -= other.v;
  return *this;
}

FactorPair& FactorPair::operator*=(double s) {
  u *= s;
  v *= s;
  return *this;
}

FactorPair FactorPair::zeros(Index d1, Index d2, Index r) {
  return FactorPair{Matrix::Zero(d1, r), Matrix::Zero(d2, r)};
}

FactorPair operator+(FactorPair a, const FactorPair& b) { return a += b; }
FactorPair operator-(FactorPair a, const FactorPair& b) { return a -= b; }
FactorPair operator*(double s, FactorPair a) { return a *= s; }

double inner(const FactorPair& a, const FactorPair& b) {
  return (a.u.array() * b.u.array()).sum() + (a.v.array() * b.v.array()).sum();
}

FactorPair lift(Matrix u, Matrix v) {
  if (u.cols() != v.cols()) {
    throw DimensionError("lift: U is " + shape_str(u) + " but V is " + shape_str(v) +
                         "; column counts must match");
  }
  return FactorPair{std::move(u), std::move(v)};
}

std::pair<Matrix, Matrix> split(const FactorPair& z) { return {z.u, z.v}; }

FactorPair unstack(const Matrix& stacked, Index d1) {
  if (d1 < 0 || d1 > stacked.rows()) {
    throw DimensionError("unstack: cannot split " + shape_str(stacked) + " at row " +
                         std::to_string(d1));
  }
  return FactorPair{stacked.topRows(d1), stacked.bottomRows(stacked.rows() - d1)};
}

namespace {

void fix_signs(Matrix& u, Matrix& v) {
  for (Index k = 0; k < u.cols(); ++k) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < u.rows(); ++i) {
      const double a = std::abs(u(i, k));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (u(arg, k) < 0.0) {
      u.col(k) *= -1.0;
      v.col(k) *= -1.0;
    }
  }
}

}  // namespace

TruncatedSvd rank_r_truncate(const Matrix& x, Index r) {
  const Index max_rank = std::min(x.rows(), x.cols());
  if (r < 1 || r > max_rank) {
    throw DomainError("rank_r_truncate: rank " + std::to_string(r) + " not in [1, " +
                      std::to_string(max_rank) + "] for a " + shape_str(x) + " matrix");
  }
  if (!x.allFinite()) throw NumericError("rank_r_truncate: input has non-finite entries");

  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("rank_r_truncate: SVD did not converge");

  TruncatedSvd out{svd.matrixU().leftCols(r), svd.singularValues().head(r),
                   svd.matrixV().leftCols(r)};
  fix_signs(out.u, out.v);
  return out;
}

FactorPair balanced_split(const Matrix& u_bar, const Vector& sigma, const Matrix& v_bar) {
  if (u_bar.cols() != sigma.size() || v_bar.cols() != sigma.size()) {
    throw DimensionError("balanced_split: factors " + shape_str(u_bar) + " / " +
                         shape_str(v_bar) + " do not match " + std::to_string(sigma.size()) +
                         " singular values");
  }
  if ((sigma.array() < 0.0).any()) {
    throw DomainError("balanced_split: singular values must be nonnegative");
  }
  const Vector root = sigma.array().sqrt();
  return FactorPair{u_bar * root.asDiagonal(), v_bar * root.asDiagonal()};
}

FactorPair balanced_split(const TruncatedSvd& svd) {
  return balanced_split(svd.u, svd.sigma, svd.v);
}

GroundTruth make_ground_truth(const Matrix& x, Index r) {
  TruncatedSvd svd = rank_r_truncate(x, r);
  if (!(svd.sigma(r - 1) > 0.0)) {
    throw NumericError("make_ground_truth: matrix has rank below " + std::to_string(r));
  }
  GroundTruth gt;
  gt.x_star = x;
  gt.z_star = balanced_split(svd);
  gt.u_bar = std::move(svd.u);
  gt.v_bar = std::move(svd.v);
  gt.sigma = std::move(svd.sigma);
  return gt;
}

AlignmentResult procrustes_align(const FactorPair& z, const FactorPair& z_star) {
  if (!z.same_shape(z_star)) {
    throw DimensionError("procrustes_align: Z is [" + shape_str(z.u) + "; " + shape_str(z.v) +
                         "] but Z* is [" + shape_str(z_star.u) + "; " + shape_str(z_star.v) +
                         "]");
  }
  const Matrix m = z_star.u.transpose() * z.u + z_star.v.transpose() * z.v;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericError("procrustes_align: SVD did not converge");

  AlignmentResult out;
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  out.residual = z - z_star.times(out.rotation);
  out.distance = out.residual.norm();
  return out;
}

double procrustes_distance(const FactorPair& z, const FactorPair& z_star) {
  return procrustes_align(z, z_star).distance;
}

double balance_penalty(const FactorPair& z) {
  const Matrix gap = z.u.transpose() * z.u - z.v.transpose() * z.v;
  return 0.125 * gap.squaredNorm();
}

FactorPair balance_gradient(const FactorPair& z) {
  const Matrix gap = z.u.transpose() * z.u - z.v.transpose() * z.v;
  return FactorPair{0.5 * z.u * gap, -0.5 * z.v * gap};
}

void project_row_norm_inplace(Matrix& a, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("project_row_norm: radius must be positive");
  for (Index i = 0; i < a.rows(); ++i) {
    const double n = a.row(i).norm();
    if (n > gamma) a.row(i) *= gamma / n;
  }
}

Matrix project_row_norm(const Matrix& a, double gamma) {
  Matrix out = a;
  project_row_norm_inplace(out, gamma);
  return out;
}

double max_row_norm(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  return a.rowwise().norm().maxCoeff();
}

double spikiness(const Matrix& x) {
  const double fro = x.norm();
  if (!(fro > 0.0)) throw DomainError("spikiness: zero matrix has no spikiness ratio");
  return std::sqrt(static_cast<double>(x.rows()) * static_cast<double>(x.cols())) *
         x.cwiseAbs().maxCoeff() / fro;
}

}  // namespace lowrank
