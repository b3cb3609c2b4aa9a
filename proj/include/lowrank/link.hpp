#pragma once

#include <string>

namespace lowrank {

enum class LinkKind { Logistic, Probit };

std::string to_string(LinkKind kind);
LinkKind parse_link_kind(const std::string& name);

/// Bound constants of a link over |x| <= alpha.
struct LinkBounds {
  double alpha = 0.0;
  double mu_alpha = 0.0;
  double l_alpha = 0.0;
  double gamma_alpha = 0.0;
};

/// P(Y = +1 | X_jk = x) = f(x) for one-bit observations.
///
/// Logistic: f(x) = 1 / (1 + e^-x). Probit: f(x) = Phi(x / scale).
/// Log-probabilities are evaluated in log space and floored at log(kClamp),
/// which is the same as clamping f to [kClamp, 1 - kClamp] before the log.
class LinkFunction {
 public:
  static constexpr double kClamp = 1e-12;

  static LinkFunction logistic() { return LinkFunction(LinkKind::Logistic, 1.0); }
  static LinkFunction probit(double scale);

  LinkKind kind() const { return kind_; }
  double scale() const { return scale_; }
  std::string name() const { return to_string(kind_); }

  /// f(x), clamped to [kClamp, 1 - kClamp].
  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  /// log f(x) and log(1 - f(x)), unclamped and stable in both tails.
  double log_cdf(double x) const;
  double log_ccdf(double x) const;

  /// f'(x) / f(x) and f'(x) / (1 - f(x)), stable in both tails.
  double hazard_plus(double x) const;
  double hazard_minus(double x) const;

  /// Curvature f'^2/f^2 - f''/f at x = 0; equals the (1 - f) branch by symmetry.
  double curvature_at_zero() const;

 private:
  LinkFunction(LinkKind kind, double scale) : kind_(kind), scale_(scale) {}

  LinkKind kind_;
  double scale_;
};

/// Grid evaluation of mu_alpha, L_alpha and gamma_alpha over [-alpha, alpha].
///
///   mu_alpha = min(inf {f'^2/f^2 - f''/f}, inf {f'^2/(1-f)^2 + f''/(1-f)})
///   L_alpha  = max(sup {...}, sup {...})
///   gamma_alpha = sup |f'| / (f (1 - f))
///
/// Throws DomainError for alpha <= 0 or grid_points < 101 and NumericError on
/// a non-finite evaluation.
LinkBounds link_bounds(const LinkFunction& link, double alpha, int grid_points = 2001);

namespace detail {
/// log Phi(z) for the standard normal CDF.
double log_normal_cdf(double z);
/// phi(z) / Phi(z).
double normal_hazard(double z);
}  // namespace detail

}  // namespace lowrank
