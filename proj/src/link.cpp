#include "lowrank/link.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lowrank/error.hpp"

namespace lowrank {

std::string to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::Logistic:
      return "logistic";
    case LinkKind::Probit:
      return "probit";
  }
  return "unknown";
}

LinkKind parse_link_kind(const std::string& name) {
  if (name == "logistic") return LinkKind::Logistic;
  if (name == "probit") return LinkKind::Probit;
  throw ConfigError("unknown link '" + name + "' (expected logistic or probit)");
}

namespace detail {
namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
constexpr double kTailSwitch = 8.0;

double log_normal_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

// Mills ratio (1 - Phi(t)) / phi(t) for t > 8 by backward evaluation of the
// continued fraction 1 / (t + 1 / (t + 2 / (t + 3 / (t + ...)))).
double mills_ratio(double t) {
  double tail = t;
  for (int k = 80; k >= 1; --k) tail = t + k / tail;
  return 1.0 / tail;
}

}  // namespace

double log_normal_cdf(double z) {
  if (z < -kTailSwitch) return log_normal_pdf(z) + std::log(mills_ratio(-z));
  if (z <= 0.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
}

double normal_hazard(double z) {
  if (z < -kTailSwitch) return 1.0 / mills_ratio(-z);
  return std::exp(log_normal_pdf(z) - log_normal_cdf(z));
}

}  // namespace detail

namespace {

// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp_probability(double f) {
  return std::clamp(f, LinkFunction::kClamp, 1.0 - LinkFunction::kClamp);
}

}  // namespace

LinkFunction LinkFunction::probit(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("probit link: scale must be positive and finite");
  }
  return LinkFunction(LinkKind::Probit, scale);
}

double LinkFunction::value(double x) const {
  if (kind_ == LinkKind::Logistic) return clamp_probability(sigmoid(x));
  return clamp_probability(0.5 * std::erfc(-x / (scale_ * std::numbers::sqrt2)));
}

double LinkFunction::derivative(double x) const {
  if (kind_ == LinkKind::Logistic) return sigmoid(x) * sigmoid(-x);
  const double z = x / scale_;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * scale_);
}

double LinkFunction::second_derivative(double x) const {
  if (kind_ == LinkKind::Logistic) {
    const double f = sigmoid(x);
    return f * (1.0 - f) * (1.0 - 2.0 * f);
  }
  return -(x / (scale_ * scale_)) * derivative(x);
}

double LinkFunction::log_cdf(double x) const {
  if (kind_ == LinkKind::Logistic) return -softplus(-x);
  return detail::log_normal_cdf(x / scale_);
}

double LinkFunction::log_ccdf(double x) const {
  if (kind_ == LinkKind::Logistic) return -softplus(x);
  return detail::log_normal_cdf(-x / scale_);
}

double LinkFunction::hazard_plus(double x) const {
  if (kind_ == LinkKind::Logistic) return sigmoid(-x);
  return detail::normal_hazard(x / scale_) / scale_;
}

double LinkFunction::hazard_minus(double x) const {
  if (kind_ == LinkKind::Logistic) return sigmoid(x);
  return detail::normal_hazard(-x / scale_) / scale_;
}

double LinkFunction::curvature_at_zero() const {
  const double h = hazard_plus(0.0);
  const double f2_over_f = second_derivative(0.0) * std::exp(-log_cdf(0.0));
  return h * h - f2_over_f;
}

LinkBounds link_bounds(const LinkFunction& link, double alpha, int grid_points) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("link_bounds: alpha must be positive and finite");
  }
  if (grid_points < 101) throw DomainError("link_bounds: need at least 101 grid points");

  double inf_plus = std::numeric_limits<double>::infinity();
  double inf_minus = inf_plus;
  double sup_plus = -inf_plus;
  double sup_minus = -inf_plus;
  double sup_steep = -inf_plus;

  for (int i = 0; i < grid_points; ++i) {
    const double x = -alpha + 2.0 * alpha * i / (grid_points - 1);
    const double hp = link.hazard_plus(x);
    const double hm = link.hazard_minus(x);
    const double f2 = link.second_derivative(x);
    const double plus = hp * hp - f2 * std::exp(-link.log_cdf(x));
    const double minus = hm * hm + f2 * std::exp(-link.log_ccdf(x));
    const double steep = std::abs(hp) * std::exp(-link.log_ccdf(x));
    if (!std::isfinite(plus) || !std::isfinite(minus) || !std::isfinite(steep)) {
      throw NumericError("link_bounds: non-finite " + link.name() + " evaluation at x = " +
                         std::to_string(x));
    }
    inf_plus = std::min(inf_plus, plus);
    inf_minus = std::min(inf_minus, minus);
    sup_plus = std::max(sup_plus, plus);
    sup_minus = std::max(sup_minus, minus);
    sup_steep = std::max(sup_steep, steep);
  }

  return LinkBounds{alpha, std::min(inf_plus, inf_minus), std::max(sup_plus, sup_minus),
                    sup_steep};
}

}  // namespace lowrank
