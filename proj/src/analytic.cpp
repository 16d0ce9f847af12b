#include "levy/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "levy/error.hpp"

namespace levy {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / kSqrt2Pi; }

double log_normal_cdf(double z) {
  if (z > -30.0) return std::log(normal_cdf(z));
  // Mills ratio expansion.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-z) - std::log(kSqrt2Pi) + std::log(series);
}

double tilde_f(double u, double z, double m) {
  if (!(u > 0.0)) throw Error(ErrorCode::NonPositiveTime, "tilde_f needs u > 0");
  if (z == 0.0) return 0.0;
  const double d = z - m * u;
  return std::abs(z) / (kSqrt2Pi * u * std::sqrt(u)) * std::exp(-d * d / (2.0 * u));
}

double tilde_defect(double z, double m) {
  const double mz = m * z;
  return -std::expm1(mz - std::abs(mz));
}

double tilde_survival(double t, double z, double m) {
  if (t <= 0.0) return 1.0;
  if (z <= 0.0) return 0.0;
  const double st = std::sqrt(t);
  const double a = (z - m * t) / st;
  const double b = (-z - m * t) / st;
  const double reflected = std::exp(2.0 * m * z + log_normal_cdf(b));
  const double hit = normal_cdf(-a) + reflected;
  if (hit < 0.5) return std::max(0.0, 1.0 - hit);
  return std::max(0.0, normal_cdf(a) - reflected);
}

double f_at_zero(const ValidatedParams& p) {
  const double lambda = p.lambda();
  const double x = p.barrier();
  const double fx = p.jump().cdf(x);
  const double fl = p.jump().cdf_left(x);
  return 0.5 * lambda * (2.0 - fx - fl) + 0.25 * lambda * (fx - fl);
}

double tilde_f_bound(double t, double m) {
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "tilde_f_bound needs t > 0");
  const double c = (std::exp(-0.5) + std::abs(m)) / kSqrt2Pi;
  return c * (1.0 / t + 1.0 / std::sqrt(t));
}

Lemma5Value lemma5_A(double mu, double sigma, double m, double t) {
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "lemma5_A needs t > 0");
  if (sigma < 0.0) throw Error(ErrorCode::PreconditionViolated, "lemma5_A needs sigma >= 0");
  const double s2 = sigma * sigma + t;
  const double s = std::sqrt(s2);
  const double st = std::sqrt(t);
  const double k = st * (mu / s + m * s);
  double bracket;
  if (sigma == 0.0) {
    bracket = std::max(k, 0.0);
  } else {
    bracket = k * normal_cdf(k / sigma) + sigma * normal_pdf(k / sigma);
  }
  const double value = std::exp(-mu * mu / (2.0 * s2)) / (kSqrt2Pi * s2 * st) * bracket;

  const double c1 = std::exp(-0.5) / kSqrt2Pi;
  const double c2 = std::abs(m) / kSqrt2Pi;
  const double c3 = kSqrt2Pi / (4.0 * std::numbers::pi);
  const double bound = c1 / (s2 * s) + c2 / s + sigma * c3 / (s2 * st);
  return {value, bound};
}

double lemma6_bound(double lambda, double t) { return 2.0 * lambda * t; }

}  // namespace levy
