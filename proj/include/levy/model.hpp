#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "levy/rng.hpp"

namespace levy {

enum class JumpKind { PointMass, Exponential, NegatedExponential, Gaussian, TwoPoint, Empirical };

/// Law F_Y of the jump sizes of the compound Poisson part.
///
/// cdf() is the right-continuous distribution function F_Y(y); cdf_left()
/// is its left limit F_Y(y-). The two differ exactly by the atom at y.
class JumpLaw {
 public:
  static JumpLaw point_mass(double a);
  static JumpLaw exponential(double rate);
  static JumpLaw negated_exponential(double rate);
  static JumpLaw gaussian(double mu, double sigma);
  /// P(Y = a) = p, P(Y = b) = 1 - p.
  static JumpLaw two_point(double a, double p, double b);
  /// Right-continuous step CDF of the given sample.
  static JumpLaw empirical(std::vector<double> sample);

  JumpKind kind() const { return kind_; }
  double cdf(double y) const;
  double cdf_left(double y) const;
  double atom(double y) const { return cdf(y) - cdf_left(y); }
  double sample(Stream& rng) const;
  double mean() const;
  bool atomless() const { return kind_ == JumpKind::Exponential || kind_ == JumpKind::NegatedExponential ||
                                 kind_ == JumpKind::Gaussian; }

  double param1() const { return p1_; }
  double param2() const { return p2_; }
  double param3() const { return p3_; }
  const std::vector<double>& support() const;
  std::string describe() const;

 private:
  JumpLaw(JumpKind kind, double p1, double p2, double p3) : kind_(kind), p1_(p1), p2_(p2), p3_(p3) {}

  JumpKind kind_;
  double p1_;
  double p2_;
  double p3_;
  std::shared_ptr<const std::vector<double>> sorted_;
};

enum class ObservationKind { Constant, ClippedLinear, IndicatorAbove, BoundedLogistic };

/// Bounded observation function h with a declared sup norm.
class ObservationFn {
 public:
  static ObservationFn constant(double c);
  static ObservationFn zero() { return constant(0.0); }
  /// clamp(slope * y, -clip_at, clip_at)
  static ObservationFn clipped_linear(double slope, double clip_at);
  /// level * 1{y > threshold}
  static ObservationFn indicator_above(double threshold, double level);
  /// bound / (1 + exp(-y / scale))
  static ObservationFn bounded_logistic(double scale, double bound);

  ObservationKind kind() const { return kind_; }
  double operator()(double y) const { return eval(y); }
  double eval(double y) const;
  double sup_norm() const { return sup_; }
  bool is_zero() const { return kind_ == ObservationKind::Constant && p1_ == 0.0; }
  double param1() const { return p1_; }
  std::string describe() const;

 private:
  ObservationFn(ObservationKind kind, double p1, double sup) : kind_(kind), p1_(p1), sup_(sup) {}

  ObservationKind kind_;
  double p1_;
  double sup_;
  double level_ = 0.0;
};

/// Drift m, jump intensity lambda, jump law and barrier x of
///   X_t = m t + W_t + sum_{i <= N_t} Y_i,   tau_x = inf{t > 0 : X_t >= x}.
struct ModelParams {
  double m = 0.0;
  double lambda = 0.0;
  JumpLaw jump = JumpLaw::point_mass(0.0);
  double x = 1.0;
};

/// Parameters that passed validate_params(). The only form accepted downstream.
class ValidatedParams {
 public:
  const ModelParams& get() const { return p_; }
  double m() const { return p_.m; }
  double lambda() const { return p_.lambda; }
  const JumpLaw& jump() const { return p_.jump; }
  double barrier() const { return p_.x; }

  /// Same process, different barrier (spatial homogeneity of the increments).
  ValidatedParams with_barrier(double z) const;

 private:
  explicit ValidatedParams(ModelParams p) : p_(std::move(p)) {}
  friend ValidatedParams validate_params(const ModelParams& p);

  ModelParams p_;
};

/// Checks x > 0, lambda >= 0 and the monotonicity of the jump CDF on a probe grid.
ValidatedParams validate_params(const ModelParams& p);

/// Whether tau_x < infinity almost surely: m + E[Y_1] >= 0 when lambda > 0,
/// m >= 0 when lambda = 0. Throws InfiniteJumpMean if E[Y_1] is not finite.
bool is_default_certain(const ModelParams& p);

/// Model and observation function read from a `key = value` config file.
struct ModelConfig {
  ModelParams params;
  ObservationFn h = ObservationFn::zero();
};

ModelConfig parse_config(std::istream& in);
ModelConfig load_config(const std::string& path);
std::string to_config_text(const ModelConfig& config);

}  // namespace levy
