#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "levy/density.hpp"
#include "levy/filter.hpp"
#include "levy/model.hpp"

namespace levy {

struct ResidualOptions {
  /// Disjoint particle clouds for the left side and each conditional expectation.
  bool independent_clouds = false;
  /// Denominator powers of the theorem statement instead of the proof display.
  bool literal_statement = false;
  /// Sub-ensembles used to estimate the Monte Carlo error.
  std::size_t batches = 10;
  double resample_threshold = 0.5;
};

/// Terms of
///   fbar(r,t) = f(r)/G(t)
///             + sum pi(h f(r-u)) / pi(G(t-u)) dQ_u
///             - sum pi(f(r-u)) pi(h G(t-u)) / pi(G(t-u))^2 dQ_u
///             + sum pi(f(r-u)) pi(h G(t-u))^2 / pi(G(t-u))^3 du
///             - sum pi(h f(r-u)) pi(h G(t-u)) / pi(G(t-u))^2 du,
/// pi_u the particle estimate of E(1{tau > u} . | G_u) normalized on {tau > u},
/// all sums left-point over the observation grid on [0, t).
struct ResidualReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  std::array<double, 5> terms{};
  double mc_stderr = 0.0;
  double batch_stderr = 0.0;
  double term1_stderr = 0.0;
  double dt = 0.0;
  std::size_t n_particles = 0;
  std::uint64_t seed = 0;
};

/// Residual of the conditional-density equation at (r, t) on one observation path.
/// The table must cover f at times in [r - t, r] and G at times in (0, t].
ResidualReport theorem1_residual(const ValidatedParams& p, const ObservationPath& obs, double r, double t,
                                 const DensityTable& table, std::size_t n_particles, std::uint64_t seed,
                                 const ResidualOptions& options = {});

/// Unnormalized identity for a payoff decided after t:
///   lhs = E0(payoff L_t | Q up to t),
///   rhs = E0(payoff) + sum E0(1{tau > u} L_u h(X_u) k(u, X_u)) dQ_u,
/// both sides from one particle cloud without resampling.
struct ZakaiReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double difference = 0.0;
  double prior = 0.0;
  double integral = 0.0;
  double stderr_combined = 0.0;
  double dt = 0.0;
  std::size_t n_particles = 0;
  std::uint64_t seed = 0;
};

/// Payoff 1{tau > T}, kernel G(T - u, x - v).
ZakaiReport zakai_identity_check(const ValidatedParams& p, const ObservationPath& obs, double T, double t,
                                 const DensityTable& table, std::size_t n_particles, std::uint64_t seed);

/// Payoff 1{a < tau <= b}, kernel G(a - u, x - v) - G(b - u, x - v).
ZakaiReport interval_identity_check(const ValidatedParams& p, const ObservationPath& obs, double a, double b,
                                    double t, const DensityTable& table, std::size_t n_particles,
                                    std::uint64_t seed);

struct BoundCheck {
  std::string name;
  bool passed = true;
  double value = 0.0;
  double bound = 0.0;
  double std_error = 0.0;
  std::size_t cases = 0;
  std::size_t violations = 0;
};

struct BoundsReport {
  std::vector<BoundCheck> checks;
  bool all_passed() const;
};

struct BoundsOptions {
  std::size_t jump_time_draws = 100000;
};

/// tilde_f against its explicit bound on a log grid, the jump-time bound by
/// Monte Carlo for (lambda, t) in {0.5, 1, 2}^2, and A(mu, sigma, m, t)
/// against its bound on a parameter grid with sigma^2 + t <= 1.
BoundsReport bounds_suite(const ValidatedParams& p, std::uint64_t seed, const BoundsOptions& options = {});

/// Monte Carlo mean of sqrt(T_{N_t} / (t - T_{N_t})), 0 on {N_t = 0}.
DensityEstimate jump_time_ratio_mean(double lambda, double t, std::size_t n, std::uint64_t seed);

struct KsReport {
  double statistic = 0.0;
  double critical = 0.0;
  double p_value = 0.0;
  bool passed = false;
  std::size_t n = 0;
};

using Cdf = std::function<double(double)>;

/// First n uncensored passage times (tau <= horizon) in path order.
std::vector<double> sample_passage_times(const ValidatedParams& p, std::size_t n, double horizon, double grid_dt,
                                         std::uint64_t seed);

/// Normalized cumulative trapezoid of the table density at barrier x over the
/// table's t grid, as a piecewise-linear CDF on [0, t_max].
Cdf table_cdf(const DensityTable& table);

/// Inverse-transform draws from table_cdf.
std::vector<double> sample_from_table(const DensityTable& table, std::size_t n, std::uint64_t seed);

/// CDF of tau given tau <= horizon without jumps.
Cdf analytic_conditional_cdf(double x, double m, double horizon);

KsReport ks_test(const std::vector<double>& sample, const Cdf& cdf, double alpha = 0.01);

/// Passage times sampled from p against the table CDF, independent seeds.
KsReport ks_goodness(const ValidatedParams& p, std::size_t n_samples, const DensityTable& table, double grid_dt,
                     std::uint64_t seed);

/// Default extent of the z grid: x + 8 sqrt(t_max) + 4 lambda t_max |E Y|.
double auto_z_max(const ValidatedParams& p, double t_max);

struct LadderRung {
  double dt;
  std::size_t n_particles;
};

struct LadderOptions {
  double r = 2.0;
  double t = 0.5;
  std::vector<LadderRung> rungs{{0.01, 1000}, {0.005, 10000}, {0.0025, 40000}};
  std::size_t seeds = 20;
  std::uint64_t base_seed = 1;
  std::size_t table_paths = 200000;
  std::size_t z_nodes = 81;
  /// 0 selects auto_z_max.
  double z_max = 0.0;
  /// Multiple of the median standard error allowed for the median |residual|.
  double tolerance = 5.0;
  ResidualOptions residual;
};

struct LadderRungResult {
  LadderRung rung{};
  std::vector<ResidualReport> reports;
  double median_abs_residual = 0.0;
  double median_stderr = 0.0;
  bool within_tolerance = false;
};

struct LadderResult {
  std::vector<LadderRungResult> rungs;
  bool monotone = false;
  bool passed = false;
};

/// For each seed: one true path and observation at the finest rung, coarsened
/// for the others, and one table on the finest time grid over [0, r]. Passes
/// when the finest rung's median |residual| is within tolerance times its
/// median standard error and the medians do not increase along the ladder.
LadderResult theorem1_ladder(const ValidatedParams& p, const ObservationFn& h, const LadderOptions& options);

struct ZakaiOptions {
  double T = 1.0;
  double t = 0.5;
  double dt = 0.0025;
  std::size_t n_particles = 40000;
  std::size_t seeds = 20;
  std::uint64_t base_seed = 1;
  std::size_t table_paths = 100000;
  std::size_t z_nodes = 81;
  double z_max = 0.0;
  double tolerance = 5.0;
};

struct ZakaiSuiteResult {
  std::vector<ZakaiReport> reports;
  std::size_t within = 0;
  bool passed = false;
};

/// zakai_identity_check over independent seeds, each with its own observation and table.
ZakaiSuiteResult zakai_suite(const ValidatedParams& p, const ObservationFn& h, const ZakaiOptions& options);

}  // namespace levy
