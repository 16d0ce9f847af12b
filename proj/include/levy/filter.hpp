#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "levy/density.hpp"
#include "levy/model.hpp"
#include "levy/simulate.hpp"
#include "levy/stats.hpp"

namespace levy {

/// Observation Q_t = int_0^t h(X_s) ds + B_t on the uniform grid k dt.
struct ObservationPath {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> q;
  ObservationFn h = ObservationFn::zero();

  std::size_t steps() const { return q.empty() ? 0 : q.size() - 1; }
  double horizon() const { return times.empty() ? 0.0 : times.back(); }
  double increment(std::size_t k) const { return q[k + 1] - q[k]; }
};

/// Q increments h(X_{k dt}) dt + sqrt(dt) xi. Every k dt must be a skeleton
/// time of the path and dt must divide its horizon.
ObservationPath synthesize_observation(const SkeletonPath& true_path, const ObservationFn& h, double dt,
                                       Stream& rng);

/// Keeps every factor-th grid point.
ObservationPath coarsen(const ObservationPath& obs, std::size_t factor);

/// Truncates to the first `steps` increments.
ObservationPath truncate(const ObservationPath& obs, std::size_t steps);

/// Columns t,q.
void write_observation_csv(std::ostream& out, const ObservationPath& obs);
ObservationPath read_observation_csv(const std::string& path, const ObservationFn& h);

/// Weighted particle approximation of the law of (X_t, 1{tau > t}) under the
/// reference measure, with log-likelihood weights.
struct ParticleEnsemble {
  std::vector<double> states;
  std::vector<char> alive;
  std::vector<double> log_w;
  double t = 0.0;
  std::size_t step = 0;
  double ess = 0.0;
  std::size_t resamples = 0;

  static ParticleEnsemble initial(std::size_t n);

  std::size_t size() const { return states.size(); }
  double alive_fraction() const;
  /// (sum w)^2 / sum w^2 over all particles.
  double effective_sample_size() const;
};

/// Advances `steps` observation steps. Particles move under the reference
/// measure (exact Gaussian and jump increments, bridge-corrected killing);
/// each step adds h(X_left) dQ - h(X_left)^2 dt / 2 to every log-weight.
/// Systematic resampling of the whole ensemble is applied when
/// ess < resample_threshold * n; the weights are then reset to their common
/// mean so that unnormalized averages are unchanged.
/// Throws ObservationExhausted when the observation ends before t + steps dt.
ParticleEnsemble advance(ParticleEnsemble ensemble, const ObservationPath& obs, const ValidatedParams& p,
                         std::size_t steps, std::uint64_t seed, double resample_threshold = 0.5);

/// Same, updating in place.
void advance_in_place(ParticleEnsemble& ensemble, const ObservationPath& obs, const ValidatedParams& p,
                      std::size_t steps, std::uint64_t seed, double resample_threshold = 0.5);

/// Moves particles by `duration` without touching the weights.
void propagate_unweighted(ParticleEnsemble& ensemble, const ValidatedParams& p, double duration, double grid_dt,
                          std::uint64_t seed);

using StateFn = std::function<double(double)>;

/// sum w 1{alive} g(X) / sum w 1{alive}. Throws EnsembleExtinct without alive particles.
double conditional_expectation(const ParticleEnsemble& ensemble, const StateFn& g);

/// Ratio estimate with its delta-method standard error.
DensityEstimate weighted_estimate(const ParticleEnsemble& ensemble, const StateFn& g);

/// (1/n) sum w 1{alive} g(X), with w the unnormalized likelihood weights.
DensityEstimate unnormalized_mean(const ParticleEnsemble& ensemble, const StateFn& g);

/// Conditional density of tau at r > t given the observation up to t:
/// conditional_expectation of v -> f(r - t, x - v) read from the table.
double conditional_density(const ParticleEnsemble& ensemble, double r, const DensityTable& table);

/// P(tau = infinity | G_t) on {tau > t}: conditional_expectation of
/// v -> G(t_max, x - v), t_max the last table time. 0 when default is certain.
double conditional_defect(const ParticleEnsemble& ensemble, const DensityTable& table, const ValidatedParams& p);

struct ConditionalLaw {
  double t = 0.0;
  std::vector<double> r;
  std::vector<double> density;
  double defect = 0.0;
  bool on_event = true;
};

ConditionalLaw conditional_law(const ParticleEnsemble& ensemble, const std::vector<double>& r_grid,
                               const DensityTable& table, const ValidatedParams& p, bool on_event = true);

/// One row per observation step.
struct FilterRow {
  double t;
  double ess;
  double alive_fraction;
  double defect;
};

/// Runs the filter over the whole observation, recording ess, alive fraction
/// and conditional defect after every step. Stops early if all particles die.
std::vector<FilterRow> run_filter(ParticleEnsemble& ensemble, const ObservationPath& obs, const ValidatedParams& p,
                                  const DensityTable& table, std::uint64_t seed, double resample_threshold = 0.5);

}  // namespace levy
