#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "levy/model.hpp"
#include "levy/rng.hpp"

namespace levy {

/// Trajectory of X on the union of a time grid and the jump times.
/// values_post is the canonical (right-continuous) value; values_pre is the
/// left limit and differs from it only at jump times.
struct SkeletonPath {
  std::vector<double> times;
  std::vector<double> values_pre;
  std::vector<double> values_post;
  std::vector<char> is_jump;
  std::vector<double> jump_times;
  std::vector<double> jump_sizes;
  double horizon = 0.0;

  std::size_t size() const { return times.size(); }
};

struct PassageSample {
  static constexpr double kCensored = std::numeric_limits<double>::infinity();

  double tau = kCensored;
  bool crossed_at_jump = false;
  std::optional<SkeletonPath> path;

  bool censored() const { return tau == kCensored; }
};

/// Jump times of a rate-lambda Poisson process on [0, horizon).
std::vector<double> sample_jump_times(Stream& rng, double horizon, double lambda);

/// Uniform grid 0, dt, 2 dt, ..., ending exactly at horizon.
std::vector<double> uniform_grid(double horizon, double dt);

/// Simulates X on the uniform grid of step grid_dt over [0, horizon] plus the jump times.
SkeletonPath simulate_skeleton(const ValidatedParams& p, double horizon, double grid_dt, Stream& rng);

/// Same, on an explicit increasing grid starting at 0; its last point is the horizon.
SkeletonPath simulate_skeleton_on(const ValidatedParams& p, std::span<const double> grid, Stream& rng);

/// P(max of a Brownian bridge from a to b over time dt reaches x), for a, b < x.
double bridge_crossing_probability(double a, double b, double x, double dt);

/// Maximum of a Brownian bridge from a to b over time dt, given a uniform u:
/// the level z with bridge_crossing_probability(a, b, z, dt) = u.
double bridge_maximum(double a, double b, double dt, double u);

/// First passage of the skeleton over x. Segments are visited in time order:
/// within a segment the bridge is tested first (when `bridge` is set), then
/// the left limit and the value at the closing node.
PassageSample detect_first_passage(const SkeletonPath& path, double x, Stream& rng, bool bridge = true);

/// Running maximum of X along the skeleton including the Brownian-bridge
/// maxima between nodes: entry k is sup_{s <= times[k]} X_s in law, so that
/// {tau_z > times[k]} = {running[k] < z} simultaneously for every barrier z.
std::vector<double> running_maximum(const SkeletonPath& path, Stream& rng);

/// simulate_skeleton followed by detect_first_passage with the bridge correction.
PassageSample sample_tau(const ValidatedParams& p, double horizon, double grid_dt, Stream& rng,
                         bool keep_path = false);

/// CSV with columns t,x_pre,x_post,is_jump.
void write_path_csv(std::ostream& out, const SkeletonPath& path);

}  // namespace levy
