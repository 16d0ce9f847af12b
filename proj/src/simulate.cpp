#include "levy/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "levy/error.hpp"
#include "levy/io.hpp"

namespace levy {

std::vector<double> sample_jump_times(Stream& rng, double horizon, double lambda) {
  std::vector<double> times;
  if (!(lambda > 0.0)) return times;
  for (double t = rng.exponential(lambda); t < horizon; t += rng.exponential(lambda)) times.push_back(t);
  return times;
}

std::vector<double> uniform_grid(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0) || dt > horizon * (1.0 + 1e-12)) {
    throw Error(ErrorCode::PreconditionViolated, "need horizon > 0 and 0 < dt <= horizon");
  }
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / dt - 1e-9)));
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) grid[k] = static_cast<double>(k) * dt;
  grid[steps] = horizon;
  return grid;
}

SkeletonPath simulate_skeleton(const ValidatedParams& p, double horizon, double grid_dt, Stream& rng) {
  const auto grid = uniform_grid(horizon, grid_dt);
  return simulate_skeleton_on(p, grid, rng);
}

SkeletonPath simulate_skeleton_on(const ValidatedParams& p, std::span<const double> grid, Stream& rng) {
  if (grid.size() < 2 || grid.front() != 0.0) {
    throw Error(ErrorCode::PreconditionViolated, "skeleton grid must start at 0 and have two points");
  }
  SkeletonPath path;
  path.horizon = grid.back();
  path.jump_times = sample_jump_times(rng, path.horizon, p.lambda());
  path.jump_sizes.reserve(path.jump_times.size());
  for (std::size_t j = 0; j < path.jump_times.size(); ++j) path.jump_sizes.push_back(p.jump().sample(rng));

  const std::size_t n = grid.size() + path.jump_times.size();
  path.times.reserve(n);
  path.is_jump.reserve(n);
  std::size_t g = 0;
  std::size_t j = 0;
  while (g < grid.size() || j < path.jump_times.size()) {
    if (j < path.jump_times.size() && (g == grid.size() || path.jump_times[j] < grid[g])) {
      path.times.push_back(path.jump_times[j++]);
      path.is_jump.push_back(1);
    } else if (j < path.jump_times.size() && path.jump_times[j] == grid[g]) {
      path.times.push_back(grid[g++]);
      path.is_jump.push_back(1);
      ++j;
    } else {
      path.times.push_back(grid[g++]);
      path.is_jump.push_back(0);
    }
  }

  const double m = p.m();
  path.values_pre.resize(path.times.size());
  path.values_post.resize(path.times.size());
  path.values_pre[0] = 0.0;
  path.values_post[0] = 0.0;
  j = 0;
  for (std::size_t k = 1; k < path.times.size(); ++k) {
    const double dt = path.times[k] - path.times[k - 1];
    path.values_pre[k] = path.values_post[k - 1] + rng.normal(m * dt, std::sqrt(dt));
    path.values_post[k] = path.values_pre[k] + (path.is_jump[k] ? path.jump_sizes[j++] : 0.0);
  }
  return path;
}

double bridge_crossing_probability(double a, double b, double x, double dt) {
  if (a >= x || b >= x) return 1.0;
  return std::exp(-2.0 * (x - a) * (x - b) / dt);
}

double bridge_maximum(double a, double b, double dt, double u) {
  const double d = a - b;
  return 0.5 * (a + b + std::sqrt(d * d - 2.0 * dt * std::log(u)));
}

PassageSample detect_first_passage(const SkeletonPath& path, double x, Stream& rng, bool bridge) {
  PassageSample out;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const double a = path.values_post[k];
    const double b = path.values_pre[k + 1];
    const double dt = path.times[k + 1] - path.times[k];
    if (bridge && b < x && rng.uniform() < bridge_crossing_probability(a, b, x, dt)) {
      out.tau = 0.5 * (path.times[k] + path.times[k + 1]);
      return out;
    }
    if (path.values_post[k + 1] >= x || b >= x) {
      out.tau = path.times[k + 1];
      out.crossed_at_jump = b < x;
      return out;
    }
  }
  return out;
}

std::vector<double> running_maximum(const SkeletonPath& path, Stream& rng) {
  std::vector<double> running(path.size());
  running[0] = path.values_post[0];
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const double dt = path.times[k + 1] - path.times[k];
    const double peak = bridge_maximum(path.values_post[k], path.values_pre[k + 1], dt, rng.uniform());
    running[k + 1] = std::max({running[k], peak, path.values_post[k + 1]});
  }
  return running;
}

PassageSample sample_tau(const ValidatedParams& p, double horizon, double grid_dt, Stream& rng, bool keep_path) {
  SkeletonPath path = simulate_skeleton(p, horizon, grid_dt, rng);
  PassageSample out = detect_first_passage(path, p.barrier(), rng, true);
  if (keep_path) out.path = std::move(path);
  return out;
}

void write_path_csv(std::ostream& out, const SkeletonPath& path) {
  out << "t,x_pre,x_post,is_jump\n";
  for (std::size_t k = 0; k < path.size(); ++k) {
    out << csv_row({format_double(path.times[k]), format_double(path.values_pre[k]),
                    format_double(path.values_post[k]), path.is_jump[k] ? "1" : "0"});
  }
}

}  // namespace levy
