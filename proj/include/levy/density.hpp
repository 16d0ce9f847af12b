#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "levy/model.hpp"
#include "levy/stats.hpp"

namespace levy {

/// Monte Carlo estimate of the first-passage density f(t, x) from
///   f(t, x) = lambda E[1{tau > t} (1 - F_Y)(x - X_t)] + E[1{tau > T_{N_t}} tilde_f(t - T_{N_t}, x - X_{T_{N_t}})],
/// both terms averaged over the same paths. Throws NonPositiveTime for t <= 0.
DensityEstimate estimate_f(const ValidatedParams& p, double t, std::size_t n_paths, double grid_dt,
                           std::uint64_t seed);

/// Fraction of paths with no passage by t (bridge corrected). Exactly 1 at t = 0;
/// t = infinity is evaluated at horizon_for_censor.
DensityEstimate estimate_G(const ValidatedParams& p, double t, double horizon_for_censor, std::size_t n_paths,
                           double grid_dt, std::uint64_t seed);

/// Per-path mass balance: trapezoid integral of the density estimator over
/// [0, horizon] on a grid of step `step`, plus the survival indicator at horizon.
struct MassBalance {
  DensityEstimate integral;
  DensityEstimate survival;
  DensityEstimate total;
};

MassBalance mass_balance(const ValidatedParams& p, double horizon, double step, std::size_t n_paths,
                         std::uint64_t seed);

/// Truncation horizon standing in for t = infinity: 50 / |m + lambda E Y| when
/// the default is not certain, 0 when it is (no truncation needed).
double defect_horizon(const ValidatedParams& p);

/// Grid on [0, z_max] with nodes packed quadratically towards 0.
std::vector<double> quadratic_grid(double z_max, std::size_t count);

struct TableOptions {
  bool with_density = true;
  double grid_dt = 0.01;
  /// Relative tolerance of the interpolation probe; negative disables it.
  double interp_tol = 0.05;
};

/// f and G tabulated on t_grid x z_grid, where z is the distance to the
/// barrier: G(t, z) = P(tau_z > t) for the process started at 0.
class DensityTable {
 public:
  struct Lookup {
    double value;
    bool clamped;
  };

  DensityTable() = default;
  DensityTable(ModelParams params, std::vector<double> t_grid, std::vector<double> z_grid, std::size_t n_paths,
               std::uint64_t seed, bool with_density);

  const std::vector<double>& t_grid() const { return t_; }
  const std::vector<double>& z_grid() const { return z_; }
  std::size_t n_paths() const { return n_paths_; }
  std::uint64_t seed() const { return seed_; }
  const ModelParams& params() const { return params_; }
  bool has_density() const { return with_density_; }

  DensityEstimate& f_node(std::size_t i, std::size_t j) { return f_[i * z_.size() + j]; }
  DensityEstimate& G_node(std::size_t i, std::size_t j) { return g_[i * z_.size() + j]; }
  const DensityEstimate& f_node(std::size_t i, std::size_t j) const { return f_[i * z_.size() + j]; }
  const DensityEstimate& G_node(std::size_t i, std::size_t j) const { return g_[i * z_.size() + j]; }

  /// Bilinear interpolation; queries outside the grid clamp and are flagged.
  Lookup f(double t, double z) const;
  Lookup G(double t, double z) const;

  /// Standard error at the node nearest to (t, z).
  double f_stderr(double t, double z) const;
  double G_stderr(double t, double z) const;

  /// Columns t,z,f_value,f_stderr,G_value,G_stderr.
  void write_csv(std::ostream& out) const;
  /// Params, seed and n_paths as JSON.
  std::string sidecar_json() const;

 private:
  Lookup interpolate(const std::vector<DensityEstimate>& values, double t, double z) const;
  std::size_t nearest(const std::vector<double>& grid, double v) const;

  ModelParams params_;
  std::vector<double> t_;
  std::vector<double> z_;
  std::vector<DensityEstimate> f_;
  std::vector<DensityEstimate> g_;
  std::size_t n_paths_ = 0;
  std::uint64_t seed_ = 0;
  bool with_density_ = false;
};

/// Estimates f and G at every node from one set of paths: each path is
/// simulated once and its running maximum (with bridge maxima) decides
/// survival for all barriers z simultaneously. Throws GridTooCoarse when the
/// interpolation probe exceeds options.interp_tol.
DensityTable build_table(const ValidatedParams& p, std::vector<double> t_grid, std::vector<double> z_grid,
                         std::size_t n_paths, std::uint64_t seed, const TableOptions& options = {});

}  // namespace levy
