#include "levy/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "levy/analytic.hpp"
#include "levy/error.hpp"
#include "levy/io.hpp"
#include "levy/parallel.hpp"
#include "levy/simulate.hpp"

namespace levy {

namespace {

/// State of one path at a table time.
struct NodeState {
  double x = 0.0;
  double running = 0.0;
  double jump_time = 0.0;
  double jump_value = 0.0;
  double jump_running = 0.0;
};

std::vector<NodeState> trace_nodes(const SkeletonPath& path, const std::vector<double>& running,
                                   const std::vector<double>& node_times) {
  std::vector<NodeState> out(node_times.size());
  NodeState last;
  std::size_t j = 0;
  while (j < node_times.size() && node_times[j] <= 0.0) out[j++] = last;
  for (std::size_t k = 1; k < path.size() && j < node_times.size(); ++k) {
    if (path.is_jump[k]) {
      last.jump_time = path.times[k];
      last.jump_value = path.values_post[k];
      last.jump_running = running[k];
    }
    if (path.times[k] == node_times[j]) {
      last.x = path.values_post[k];
      last.running = running[k];
      out[j++] = last;
    }
  }
  return out;
}

double density_term(const NodeState& s, double t, double z, double lambda, const JumpLaw& jump, double m) {
  double v = 0.0;
  if (lambda > 0.0 && s.running < z) v += lambda * (1.0 - jump.cdf(z - s.x));
  if (s.jump_running < z && t > s.jump_time) v += tilde_f(t - s.jump_time, z - s.jump_value, m);
  return v;
}

double f_zero_at(const JumpLaw& jump, double lambda, double z) {
  const double fx = jump.cdf(z);
  const double fl = jump.cdf_left(z);
  return 0.5 * lambda * (2.0 - fx - fl) + 0.25 * lambda * (fx - fl);
}

std::vector<double> merged_grid(double horizon, double dt, const std::vector<double>& nodes) {
  std::vector<double> grid = uniform_grid(horizon, std::min(dt, horizon));
  grid.insert(grid.end(), nodes.begin(), nodes.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

void require_increasing(const std::vector<double>& g, const char* name) {
  if (g.empty()) throw Error(ErrorCode::PreconditionViolated, std::string(name) + " is empty");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!(g[i] > g[i - 1])) throw Error(ErrorCode::PreconditionViolated, std::string(name) + " is not increasing");
  }
}

DensityEstimate binomial(std::size_t hits, std::size_t n) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double se = n > 1 ? std::sqrt(p * (1.0 - p) / static_cast<double>(n - 1)) : 0.0;
  return {p, se, n};
}

}  // namespace

DensityEstimate estimate_f(const ValidatedParams& p, double t, std::size_t n_paths, double grid_dt,
                           std::uint64_t seed) {
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "estimate_f needs t > 0");
  if (n_paths == 0) throw Error(ErrorCode::PreconditionViolated, "estimate_f needs n_paths > 0");
  const double x = p.barrier();
  if (p.lambda() == 0.0) {
    // Without jumps every path contributes tilde_f(t, x, m).
    return {tilde_f(t, x, p.m()), 0.0, n_paths};
  }
  const auto grid = uniform_grid(t, std::min(grid_dt, t));
  const std::vector<double> node{t};
  std::vector<MeanAccumulator> parts(kReductionChunks);
  for_each_chunk(n_paths, kReductionChunks, [&](std::size_t c, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Stream rng(seed, stream_tag::kDensity, i);
      const SkeletonPath path = simulate_skeleton_on(p, grid, rng);
      const auto running = running_maximum(path, rng);
      const NodeState s = trace_nodes(path, running, node)[0];
      parts[c].add(density_term(s, t, x, p.lambda(), p.jump(), p.m()));
    }
  });
  MeanAccumulator total;
  for (const auto& part : parts) total.merge(part);
  return total.estimate();
}

DensityEstimate estimate_G(const ValidatedParams& p, double t, double horizon_for_censor, std::size_t n_paths,
                           double grid_dt, std::uint64_t seed) {
  if (t < 0.0) throw Error(ErrorCode::PreconditionViolated, "estimate_G needs t >= 0");
  if (n_paths == 0) throw Error(ErrorCode::PreconditionViolated, "estimate_G needs n_paths > 0");
  if (t == 0.0) return {1.0, 0.0, n_paths};
  if (std::isinf(t)) t = horizon_for_censor;
  const auto grid = uniform_grid(t, std::min(grid_dt, t));
  std::vector<std::size_t> alive(kReductionChunks, 0);
  for_each_chunk(n_paths, kReductionChunks, [&](std::size_t c, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Stream rng(seed, stream_tag::kSurvival, i);
      const SkeletonPath path = simulate_skeleton_on(p, grid, rng);
      if (detect_first_passage(path, p.barrier(), rng, true).censored()) ++alive[c];
    }
  });
  std::size_t hits = 0;
  for (auto a : alive) hits += a;
  return binomial(hits, n_paths);
}

MassBalance mass_balance(const ValidatedParams& p, double horizon, double step, std::size_t n_paths,
                         std::uint64_t seed) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::NonPositiveTime, "mass_balance needs horizon > 0");
  if (n_paths == 0) throw Error(ErrorCode::PreconditionViolated, "mass_balance needs n_paths > 0");
  const auto grid = uniform_grid(horizon, step);
  const double x = p.barrier();
  const double f0 = f_at_zero(p);
  struct Parts {
    MeanAccumulator integral, survival, total;
  };
  std::vector<Parts> parts(kReductionChunks);
  for_each_chunk(n_paths, kReductionChunks, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> f(grid.size());
    for (std::size_t i = b; i < e; ++i) {
      Stream rng(seed, stream_tag::kDensity, i);
      const SkeletonPath path = simulate_skeleton_on(p, grid, rng);
      const auto running = running_maximum(path, rng);
      const auto states = trace_nodes(path, running, grid);
      f[0] = f0;
      for (std::size_t k = 1; k < grid.size(); ++k) {
        f[k] = density_term(states[k], grid[k], x, p.lambda(), p.jump(), p.m());
      }
      const double integral = trapezoid(grid, f);
      const double survival = states.back().running < x ? 1.0 : 0.0;
      parts[c].integral.add(integral);
      parts[c].survival.add(survival);
      parts[c].total.add(integral + survival);
    }
  });
  Parts all;
  for (const auto& part : parts) {
    all.integral.merge(part.integral);
    all.survival.merge(part.survival);
    all.total.merge(part.total);
  }
  return {all.integral.estimate(), all.survival.estimate(), all.total.estimate()};
}

double defect_horizon(const ValidatedParams& p) {
  if (is_default_certain(p.get())) return 0.0;
  const double drift = p.m() + (p.lambda() > 0.0 ? p.lambda() * p.jump().mean() : 0.0);
  return 50.0 / std::abs(drift);
}

std::vector<double> quadratic_grid(double z_max, std::size_t count) {
  if (count < 2) return {z_max};
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(count - 1);
    g[i] = z_max * u * u;
  }
  g.back() = z_max;
  return g;
}

DensityTable::DensityTable(ModelParams params, std::vector<double> t_grid, std::vector<double> z_grid,
                           std::size_t n_paths, std::uint64_t seed, bool with_density)
    : params_(std::move(params)),
      t_(std::move(t_grid)),
      z_(std::move(z_grid)),
      f_(t_.size() * z_.size()),
      g_(t_.size() * z_.size()),
      n_paths_(n_paths),
      seed_(seed),
      with_density_(with_density) {}

DensityTable::Lookup DensityTable::interpolate(const std::vector<DensityEstimate>& values, double t,
                                               double z) const {
  bool clamped = false;
  auto locate = [&clamped](const std::vector<double>& g, double v, std::size_t& i, double& w) {
    if (g.size() == 1) {
      clamped = clamped || v != g[0];
      i = 0;
      w = 0.0;
      return;
    }
    if (v <= g.front()) {
      clamped = clamped || v < g.front();
      i = 0;
      w = 0.0;
      return;
    }
    if (v >= g.back()) {
      clamped = clamped || v > g.back();
      i = g.size() - 2;
      w = 1.0;
      return;
    }
    i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), v) - g.begin()) - 1;
    w = (v - g[i]) / (g[i + 1] - g[i]);
  };
  std::size_t i = 0, j = 0;
  double wt = 0.0, wz = 0.0;
  locate(t_, t, i, wt);
  locate(z_, z, j, wz);
  const std::size_t nz = z_.size();
  auto at = [&](std::size_t a, std::size_t b) { return values[a * nz + b].value; };
  const std::size_t i1 = t_.size() == 1 ? i : i + 1;
  const std::size_t j1 = nz == 1 ? j : j + 1;
  double v = (1.0 - wt) * ((1.0 - wz) * at(i, j) + (wz > 0.0 ? wz * at(i, j1) : 0.0));
  if (wt > 0.0) v += wt * ((1.0 - wz) * at(i1, j) + (wz > 0.0 ? wz * at(i1, j1) : 0.0));
  return {v, clamped};
}

DensityTable::Lookup DensityTable::f(double t, double z) const {
  if (!with_density_) throw Error(ErrorCode::PreconditionViolated, "table was built without densities");
  return interpolate(f_, t, z);
}

DensityTable::Lookup DensityTable::G(double t, double z) const { return interpolate(g_, t, z); }

std::size_t DensityTable::nearest(const std::vector<double>& grid, double v) const {
  auto it = std::lower_bound(grid.begin(), grid.end(), v);
  if (it == grid.end()) return grid.size() - 1;
  const auto i = static_cast<std::size_t>(it - grid.begin());
  if (i > 0 && v - grid[i - 1] < grid[i] - v) return i - 1;
  return i;
}

double DensityTable::f_stderr(double t, double z) const { return f_node(nearest(t_, t), nearest(z_, z)).std_error; }

double DensityTable::G_stderr(double t, double z) const { return G_node(nearest(t_, t), nearest(z_, z)).std_error; }

void DensityTable::write_csv(std::ostream& out) const {
  out << "t,z,f_value,f_stderr,G_value,G_stderr\n";
  for (std::size_t i = 0; i < t_.size(); ++i) {
    for (std::size_t j = 0; j < z_.size(); ++j) {
      const auto& f = f_node(i, j);
      const auto& g = G_node(i, j);
      out << csv_row({format_double(t_[i]), format_double(z_[j]),
                      with_density_ ? format_double(f.value) : "nan",
                      with_density_ ? format_double(f.std_error) : "nan", format_double(g.value),
                      format_double(g.std_error)});
    }
  }
}

std::string DensityTable::sidecar_json() const {
  nlohmann::ordered_json j;
  j["m"] = params_.m;
  j["lambda"] = params_.lambda;
  j["jump"] = params_.jump.describe();
  j["barrier"] = params_.x;
  j["seed"] = seed_;
  j["n_paths"] = n_paths_;
  j["t_nodes"] = t_.size();
  j["z_nodes"] = z_.size();
  j["t_max"] = t_.back();
  j["z_max"] = z_.back();
  j["with_density"] = with_density_;
  j["defect_truncation_horizon"] = t_.back();
  return j.dump(2) + "\n";
}

namespace {

void probe_interpolation(const DensityTable& table, bool density, double tol) {
  const auto& t = table.t_grid();
  const auto& z = table.z_grid();
  auto node = [&](std::size_t i, std::size_t j) -> const DensityEstimate& {
    return density ? table.f_node(i, j) : table.G_node(i, j);
  };
  double scale = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] <= 0.0) continue;
    for (std::size_t j = 0; j < z.size(); ++j) scale = std::max(scale, std::abs(node(i, j).value));
  }
  if (scale == 0.0) return;
  auto check = [&](double left, double mid, double right, const DensityEstimate& a, const DensityEstimate& b,
                   const DensityEstimate& c, double where_t, double where_z) {
    const double w = (mid - left) / (right - left);
    const double linear = (1.0 - w) * a.value + w * c.value;
    const double noise = 3.0 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error +
                                         c.std_error * c.std_error);
    if (std::abs(b.value - linear) - noise > tol * scale) {
      throw Error(ErrorCode::GridTooCoarse,
                  std::string(density ? "f" : "G") + " interpolation probe failed near t=" +
                      format_double(where_t) + ", z=" + format_double(where_z));
    }
  };
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] <= 0.0) continue;
    for (std::size_t j = 1; j + 1 < z.size(); ++j) {
      if (z[j - 1] <= 0.0) continue;
      check(z[j - 1], z[j], z[j + 1], node(i, j - 1), node(i, j), node(i, j + 1), t[i], z[j]);
    }
  }
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    if (t[i - 1] <= 0.0) continue;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (z[j] <= 0.0) continue;
      check(t[i - 1], t[i], t[i + 1], node(i - 1, j), node(i, j), node(i + 1, j), t[i], z[j]);
    }
  }
}

}  // namespace

DensityTable build_table(const ValidatedParams& p, std::vector<double> t_grid, std::vector<double> z_grid,
                         std::size_t n_paths, std::uint64_t seed, const TableOptions& options) {
  require_increasing(t_grid, "t_grid");
  require_increasing(z_grid, "z_grid");
  if (t_grid.front() < 0.0) throw Error(ErrorCode::PreconditionViolated, "t_grid must be >= 0");
  if (z_grid.front() < 0.0) throw Error(ErrorCode::PreconditionViolated, "z_grid must be >= 0");
  if (n_paths == 0) throw Error(ErrorCode::PreconditionViolated, "build_table needs n_paths > 0");

  const std::size_t nt = t_grid.size();
  const std::size_t nz = z_grid.size();
  const double lambda = p.lambda();
  const double m = p.m();
  const bool mc_density = options.with_density && lambda > 0.0;
  DensityTable table(p.get(), t_grid, z_grid, n_paths, seed, options.with_density);

  const double t_max = t_grid.back();
  std::vector<double> positive;
  for (double t : t_grid) {
    if (t > 0.0) positive.push_back(t);
  }

  std::vector<std::size_t> survivors(nt * nz, 0);
  std::vector<MeanAccumulator> f_acc(mc_density ? nt * nz : 0);
  if (t_max > 0.0) {
    const auto grid = merged_grid(t_max, options.grid_dt, positive);
    // Fewer chunks for large tables keeps the per-chunk accumulators bounded;
    // the count depends only on the table shape.
    const std::size_t cells = nt * nz;
    const std::size_t chunks = std::clamp<std::size_t>(4'000'000 / std::max<std::size_t>(cells, 1), 1,
                                                       kReductionChunks);
    std::vector<std::vector<std::uint32_t>> counts(chunks);
    std::vector<std::vector<MeanAccumulator>> accs(chunks);
    for_each_chunk(n_paths, chunks, [&](std::size_t c, std::size_t b, std::size_t e) {
      auto& diff = counts[c];
      diff.assign(positive.size() * (nz + 1), 0);
      auto& acc = accs[c];
      if (mc_density) acc.assign(positive.size() * nz, MeanAccumulator{});
      for (std::size_t i = b; i < e; ++i) {
        Stream rng(seed, stream_tag::kTable, i);
        const SkeletonPath path = simulate_skeleton_on(p, grid, rng);
        const auto running = running_maximum(path, rng);
        const auto states = trace_nodes(path, running, positive);
        for (std::size_t k = 0; k < positive.size(); ++k) {
          const auto first = static_cast<std::size_t>(
              std::upper_bound(z_grid.begin(), z_grid.end(), states[k].running) - z_grid.begin());
          ++diff[k * (nz + 1) + first];
          if (mc_density) {
            for (std::size_t j = 0; j < nz; ++j) {
              acc[k * nz + j].add(density_term(states[k], positive[k], z_grid[j], lambda, p.jump(), m));
            }
          }
        }
      }
    });
    const std::size_t offset = nt - positive.size();
    for (std::size_t c = 0; c < chunks; ++c) {
      if (counts[c].empty()) continue;
      for (std::size_t k = 0; k < positive.size(); ++k) {
        std::size_t run = 0;
        for (std::size_t j = 0; j < nz; ++j) {
          run += counts[c][k * (nz + 1) + j];
          survivors[(k + offset) * nz + j] += run;
        }
        if (mc_density) {
          for (std::size_t j = 0; j < nz; ++j) f_acc[(k + offset) * nz + j].merge(accs[c][k * nz + j]);
        }
      }
    }
  }

  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < nz; ++j) {
      const double t = t_grid[i];
      const double z = z_grid[j];
      if (t == 0.0) {
        table.G_node(i, j) = {1.0, 0.0, n_paths};
        if (options.with_density) table.f_node(i, j) = {f_zero_at(p.jump(), lambda, z), 0.0, n_paths};
        continue;
      }
      table.G_node(i, j) = binomial(survivors[i * nz + j], n_paths);
      if (!options.with_density) continue;
      if (mc_density) {
        table.f_node(i, j) = f_acc[i * nz + j].estimate();
      } else {
        // Without jumps every path contributes tilde_f(t, z, m).
        table.f_node(i, j) = {z > 0.0 ? tilde_f(t, z, m) : 0.0, 0.0, n_paths};
      }
    }
  }

  if (options.interp_tol >= 0.0) {
    probe_interpolation(table, false, options.interp_tol);
    if (options.with_density) probe_interpolation(table, true, options.interp_tol);
  }
  return table;
}

}  // namespace levy
