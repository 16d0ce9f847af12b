#include "levy/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "levy/error.hpp"
#include "levy/io.hpp"
#include "levy/parallel.hpp"

namespace levy {

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

/// Moves one particle over [0, dt] and applies the killing test.
void move_particle(double& state, char& alive, double dt, const ValidatedParams& p, Stream& rng) {
  const double x = p.barrier();
  const auto jumps = sample_jump_times(rng, dt, p.lambda());
  double pos = state;
  double now = 0.0;
  auto diffuse = [&](double until) {
    const double h = until - now;
    if (h <= 0.0) return;
    const double next = pos + rng.normal(p.m() * h, std::sqrt(h));
    if (alive && (next >= x || rng.uniform() < bridge_crossing_probability(pos, next, x, h))) alive = 0;
    pos = next;
    now = until;
  };
  for (double tj : jumps) {
    diffuse(tj);
    pos += p.jump().sample(rng);
    if (pos >= x) alive = 0;
  }
  diffuse(dt);
  state = pos;
}

double max_log_weight(const ParticleEnsemble& e, bool alive_only) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!alive_only || e.alive[i]) m = std::max(m, e.log_w[i]);
  }
  return m;
}

void systematic_resample(ParticleEnsemble& e, Stream& rng) {
  const std::size_t n = e.size();
  const double top = max_log_weight(e, false);
  std::vector<double> cumulative(n);
  CompensatedSum sum;
  for (std::size_t i = 0; i < n; ++i) {
    sum.add(std::exp(e.log_w[i] - top));
    cumulative[i] = sum.value();
  }
  const double total = sum.value();
  const double mean_log_w = top + std::log(total / static_cast<double>(n));
  std::vector<double> states(n);
  std::vector<char> alive(n);
  const double u0 = rng.uniform();
  std::size_t src = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double target = (u0 + static_cast<double>(k)) / static_cast<double>(n) * total;
    while (src + 1 < n && cumulative[src] < target) ++src;
    states[k] = e.states[src];
    alive[k] = e.alive[src];
  }
  e.states = std::move(states);
  e.alive = std::move(alive);
  std::fill(e.log_w.begin(), e.log_w.end(), mean_log_w);
  ++e.resamples;
}

}  // namespace

ObservationPath synthesize_observation(const SkeletonPath& true_path, const ObservationFn& h, double dt,
                                       Stream& rng) {
  if (!(dt > 0.0)) throw Error(ErrorCode::PreconditionViolated, "observation dt must be positive");
  const double ratio = true_path.horizon / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || !near(static_cast<double>(steps), ratio)) {
    throw Error(ErrorCode::PreconditionViolated, "observation dt does not divide the path horizon");
  }
  ObservationPath obs;
  obs.dt = dt;
  obs.h = h;
  obs.times.resize(steps + 1);
  obs.q.resize(steps + 1);
  obs.q[0] = 0.0;
  std::size_t k_path = 0;
  const double sdt = std::sqrt(dt);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    obs.times[k] = k == steps ? true_path.horizon : t;
    if (k == steps) break;
    while (k_path < true_path.size() && true_path.times[k_path] < t && !near(true_path.times[k_path], t)) ++k_path;
    if (k_path == true_path.size() || !near(true_path.times[k_path], t)) {
      throw Error(ErrorCode::PreconditionViolated, "observation time is not a skeleton time of the path");
    }
    const double hx = h(true_path.values_post[k_path]);
    obs.q[k + 1] = obs.q[k] + hx * dt + sdt * rng.normal();
  }
  return obs;
}

ObservationPath coarsen(const ObservationPath& obs, std::size_t factor) {
  if (factor == 0 || obs.steps() % factor != 0) {
    throw Error(ErrorCode::PreconditionViolated, "coarsening factor must divide the number of steps");
  }
  ObservationPath out;
  out.dt = obs.dt * static_cast<double>(factor);
  out.h = obs.h;
  for (std::size_t k = 0; k <= obs.steps(); k += factor) {
    out.times.push_back(obs.times[k]);
    out.q.push_back(obs.q[k]);
  }
  return out;
}

ObservationPath truncate(const ObservationPath& obs, std::size_t steps) {
  if (steps > obs.steps()) throw Error(ErrorCode::ObservationExhausted, "truncation beyond the observation");
  ObservationPath out = obs;
  out.times.resize(steps + 1);
  out.q.resize(steps + 1);
  return out;
}

void write_observation_csv(std::ostream& out, const ObservationPath& obs) {
  out << "t,q\n";
  for (std::size_t k = 0; k < obs.q.size(); ++k) out << csv_row({format_double(obs.times[k]), format_double(obs.q[k])});
}

ObservationPath read_observation_csv(const std::string& path, const ObservationFn& h) {
  const auto rows = read_numeric_csv(path);
  if (rows.size() < 2) throw Error(ErrorCode::Io, "observation file needs at least two rows");
  ObservationPath obs;
  obs.h = h;
  for (const auto& row : rows) {
    if (row.size() < 2) throw Error(ErrorCode::Io, "observation rows need columns t,q");
    obs.times.push_back(row[0]);
    obs.q.push_back(row[1]);
  }
  obs.dt = obs.times[1] - obs.times[0];
  if (obs.q[0] != 0.0 || obs.times[0] != 0.0) throw Error(ErrorCode::Io, "observation must start at t=0 with q=0");
  for (std::size_t k = 1; k < obs.times.size(); ++k) {
    if (!near(obs.times[k] - obs.times[k - 1], obs.dt)) throw Error(ErrorCode::Io, "observation grid is not uniform");
  }
  return obs;
}

ParticleEnsemble ParticleEnsemble::initial(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::PreconditionViolated, "ensemble needs at least one particle");
  ParticleEnsemble e;
  e.states.assign(n, 0.0);
  e.alive.assign(n, 1);
  e.log_w.assign(n, 0.0);
  e.ess = static_cast<double>(n);
  return e;
}

double ParticleEnsemble::alive_fraction() const {
  std::size_t a = 0;
  for (char v : alive) a += v ? 1 : 0;
  return static_cast<double>(a) / static_cast<double>(size());
}

double ParticleEnsemble::effective_sample_size() const {
  const double top = max_log_weight(*this, false);
  CompensatedSum s1, s2;
  for (double lw : log_w) {
    const double w = std::exp(lw - top);
    s1.add(w);
    s2.add(w * w);
  }
  return s1.value() * s1.value() / s2.value();
}

void advance_in_place(ParticleEnsemble& e, const ObservationPath& obs, const ValidatedParams& p, std::size_t steps,
                      std::uint64_t seed, double resample_threshold) {
  if (e.step + steps > obs.steps()) {
    throw Error(ErrorCode::ObservationExhausted, "observation ends before the requested time");
  }
  const ObservationFn& h = obs.h;
  const bool weighted = !h.is_zero();
  const double dt = obs.dt;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t k = e.step;
    const double dq = obs.increment(k);
    const std::uint64_t step_seed = Stream::derive(seed, k);
    for_each_chunk(e.size(), kReductionChunks, [&](std::size_t, std::size_t b, std::size_t end) {
      for (std::size_t i = b; i < end; ++i) {
        if (weighted) {
          const double hx = h(e.states[i]);
          e.log_w[i] += hx * dq - 0.5 * hx * hx * dt;
        }
        Stream rng(step_seed, stream_tag::kParticle, i);
        move_particle(e.states[i], e.alive[i], dt, p, rng);
      }
    });
    ++e.step;
    e.t = obs.times[e.step];
    e.ess = weighted ? e.effective_sample_size() : static_cast<double>(e.size());
    if (weighted && e.ess < resample_threshold * static_cast<double>(e.size())) {
      Stream rng(seed, stream_tag::kResample, k);
      systematic_resample(e, rng);
      e.ess = static_cast<double>(e.size());
    }
  }
}

ParticleEnsemble advance(ParticleEnsemble ensemble, const ObservationPath& obs, const ValidatedParams& p,
                         std::size_t steps, std::uint64_t seed, double resample_threshold) {
  advance_in_place(ensemble, obs, p, steps, seed, resample_threshold);
  return ensemble;
}

void propagate_unweighted(ParticleEnsemble& e, const ValidatedParams& p, double duration, double grid_dt,
                          std::uint64_t seed) {
  if (duration <= 0.0) return;
  const auto grid = uniform_grid(duration, std::min(grid_dt, duration));
  const std::uint64_t ext_seed = Stream::derive(seed, stream_tag::kExtension);
  for_each_chunk(e.size(), kReductionChunks, [&](std::size_t, std::size_t b, std::size_t end) {
    for (std::size_t i = b; i < end; ++i) {
      Stream rng(ext_seed, i);
      for (std::size_t k = 1; k < grid.size(); ++k) move_particle(e.states[i], e.alive[i], grid[k] - grid[k - 1], p, rng);
    }
  });
  e.t += duration;
}

DensityEstimate weighted_estimate(const ParticleEnsemble& e, const StateFn& g) {
  const double top = max_log_weight(e, true);
  if (!std::isfinite(top)) throw Error(ErrorCode::EnsembleExtinct, "no alive particles");
  std::vector<double> w(e.size(), 0.0), gv(e.size(), 0.0);
  CompensatedSum num, den;
  std::size_t alive = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e.alive[i]) continue;
    ++alive;
    w[i] = std::exp(e.log_w[i] - top);
    gv[i] = g(e.states[i]);
    num.add(w[i] * gv[i]);
    den.add(w[i]);
  }
  const double ratio = num.value() / den.value();
  CompensatedSum var;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e.alive[i]) continue;
    const double d = w[i] * (gv[i] - ratio);
    var.add(d * d);
  }
  return {ratio, std::sqrt(var.value()) / den.value(), alive};
}

double conditional_expectation(const ParticleEnsemble& e, const StateFn& g) { return weighted_estimate(e, g).value; }

DensityEstimate unnormalized_mean(const ParticleEnsemble& e, const StateFn& g) {
  MeanAccumulator acc;
  for (std::size_t i = 0; i < e.size(); ++i) acc.add(e.alive[i] ? std::exp(e.log_w[i]) * g(e.states[i]) : 0.0);
  return acc.estimate();
}

namespace {

void require_table_time(const DensityTable& table, double s) {
  const auto& tg = table.t_grid();
  const double slack = 1e-9 * std::max(1.0, tg.back());
  if (s < tg.front() - slack || s > tg.back() + slack) {
    throw Error(ErrorCode::GridTooCoarse, "table does not cover time " + format_double(s));
  }
}

}  // namespace

double conditional_density(const ParticleEnsemble& e, double r, const DensityTable& table) {
  if (!(r > e.t)) throw Error(ErrorCode::PreconditionViolated, "conditional density needs r > t");
  const double s = r - e.t;
  require_table_time(table, s);
  const double x = table.params().x;
  return conditional_expectation(e, [&](double v) { return table.f(s, x - v).value; });
}

double conditional_defect(const ParticleEnsemble& e, const DensityTable& table, const ValidatedParams& p) {
  if (is_default_certain(p.get())) return 0.0;
  const double horizon = table.t_grid().back();
  const double x = p.barrier();
  return conditional_expectation(e, [&](double v) { return table.G(horizon, x - v).value; });
}

ConditionalLaw conditional_law(const ParticleEnsemble& e, const std::vector<double>& r_grid,
                               const DensityTable& table, const ValidatedParams& p, bool on_event) {
  ConditionalLaw law;
  law.t = e.t;
  law.on_event = on_event;
  law.r = r_grid;
  for (double r : r_grid) law.density.push_back(conditional_density(e, r, table));
  law.defect = conditional_defect(e, table, p);
  return law;
}

std::vector<FilterRow> run_filter(ParticleEnsemble& e, const ObservationPath& obs, const ValidatedParams& p,
                                  const DensityTable& table, std::uint64_t seed, double resample_threshold) {
  std::vector<FilterRow> rows;
  while (e.step < obs.steps()) {
    advance_in_place(e, obs, p, 1, seed, resample_threshold);
    const double alive = e.alive_fraction();
    const double defect = alive > 0.0 ? conditional_defect(e, table, p) : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({e.t, e.ess, alive, defect});
    if (alive == 0.0) break;
  }
  return rows;
}

}  // namespace levy
