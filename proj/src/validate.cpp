#include "levy/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levy/analytic.hpp"
#include "levy/error.hpp"
#include "levy/parallel.hpp"
#include "levy/simulate.hpp"

namespace levy {

namespace {

std::size_t steps_until(const ObservationPath& obs, double t) {
  const double ratio = t / obs.dt;
  const auto k = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(static_cast<double>(k) - ratio) > 1e-6) {
    throw Error(ErrorCode::PreconditionViolated, "time is not on the observation grid");
  }
  if (k > obs.steps()) throw Error(ErrorCode::ObservationExhausted, "observation does not reach the requested time");
  return k;
}

/// Weighted sums over the alive particles of one sub-ensemble, scaled by exp(-ref).
struct Sums {
  double den = 0.0;
  double hf = 0.0;
  double g = 0.0;
  double f = 0.0;
  double hg = 0.0;
};

double alive_max(const ParticleEnsemble& e) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e.alive[i]) m = std::max(m, e.log_w[i]);
  }
  return m;
}

Sums integrand_sums(const ParticleEnsemble& e, double ref, const ObservationFn& h, const DensityTable& table,
                    double x, double f_time, double g_time) {
  CompensatedSum den, hf, g, f, hg;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e.alive[i]) continue;
    const double w = std::exp(e.log_w[i] - ref);
    const double v = e.states[i];
    const double fv = table.f(f_time, x - v).value;
    const double gv = table.G(g_time, x - v).value;
    const double hv = h(v);
    den.add(w);
    hf.add(w * hv * fv);
    g.add(w * gv);
    f.add(w * fv);
    hg.add(w * hv * gv);
  }
  return {den.value(), hf.value(), g.value(), f.value(), hg.value()};
}

struct Ratios {
  double hf, g, f, hg;
};

/// Accumulates the four integral terms for one estimator.
struct TermAccumulator {
  std::array<CompensatedSum, 4> sums;

  void add(const Ratios& pi, double dq, double du, bool literal) {
    const double p1 = pi.g;
    const double p2 = literal ? pi.g * pi.g * pi.g : pi.g * pi.g;
    const double p3 = literal ? std::pow(pi.g, 5) : pi.g * pi.g * pi.g;
    sums[0].add(pi.hf / p1 * dq);
    sums[1].add(-pi.f * pi.hg / p2 * dq);
    sums[2].add(pi.f * pi.hg * pi.hg / p3 * du);
    sums[3].add(-pi.hf * pi.hg / p2 * du);
  }
};

double f_lhs(const ParticleEnsemble& e, double ref, const DensityTable& table, double x, double s, double* den) {
  CompensatedSum num, d;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e.alive[i]) continue;
    const double w = std::exp(e.log_w[i] - ref);
    num.add(w * table.f(s, x - e.states[i]).value);
    d.add(w);
  }
  *den = d.value();
  return num.value();
}

}  // namespace

ResidualReport theorem1_residual(const ValidatedParams& p, const ObservationPath& obs, double r, double t,
                                 const DensityTable& table, std::size_t n_particles, std::uint64_t seed,
                                 const ResidualOptions& options) {
  if (!(t > 0.0) || !(r > t)) throw Error(ErrorCode::PreconditionViolated, "need 0 < t < r");
  if (!table.has_density()) throw Error(ErrorCode::PreconditionViolated, "table must carry densities");
  const auto& tg = table.t_grid();
  const double slack = 1e-9 * std::max(1.0, r);
  if (tg.front() > slack || tg.back() < r - slack) {
    throw Error(ErrorCode::GridTooCoarse, "table must cover times [0, r]");
  }
  const std::size_t steps = steps_until(obs, t);
  const std::size_t clouds = options.independent_clouds ? 5 : 1;
  const std::size_t batches = std::max<std::size_t>(1, options.batches);
  const std::size_t per_batch = n_particles / (clouds * batches);
  if (per_batch == 0) throw Error(ErrorCode::PreconditionViolated, "too few particles for the batch layout");
  const double x = p.barrier();
  const ObservationFn& h = obs.h;

  // ens[c][b]: batch b of cloud c. Roles: 0 lhs, 1 h f, 2 G, 3 f, 4 h G.
  std::vector<std::vector<ParticleEnsemble>> ens(clouds);
  for (auto& cloud : ens) {
    for (std::size_t b = 0; b < batches; ++b) cloud.push_back(ParticleEnsemble::initial(per_batch));
  }
  auto cloud_of = [&](std::size_t role) { return options.independent_clouds ? role : 0; };
  auto batch_seed = [&](std::size_t c, std::size_t b) { return Stream::derive(Stream::derive(seed, c), b); };

  TermAccumulator pooled;
  std::vector<TermAccumulator> per_batch_terms(batches);
  std::vector<Sums> sums(clouds * batches);
  for (std::size_t k = 0; k < steps; ++k) {
    const double u = obs.times[k];
    const double dq = obs.increment(k);
    const double du = obs.times[k + 1] - obs.times[k];
    const double f_time = r - u;
    const double g_time = t - u;
    std::vector<double> ref(clouds);
    for (std::size_t c = 0; c < clouds; ++c) {
      ref[c] = -std::numeric_limits<double>::infinity();
      for (const auto& e : ens[c]) ref[c] = std::max(ref[c], alive_max(e));
      if (!std::isfinite(ref[c])) throw Error(ErrorCode::EnsembleExtinct, "no alive particles");
    }
    parallel_for(clouds * batches, [&](std::size_t cb) {
      const std::size_t c = cb / batches;
      sums[cb] = integrand_sums(ens[c][cb % batches], ref[c], h, table, x, f_time, g_time);
    });
    auto ratios = [&](auto&& pick) {
      // pick(c) returns the Sums of cloud c for the estimator at hand.
      const Sums& s1 = pick(cloud_of(1));
      const Sums& s2 = pick(cloud_of(2));
      const Sums& s3 = pick(cloud_of(3));
      const Sums& s4 = pick(cloud_of(4));
      if (s1.den <= 0.0 || s2.den <= 0.0 || s3.den <= 0.0 || s4.den <= 0.0) {
        throw Error(ErrorCode::EnsembleExtinct, "no alive particles in a sub-ensemble");
      }
      return Ratios{s1.hf / s1.den, s2.g / s2.den, s3.f / s3.den, s4.hg / s4.den};
    };
    std::vector<Sums> total(clouds);
    for (std::size_t c = 0; c < clouds; ++c) {
      for (std::size_t b = 0; b < batches; ++b) {
        const Sums& s = sums[c * batches + b];
        total[c].den += s.den;
        total[c].hf += s.hf;
        total[c].g += s.g;
        total[c].f += s.f;
        total[c].hg += s.hg;
      }
    }
    pooled.add(ratios([&](std::size_t c) -> const Sums& { return total[c]; }), dq, du, options.literal_statement);
    if (batches > 1) {
      for (std::size_t b = 0; b < batches; ++b) {
        per_batch_terms[b].add(ratios([&](std::size_t c) -> const Sums& { return sums[c * batches + b]; }), dq, du,
                               options.literal_statement);
      }
    }
    parallel_for(clouds * batches, [&](std::size_t cb) {
      const std::size_t c = cb / batches;
      const std::size_t b = cb % batches;
      advance_in_place(ens[c][b], obs, p, 1, batch_seed(c, b), options.resample_threshold);
    });
  }

  ResidualReport rep;
  rep.dt = obs.dt;
  rep.n_particles = per_batch * clouds * batches;
  rep.seed = seed;

  const double f_r = table.f(r, x).value;
  const double g_t = table.G(t, x).value;
  if (!(g_t > 0.0)) throw Error(ErrorCode::EnsembleExtinct, "table survival at (t, x) is zero");
  const double se_f = table.f_stderr(r, x);
  const double se_g = table.G_stderr(t, x);
  rep.terms[0] = f_r / g_t;
  rep.term1_stderr = std::sqrt(std::pow(se_f / g_t, 2) + std::pow(f_r * se_g / (g_t * g_t), 2));

  const double s_lhs = r - t;
  double ref = -std::numeric_limits<double>::infinity();
  for (const auto& e : ens[0]) ref = std::max(ref, alive_max(e));
  if (!std::isfinite(ref)) throw Error(ErrorCode::EnsembleExtinct, "no alive particles at t");
  double num_total = 0.0, den_total = 0.0;
  std::vector<double> lhs_batch(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    double den = 0.0;
    const double num = f_lhs(ens[0][b], ref, table, x, s_lhs, &den);
    num_total += num;
    den_total += den;
    lhs_batch[b] = den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  }
  rep.lhs = num_total / den_total;
  for (std::size_t j = 0; j < 4; ++j) rep.terms[j + 1] = pooled.sums[j].value();
  rep.rhs = rep.terms[0] + rep.terms[1] + rep.terms[2] + rep.terms[3] + rep.terms[4];
  rep.residual = rep.lhs - rep.rhs;

  if (batches > 1) {
    MeanAccumulator res;
    for (std::size_t b = 0; b < batches; ++b) {
      const auto& s = per_batch_terms[b].sums;
      const double rhs_b = rep.terms[0] + s[0].value() + s[1].value() + s[2].value() + s[3].value();
      if (std::isfinite(lhs_batch[b])) res.add(lhs_batch[b] - rhs_b);
    }
    rep.batch_stderr = res.std_error();
  }
  rep.mc_stderr = std::sqrt(rep.batch_stderr * rep.batch_stderr + rep.term1_stderr * rep.term1_stderr);
  return rep;
}

namespace {

using Kernel = std::function<double(double u, double v)>;
using Payoff = std::function<void(ParticleEnsemble&, std::vector<double>&)>;

ZakaiReport unnormalized_identity(const ValidatedParams& p, const ObservationPath& obs, double t,
                                  const Kernel& kernel, const Payoff& payoff, double prior, double prior_se,
                                  std::size_t n, std::uint64_t seed) {
  if (!(t > 0.0)) throw Error(ErrorCode::PreconditionViolated, "need t > 0");
  const std::size_t steps = steps_until(obs, t);
  ParticleEnsemble e = ParticleEnsemble::initial(n);
  std::vector<double> integral(n, 0.0);
  const ObservationFn& h = obs.h;
  for (std::size_t k = 0; k < steps; ++k) {
    const double u = obs.times[k];
    const double dq = obs.increment(k);
    parallel_for(n, [&](std::size_t i) {
      if (!e.alive[i]) return;
      const double v = e.states[i];
      integral[i] += std::exp(e.log_w[i]) * h(v) * kernel(u, v) * dq;
    });
    advance_in_place(e, obs, p, 1, seed, 0.0);
  }
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = std::exp(e.log_w[i]);
  std::vector<double> pay(n, 0.0);
  payoff(e, pay);

  MeanAccumulator lhs, mid, diff;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = weights[i] * pay[i];
    lhs.add(l);
    mid.add(integral[i]);
    diff.add(l - integral[i]);
  }
  ZakaiReport rep;
  rep.lhs = lhs.mean();
  rep.prior = prior;
  rep.integral = mid.mean();
  rep.rhs = prior + rep.integral;
  rep.difference = rep.lhs - rep.rhs;
  rep.stderr_combined = std::sqrt(diff.variance() / static_cast<double>(n) + prior_se * prior_se);
  rep.dt = obs.dt;
  rep.n_particles = n;
  rep.seed = seed;
  return rep;
}

}  // namespace

ZakaiReport zakai_identity_check(const ValidatedParams& p, const ObservationPath& obs, double T, double t,
                                 const DensityTable& table, std::size_t n_particles, std::uint64_t seed) {
  if (!(t < T)) throw Error(ErrorCode::PreconditionViolated, "need t < T");
  const double x = p.barrier();
  auto kernel = [&](double u, double v) { return table.G(T - u, x - v).value; };
  auto payoff = [&](ParticleEnsemble& e, std::vector<double>& pay) {
    propagate_unweighted(e, p, T - t, obs.dt, seed);
    for (std::size_t i = 0; i < e.size(); ++i) pay[i] = e.alive[i] ? 1.0 : 0.0;
  };
  return unnormalized_identity(p, obs, t, kernel, payoff, table.G(T, x).value, table.G_stderr(T, x), n_particles,
                               seed);
}

ZakaiReport interval_identity_check(const ValidatedParams& p, const ObservationPath& obs, double a, double b,
                                    double t, const DensityTable& table, std::size_t n_particles,
                                    std::uint64_t seed) {
  if (!(t < a && a < b)) throw Error(ErrorCode::PreconditionViolated, "need t < a < b");
  const double x = p.barrier();
  auto kernel = [&](double u, double v) { return table.G(a - u, x - v).value - table.G(b - u, x - v).value; };
  auto payoff = [&](ParticleEnsemble& e, std::vector<double>& pay) {
    propagate_unweighted(e, p, a - t, obs.dt, seed);
    const std::vector<char> alive_a = e.alive;
    propagate_unweighted(e, p, b - a, obs.dt, Stream::derive(seed, 1));
    for (std::size_t i = 0; i < e.size(); ++i) pay[i] = alive_a[i] && !e.alive[i] ? 1.0 : 0.0;
  };
  const double prior = table.G(a, x).value - table.G(b, x).value;
  const double prior_se = std::hypot(table.G_stderr(a, x), table.G_stderr(b, x));
  return unnormalized_identity(p, obs, t, kernel, payoff, prior, prior_se, n_particles, seed);
}

bool BoundsReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.passed; });
}

DensityEstimate jump_time_ratio_mean(double lambda, double t, std::size_t n, std::uint64_t seed) {
  std::vector<MeanAccumulator> parts(kReductionChunks);
  for_each_chunk(n, kReductionChunks, [&](std::size_t c, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Stream rng(seed, stream_tag::kBounds, i);
      const auto times = sample_jump_times(rng, t, lambda);
      const double last = times.empty() ? 0.0 : times.back();
      parts[c].add(std::sqrt(last / (t - last)));
    }
  });
  MeanAccumulator all;
  for (const auto& part : parts) all.merge(part);
  return all.estimate();
}

namespace {

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double w = static_cast<double>(i) / static_cast<double>(count - 1);
    g[i] = lo * std::pow(hi / lo, w);
  }
  return g;
}

}  // namespace

BoundsReport bounds_suite(const ValidatedParams& p, std::uint64_t seed, const BoundsOptions& options) {
  BoundsReport report;

  BoundCheck grid{"tilde_f <= (e^{-1/2} + |m|)/sqrt(2 pi) (1/t + 1/sqrt(t))"};
  std::vector<double> drifts{-2.0, 0.0, 2.0};
  if (std::find(drifts.begin(), drifts.end(), p.m()) == drifts.end()) drifts.push_back(p.m());
  double worst = 0.0;
  for (double m : drifts) {
    for (double t : log_grid(0.01, 10.0, 61)) {
      const double bound = tilde_f_bound(t, m);
      for (double z : log_grid(0.1, 10.0, 61)) {
        const double v = tilde_f(t, z, m);
        ++grid.cases;
        if (v > bound) ++grid.violations;
        if (v / bound > worst) {
          worst = v / bound;
          grid.value = v;
          grid.bound = bound;
        }
      }
    }
  }
  grid.passed = grid.violations == 0;
  report.checks.push_back(grid);

  std::size_t idx = 0;
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (double t : {0.5, 1.0, 2.0}) {
      BoundCheck c;
      c.name = "E sqrt(T_N / (t - T_N)) <= 2 lambda t, lambda=" + std::to_string(lambda).substr(0, 3) +
               " t=" + std::to_string(t).substr(0, 3);
      const auto est = jump_time_ratio_mean(lambda, t, options.jump_time_draws, Stream::derive(seed, idx++));
      c.value = est.value;
      c.std_error = est.std_error;
      c.bound = lemma6_bound(lambda, t);
      c.cases = est.n_paths;
      c.passed = c.value <= c.bound + 3.0 * c.std_error;
      c.violations = c.passed ? 0 : 1;
      report.checks.push_back(c);
    }
  }

  BoundCheck a{"A(mu, sigma, m, t) <= C1/s^3 + C2/s + sigma C3/(s^2 sqrt(t)), sigma^2 + t <= 1"};
  worst = 0.0;
  for (double mu : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    for (double sigma : {0.0, 0.1, 0.2, 0.4, 0.6}) {
      for (double m : {-1.0, 0.0, 1.0}) {
        for (double t : {0.01, 0.05, 0.1, 0.3, 0.6}) {
          const auto v = lemma5_A(mu, sigma, m, t);
          ++a.cases;
          if (v.value > v.bound) ++a.violations;
          if (v.value / v.bound > worst) {
            worst = v.value / v.bound;
            a.value = v.value;
            a.bound = v.bound;
          }
        }
      }
    }
  }
  a.passed = a.violations == 0;
  report.checks.push_back(a);
  return report;
}

std::vector<double> sample_passage_times(const ValidatedParams& p, std::size_t n, double horizon, double grid_dt,
                                         std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(n);
  const std::size_t block = std::max<std::size_t>(n, 1024);
  std::vector<double> taus(block);
  for (std::size_t start = 0; out.size() < n; start += block) {
    if (start > 1000 * block) throw Error(ErrorCode::PreconditionViolated, "passage before the horizon is too rare");
    parallel_for(block, [&](std::size_t i) {
      Stream rng(seed, stream_tag::kGoodness, start + i);
      taus[i] = sample_tau(p, horizon, grid_dt, rng).tau;
    });
    for (std::size_t i = 0; i < block && out.size() < n; ++i) {
      if (std::isfinite(taus[i])) out.push_back(taus[i]);
    }
  }
  return out;
}

Cdf table_cdf(const DensityTable& table) {
  const auto& t = table.t_grid();
  if (t.size() < 2) throw Error(ErrorCode::GridTooCoarse, "table needs at least two times");
  const double x = table.params().x;
  std::vector<double> cum(t.size(), 0.0);
  double prev = table.f(t[0], x).value;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double cur = table.f(t[i], x).value;
    cum[i] = cum[i - 1] + 0.5 * (t[i] - t[i - 1]) * (prev + cur);
    prev = cur;
  }
  const double total = cum.back();
  if (!(total > 0.0)) throw Error(ErrorCode::PreconditionViolated, "table density integrates to zero");
  for (double& c : cum) c /= total;
  return [t, cum](double s) {
    if (s <= t.front()) return 0.0;
    if (s >= t.back()) return 1.0;
    const auto i = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), s) - t.begin()) - 1;
    const double w = (s - t[i]) / (t[i + 1] - t[i]);
    return cum[i] + w * (cum[i + 1] - cum[i]);
  };
}

std::vector<double> sample_from_table(const DensityTable& table, std::size_t n, std::uint64_t seed) {
  const auto& t = table.t_grid();
  const Cdf cdf = table_cdf(table);
  std::vector<double> cum(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) cum[i] = cdf(t[i]);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Stream rng(seed, stream_tag::kGoodness, k);
    const double u = rng.uniform();
    auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - cum.begin()));
    const double span = cum[i] - cum[i - 1];
    const double w = span > 0.0 ? (u - cum[i - 1]) / span : 0.0;
    out[k] = t[i - 1] + w * (t[i] - t[i - 1]);
  }
  return out;
}

Cdf analytic_conditional_cdf(double x, double m, double horizon) {
  const double mass = 1.0 - tilde_survival(horizon, x, m);
  return [=](double s) {
    if (s <= 0.0) return 0.0;
    if (s >= horizon) return 1.0;
    return (1.0 - tilde_survival(s, x, m)) / mass;
  };
}

KsReport ks_test(const std::vector<double>& sample, const Cdf& cdf, double alpha) {
  KsReport rep;
  rep.n = sample.size();
  rep.statistic = ks_statistic(sample, cdf);
  rep.critical = ks_critical_value(alpha, rep.n);
  rep.p_value = ks_pvalue(rep.statistic, rep.n);
  rep.passed = rep.statistic < rep.critical;
  return rep;
}

KsReport ks_goodness(const ValidatedParams& p, std::size_t n_samples, const DensityTable& table, double grid_dt,
                     std::uint64_t seed) {
  if (n_samples < 1000) throw Error(ErrorCode::PreconditionViolated, "ks_goodness needs at least 1000 samples");
  const auto sample = sample_passage_times(p, n_samples, table.t_grid().back(), grid_dt, seed);
  return ks_test(sample, table_cdf(table));
}

double auto_z_max(const ValidatedParams& p, double t_max) {
  const double jumps = p.lambda() > 0.0 ? 4.0 * p.lambda() * t_max * std::abs(p.jump().mean()) : 0.0;
  return p.barrier() + 8.0 * std::sqrt(t_max) + jumps;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ObservationPath observe(const ValidatedParams& p, const ObservationFn& h, double horizon, double dt,
                        std::uint64_t seed) {
  Stream path_rng(seed, stream_tag::kObservation, 0);
  const SkeletonPath truth = simulate_skeleton(p, horizon, dt, path_rng);
  Stream noise_rng(seed, stream_tag::kObservation, 1);
  return synthesize_observation(truth, h, dt, noise_rng);
}

}  // namespace

LadderResult theorem1_ladder(const ValidatedParams& p, const ObservationFn& h, const LadderOptions& options) {
  if (options.rungs.empty()) throw Error(ErrorCode::PreconditionViolated, "ladder needs at least one rung");
  const double fine = options.rungs.back().dt;
  for (const auto& rung : options.rungs) {
    const double factor = rung.dt / fine;
    if (std::abs(factor - std::round(factor)) > 1e-6) {
      throw Error(ErrorCode::PreconditionViolated, "every rung dt must be a multiple of the finest dt");
    }
  }
  const double z_max = options.z_max > 0.0 ? options.z_max : auto_z_max(p, options.r);
  LadderResult result;
  result.rungs.resize(options.rungs.size());
  for (std::size_t i = 0; i < options.rungs.size(); ++i) result.rungs[i].rung = options.rungs[i];

  for (std::size_t s = 0; s < options.seeds; ++s) {
    const std::uint64_t seed = Stream::derive(options.base_seed, s);
    const ObservationPath obs = observe(p, h, options.t, fine, seed);
    TableOptions topt;
    topt.grid_dt = fine;
    topt.interp_tol = -1.0;
    const DensityTable table = build_table(p, uniform_grid(options.r, fine), quadratic_grid(z_max, options.z_nodes),
                                           options.table_paths, Stream::derive(seed, stream_tag::kTable), topt);
    for (std::size_t i = 0; i < options.rungs.size(); ++i) {
      const auto& rung = options.rungs[i];
      const auto factor = static_cast<std::size_t>(std::llround(rung.dt / fine));
      const ObservationPath rung_obs = factor == 1 ? obs : coarsen(obs, factor);
      result.rungs[i].reports.push_back(theorem1_residual(p, rung_obs, options.r, options.t, table, rung.n_particles,
                                                          Stream::derive(seed, stream_tag::kParticle),
                                                          options.residual));
    }
  }

  for (auto& rung : result.rungs) {
    std::vector<double> abs_res, se;
    for (const auto& rep : rung.reports) {
      abs_res.push_back(std::abs(rep.residual));
      se.push_back(rep.mc_stderr);
    }
    rung.median_abs_residual = median(abs_res);
    rung.median_stderr = median(se);
    rung.within_tolerance = rung.median_abs_residual <= options.tolerance * rung.median_stderr;
  }
  result.monotone = true;
  for (std::size_t i = 1; i < result.rungs.size(); ++i) {
    if (result.rungs[i].median_abs_residual > result.rungs[i - 1].median_abs_residual) result.monotone = false;
  }
  result.passed = result.monotone && result.rungs.back().within_tolerance;
  return result;
}

ZakaiSuiteResult zakai_suite(const ValidatedParams& p, const ObservationFn& h, const ZakaiOptions& options) {
  const double z_max = options.z_max > 0.0 ? options.z_max : auto_z_max(p, options.T);
  ZakaiSuiteResult result;
  for (std::size_t s = 0; s < options.seeds; ++s) {
    const std::uint64_t seed = Stream::derive(options.base_seed, s);
    const ObservationPath obs = observe(p, h, options.t, options.dt, seed);
    TableOptions topt;
    topt.with_density = false;
    topt.grid_dt = options.dt;
    topt.interp_tol = -1.0;
    const DensityTable table = build_table(p, uniform_grid(options.T, options.dt),
                                           quadratic_grid(z_max, options.z_nodes), options.table_paths,
                                           Stream::derive(seed, stream_tag::kTable), topt);
    auto rep = zakai_identity_check(p, obs, options.T, options.t, table, options.n_particles,
                                    Stream::derive(seed, stream_tag::kParticle));
    if (std::abs(rep.difference) <= options.tolerance * rep.stderr_combined) ++result.within;
    result.reports.push_back(rep);
  }
  result.passed = result.within == result.reports.size();
  return result;
}

}  // namespace levy
