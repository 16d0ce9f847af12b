#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "levy/analytic.hpp"
#include "levy/density.hpp"
#include "levy/error.hpp"
#include "levy/filter.hpp"
#include "levy/stats.hpp"

using namespace levy;

namespace {

ValidatedParams make(double m, double lambda, JumpLaw law, double x) {
  return validate_params({m, lambda, std::move(law), x});
}

const ValidatedParams kBm = make(0.0, 0.0, JumpLaw::point_mass(0.0), 1.0);
const ValidatedParams kJump = make(0.0, 1.0, JumpLaw::exponential(1.0), 2.0);

ObservationPath observe(const ValidatedParams& p, const ObservationFn& h, double horizon, double dt,
                        std::uint64_t seed) {
  Stream rng(seed, 1);
  const auto path = simulate_skeleton(p, horizon, dt, rng);
  Stream noise(seed, 2);
  return synthesize_observation(path, h, dt, noise);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("pure-noise observation is a discrete Brownian motion") {
  std::vector<double> scaled(10000), sq(10000);
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    const auto obs = observe(kBm, ObservationFn::zero(), 1.0, 0.05, i);
    CHECK(obs.q[0] == 0.0);
    scaled[i] = obs.q.back() / std::sqrt(1.0);
    sq[i] = scaled[i] * scaled[i];
  }
  const auto var = summarize(sq);
  CHECK(std::abs(var.value - 1.0) < 3.0 * var.std_error);
  const auto mean = summarize(scaled);
  CHECK(std::abs(mean.value) < 3.0 * mean.std_error);
}

TEST_CASE("constant signal shifts the observation mean") {
  std::vector<double> end(5000);
  for (std::size_t i = 0; i < end.size(); ++i) end[i] = observe(kBm, ObservationFn::constant(0.7), 2.0, 0.1, i).q.back();
  const auto mean = summarize(end);
  CHECK(std::abs(mean.value - 0.7 * 2.0) < 3.0 * mean.std_error);
}

TEST_CASE("observation dt must match the path") {
  Stream rng(1);
  const auto path = simulate_skeleton(kBm, 1.0, 0.1, rng);
  CHECK(code_of([&] { synthesize_observation(path, ObservationFn::zero(), 0.3, rng); }) ==
        ErrorCode::PreconditionViolated);
  CHECK(code_of([&] { synthesize_observation(path, ObservationFn::zero(), 0.05, rng); }) ==
        ErrorCode::PreconditionViolated);
  CHECK_NOTHROW(synthesize_observation(path, ObservationFn::zero(), 0.2, rng));
}

TEST_CASE("coarsen, truncate and csv round trip") {
  const auto obs = observe(kJump, ObservationFn::bounded_logistic(1.0, 1.0), 1.0, 0.01, 3);
  REQUIRE(obs.steps() == 100);
  const auto c = coarsen(obs, 4);
  CHECK(c.steps() == 25);
  CHECK(c.dt == doctest::Approx(0.04));
  CHECK(c.q[5] == obs.q[20]);
  CHECK_THROWS_AS(coarsen(obs, 3), Error);
  const auto t = truncate(obs, 10);
  CHECK(t.steps() == 10);
  CHECK(t.horizon() == doctest::Approx(0.1));

  const auto file = std::filesystem::temp_directory_path() / "levy_obs_roundtrip.csv";
  {
    std::ofstream out(file);
    write_observation_csv(out, obs);
  }
  const auto back = read_observation_csv(file.string(), obs.h);
  std::filesystem::remove(file);
  CHECK(back.q == obs.q);
  CHECK(back.times == obs.times);
  CHECK(back.dt == doctest::Approx(obs.dt));
}

TEST_CASE("zero observation function leaves weights untouched") {
  const auto obs = observe(kJump, ObservationFn::zero(), 1.0, 0.01, 4);
  const auto e = advance(ParticleEnsemble::initial(500), obs, kJump, 100, 5);
  for (double lw : e.log_w) CHECK(lw == 0.0);
  CHECK(e.ess == 500.0);
  CHECK(e.resamples == 0);
  CHECK(e.t == doctest::Approx(1.0));
}

TEST_CASE("alive is absorbing and ess stays in range") {
  const auto obs = observe(kJump, ObservationFn::clipped_linear(2.0, 2.0), 2.0, 0.01, 6);
  auto e = ParticleEnsemble::initial(400);
  std::vector<char> prev = e.alive;
  for (std::size_t k = 0; k < obs.steps(); ++k) {
    advance_in_place(e, obs, kJump, 1, 7, 0.5);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!prev[i] && e.resamples == 0) CHECK_FALSE(e.alive[i]);
    }
    prev = e.alive;
    CHECK(e.ess >= 1.0 - 1e-9);
    CHECK(e.ess <= 400.0 + 1e-9);
  }
}

TEST_CASE("single particle") {
  const auto obs = observe(kBm, ObservationFn::constant(1.0), 0.5, 0.01, 8);
  auto e = advance(ParticleEnsemble::initial(1), obs, kBm, 10, 9);
  if (e.alive[0]) {
    CHECK(conditional_expectation(e, [](double v) { return v * v; }) == doctest::Approx(e.states[0] * e.states[0]));
  } else {
    CHECK_THROWS_AS(conditional_expectation(e, [](double v) { return v; }), Error);
  }
}

TEST_CASE("trivial conditional expectations") {
  const auto h = ObservationFn::constant(0.8);
  const auto obs = observe(kJump, h, 1.0, 0.01, 10);
  const auto e = advance(ParticleEnsemble::initial(2000), obs, kJump, 50, 11);
  CHECK(conditional_expectation(e, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(conditional_expectation(e, [&](double v) { return h(v); }) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("alive fraction matches the survival estimate") {
  const auto obs = observe(kJump, ObservationFn::zero(), 1.0, 0.01, 12);
  const std::size_t n = 40000;
  const auto e = advance(ParticleEnsemble::initial(n), obs, kJump, 100, 13, 0.0);
  const double a = e.alive_fraction();
  const double se_a = std::sqrt(a * (1.0 - a) / n);
  const auto g = estimate_G(kJump, 1.0, 10.0, n, 0.01, 14);
  CHECK(std::abs(a - g.value) < 3.0 * std::hypot(se_a, g.std_error));
}

TEST_CASE("likelihood weights have unit mean under the reference measure") {
  // Observations drawn as pure noise, filtered with a nonzero h.
  const std::size_t reps = 200;
  std::vector<double> means(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    auto obs = observe(kJump, ObservationFn::zero(), 1.0, 0.02, 100 + r);
    obs.h = ObservationFn::clipped_linear(1.0, 1.5);
    const auto e = advance(ParticleEnsemble::initial(200), obs, kJump, obs.steps(), 500 + r, 0.0);
    double s = 0.0;
    for (double lw : e.log_w) s += std::exp(lw);
    means[r] = s / 200.0;
  }
  const auto m = summarize(means);
  CHECK(std::abs(m.value - 1.0) < 3.0 * m.std_error);
}

TEST_CASE("resampling does not change the estimates") {
  const auto obs = observe(kJump, ObservationFn::clipped_linear(3.0, 3.0), 2.0, 0.01, 15);
  const std::size_t n = 20000;
  const auto plain = advance(ParticleEnsemble::initial(n), obs, kJump, 200, 16, 0.0);
  const auto resampled = advance(ParticleEnsemble::initial(n), obs, kJump, 200, 17, 0.5);
  CHECK(resampled.resamples > 0);
  auto id = [](double v) { return v; };
  const auto a = weighted_estimate(plain, id);
  const auto b = weighted_estimate(resampled, id);
  CHECK(std::abs(a.value - b.value) < 3.0 * std::hypot(a.std_error, b.std_error));
  const auto ua = unnormalized_mean(plain, [](double) { return 1.0; });
  const auto ub = unnormalized_mean(resampled, [](double) { return 1.0; });
  CHECK(std::abs(ua.value - ub.value) < 3.0 * std::hypot(ua.std_error, ub.std_error));
}

TEST_CASE("tower property of conditional survival") {
  const auto obs = observe(kBm, ObservationFn::zero(), 0.5, 0.005, 18);
  const std::size_t n = 40000;
  const auto e = advance(ParticleEnsemble::initial(n), obs, kBm, 100, 19);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = e.alive[i] ? tilde_survival(1.5, 1.0 - e.states[i], 0.0) : 0.0;
  const auto m = summarize(v);
  CHECK(std::abs(m.value - tilde_survival(2.0, 1.0, 0.0)) < 3.0 * m.std_error);
  const double ratio = conditional_expectation(e, [](double s) { return tilde_survival(1.5, 1.0 - s, 0.0); });
  CHECK(ratio * e.alive_fraction() == doctest::Approx(m.value).epsilon(1e-12));
}

TEST_CASE("extending without observation keeps the weighted payoff") {
  const auto obs = observe(kBm, ObservationFn::clipped_linear(0.5, 1.0), 0.5, 0.005, 20);
  const std::size_t n = 40000;
  auto e = advance(ParticleEnsemble::initial(n), obs, kBm, 100, 21, 0.0);
  const auto before = unnormalized_mean(e, [](double s) { return tilde_survival(0.5, 1.0 - s, 0.0); });
  propagate_unweighted(e, kBm, 0.5, 0.005, 22);
  CHECK(e.t == doctest::Approx(1.0));
  const auto after = unnormalized_mean(e, [](double) { return 1.0; });
  CHECK(std::abs(after.value - before.value) < 3.0 * std::hypot(after.std_error, before.std_error));
}

TEST_CASE("conditional density and defect") {
  TableOptions opt;
  opt.interp_tol = -1.0;
  opt.with_density = true;
  const auto table = build_table(kBm, {0.5, 1.0, 1.5, 2.0}, {0.0, 0.5, 1.0, 1.5, 2.0}, 100, 23, opt);
  const auto fresh = ParticleEnsemble::initial(50);
  CHECK(conditional_density(fresh, 2.0, table) == doctest::Approx(tilde_f(2.0, 1.0, 0.0)).epsilon(1e-14));
  CHECK(code_of([&] { conditional_density(fresh, 0.0, table); }) == ErrorCode::PreconditionViolated);
  CHECK(code_of([&] { conditional_density(fresh, 3.0, table); }) == ErrorCode::GridTooCoarse);
  CHECK(conditional_defect(fresh, table, kBm) == 0.0);
  CHECK(conditional_defect(fresh, table, kJump) == 0.0);

  auto dead = fresh;
  std::fill(dead.alive.begin(), dead.alive.end(), 0);
  CHECK(code_of([&] { conditional_expectation(dead, [](double) { return 1.0; }); }) == ErrorCode::EnsembleExtinct);

  const auto neg = make(-1.0, 0.0, JumpLaw::point_mass(0.0), 1.0);
  opt.with_density = false;
  opt.grid_dt = 0.05;
  const auto gtab = build_table(neg, {0.0, 25.0, 50.0}, {0.0, 0.5, 1.0, 1.5}, 20000, 24, opt);
  const double d = conditional_defect(fresh, gtab, neg);
  const double se = gtab.G_stderr(50.0, 1.0);
  CHECK(std::abs(d - tilde_defect(1.0, -1.0)) < 3.0 * se);
  CHECK(d == gtab.G_node(2, 2).value);
  const auto law = conditional_law(fresh, {1.0, 2.0}, table, kBm);
  CHECK(law.density.size() == 2);
  CHECK(law.defect == 0.0);
}

TEST_CASE("advancing past the observation fails") {
  const auto obs = observe(kBm, ObservationFn::zero(), 0.1, 0.01, 25);
  auto e = ParticleEnsemble::initial(10);
  CHECK(code_of([&] { advance_in_place(e, obs, kBm, 11, 1); }) == ErrorCode::ObservationExhausted);
  advance_in_place(e, obs, kBm, 10, 1);
  CHECK(code_of([&] { advance_in_place(e, obs, kBm, 1, 1); }) == ErrorCode::ObservationExhausted);
}

TEST_CASE("run_filter records one row per step") {
  const auto obs = observe(kJump, ObservationFn::bounded_logistic(1.0, 1.0), 0.5, 0.01, 26);
  TableOptions opt;
  opt.interp_tol = -1.0;
  opt.with_density = false;
  const auto p = make(-2.0, 1.0, JumpLaw::exponential(1.0), 2.0);
  const auto table = build_table(p, {0.0, 5.0, 25.0}, quadratic_grid(8.0, 9), 2000, 27, opt);
  auto e = ParticleEnsemble::initial(1000);
  const auto rows = run_filter(e, obs, p, table, 28);
  REQUIRE(rows.size() == 50);
  for (const auto& row : rows) {
    CHECK(row.defect >= 0.0);
    CHECK(row.defect <= 1.0);
    CHECK(row.alive_fraction <= 1.0);
  }
}
