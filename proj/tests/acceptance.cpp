// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "levy/analytic.hpp"
#include "levy/density.hpp"
#include "levy/filter.hpp"
#include "levy/parallel.hpp"
#include "levy/simulate.hpp"
#include "levy/stats.hpp"
#include "levy/validate.hpp"

using namespace levy;
namespace fs = std::filesystem;

namespace {

const std::string kCli = LEVY_CLI_PATH;
const std::string kConfigs = LEVY_CONFIG_DIR;
constexpr std::uint64_t kSeed = 20240601;

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-34s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ValidatedParams make(double m, double lambda, JumpLaw law, double x) {
  return validate_params({m, lambda, std::move(law), x});
}

/// 64-point Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre_64() {
  constexpr int n = 64;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  Eigen::VectorXd w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return {es.eigenvalues(), w};
}

/// A(mu, sigma, m, t) = E[(mu - sigma G + m t)_+ / sqrt(2 pi t^3) exp(-(mu - sigma G)^2 / 2t)], G ~ N(0, 1),
/// by a 64-point Gauss-Legendre rule over the part of the G axis where the positive part is active,
/// cut 12 standard deviations from the peak of the Gaussian factor.
double lemma5_quadrature(double mu, double sigma, double m, double t) {
  static const auto rule = gauss_legendre_64();
  auto integrand = [&](double g) {
    const double y = mu - sigma * g;
    return std::exp(-0.5 * g * g) / std::sqrt(2.0 * std::numbers::pi) * std::max(y + m * t, 0.0) /
           std::sqrt(2.0 * std::numbers::pi * t * t * t) * std::exp(-y * y / (2.0 * t));
  };
  if (sigma == 0.0) return integrand(0.0) * std::sqrt(2.0 * std::numbers::pi);
  const double s2 = sigma * sigma + t;
  const double peak = sigma * mu / s2;
  const double spread = std::sqrt(t / s2);
  const double lo = peak - 12.0 * spread;
  const double hi = std::min(peak + 12.0 * spread, (mu + m * t) / sigma);
  if (!(hi > lo)) return 0.0;
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (int k = 0; k < 64; ++k) sum += rule.second[k] * integrand(mid + half * rule.first[k]);
  return sum * half;
}

ObservationPath observe(const ValidatedParams& p, const ObservationFn& h, double horizon, double dt,
                        std::uint64_t seed) {
  Stream rng(seed, stream_tag::kObservation, 0);
  const auto path = simulate_skeleton(p, horizon, dt, rng);
  Stream noise(seed, stream_tag::kObservation, 1);
  return synthesize_observation(path, h, dt, noise);
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void crit1() {
  set_thread_count(1);
  const auto p = make(0.0, 0.0, JumpLaw::point_mass(0.0), 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  const auto e = estimate_f(p, 1.0, 200000, 1e-3, kSeed);
  const double secs = seconds_since(t0);
  const double target = tilde_f(1.0, 1.0, 0.0);
  const bool ok = std::abs(e.value - target) <= 3.0 * e.std_error && secs <= 30.0;
  report(1, "lambda=0 density oracle", ok,
         fmt("f=%.7f se=%.2e target=%.7f runtime=%.2fs (limit 30s)", e.value, e.std_error, target, secs));
}

void crit2() {
  const auto p = make(-1.0, 0.0, JumpLaw::point_mass(0.0), 1.0);
  const std::size_t n = 100000;
  std::vector<double> hit(n);
  parallel_for(n, [&](std::size_t i) {
    Stream rng(kSeed, stream_tag::kPath, i);
    hit[i] = sample_tau(p, 50.0, 0.05, rng).censored() ? 0.0 : 1.0;
  });
  const auto e = summarize(hit);
  const double target = std::exp(-2.0);
  report(2, "defect-mass oracle", std::abs(e.value - target) <= 3.0 * e.std_error,
         fmt("crossing fraction=%.5f se=%.5f target=%.5f", e.value, e.std_error, target));
}

void crit3() {
  const auto p = make(0.0, 1.0, JumpLaw::exponential(1.0), 2.0);
  const auto mb = mass_balance(p, 20.0, 0.01, 100000, kSeed);
  report(3, "normalization identity", std::abs(mb.total.value - 1.0) <= 3.0 * mb.total.std_error,
         fmt("integral=%.5f + G(20)=%.5f = %.5f se=%.5f", mb.integral.value, mb.survival.value, mb.total.value,
             mb.total.std_error));
}

void crit4() {
  const auto atomless = make(0.0, 1.0, JumpLaw::exponential(1.0), 2.0);
  const auto point = make(0.0, 1.0, JumpLaw::point_mass(2.0), 2.0);
  const auto a = estimate_f(atomless, 1e-3, 200000, 1e-3, kSeed);
  const auto b = estimate_f(point, 1e-3, 200000, 1e-3, kSeed + 1);
  const double ta = f_at_zero(atomless), tb = f_at_zero(point);
  const bool ok_a = std::abs(a.value - ta) <= 3.0 * a.std_error;
  const bool ok_b = std::abs(b.value - tb) <= 3.0 * b.std_error;
  report(4, "t=0 atom", ok_a && ok_b,
         fmt("exponential: f=%.5f se=%.5f target=%.5f; point-mass: f=%.4f se=%.4f target=%.4f", a.value,
             a.std_error, ta, b.value, b.std_error, tb));
}

void crit5() {
  std::size_t cases = 0, violations = 0;
  for (double m : {-2.0, 0.0, 2.0}) {
    for (int i = 0; i <= 60; ++i) {
      const double t = 0.01 * std::pow(1000.0, i / 60.0);
      for (int j = 0; j <= 60; ++j) {
        const double z = 0.1 * std::pow(100.0, j / 60.0);
        ++cases;
        if (tilde_f(t, z, m) > tilde_f_bound(t, m)) ++violations;
      }
    }
  }
  report(5, "tilde_f explicit bound", violations == 0,
         fmt("%zu violations over %zu (t, z, m) cases", violations, cases));
}

void crit6() {
  bool ok = true;
  std::string detail;
  std::uint64_t idx = 0;
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (double t : {0.5, 1.0, 2.0}) {
      const auto e = jump_time_ratio_mean(lambda, t, 100000, Stream::derive(kSeed, idx++));
      const bool pass = e.value <= 2.0 * lambda * t + 3.0 * e.std_error;
      ok = ok && pass;
      detail += fmt("(%.1f,%.1f):%.3f<=%.1f ", lambda, t, e.value, 2.0 * lambda * t);
    }
  }
  report(6, "jump-time ratio bound", ok, detail);
}

void crit7() {
  std::size_t cases = 0, violations = 0;
  double worst = 0.0;
  for (double mu : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    for (double sigma : {0.0, 0.1, 0.2, 0.4, 0.6}) {
      for (double m : {-1.0, 0.0, 1.0}) {
        for (double t : {0.01, 0.05, 0.1, 0.3, 0.6}) {
          const auto closed = lemma5_A(mu, sigma, m, t);
          const double q = lemma5_quadrature(mu, sigma, m, t);
          ++cases;
          if (q > closed.bound) ++violations;
          worst = std::max(worst, std::abs(q - closed.value));
        }
      }
    }
  }
  // Closed form against quadrature on a wider grid as well.
  for (double mu : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    for (double sigma : {0.0, 0.1, 0.5, 1.0, 2.0}) {
      for (double m : {-1.0, 0.0, 1.0}) {
        for (double t : {0.01, 0.1, 0.5, 1.0, 4.0}) {
          worst = std::max(worst, std::abs(lemma5_quadrature(mu, sigma, m, t) - lemma5_A(mu, sigma, m, t).value));
        }
      }
    }
  }
  report(7, "A(mu,sigma,m,t) bound and closed form", violations == 0 && worst <= 1e-6,
         fmt("%zu/%zu bound violations; max |closed - quadrature| = %.2e", violations, cases, worst));
}

void crit8() {
  const auto p = make(0.0, 1.0, JumpLaw::exponential(1.0), 2.0);
  const double r = 2.0, t = 0.5, dt = 0.01;
  const std::size_t seeds = 20, particles = 20000, table_paths = 100000;
  TableOptions opt;
  opt.interp_tol = -1.0;
  opt.grid_dt = dt;
  std::vector<double> fbar(seeds);
  for (std::size_t s = 0; s < seeds; ++s) {
    const std::uint64_t seed = Stream::derive(kSeed, 800 + s);
    const auto obs = observe(p, ObservationFn::zero(), t, dt, seed);
    const auto table = build_table(p, {r - t}, quadratic_grid(auto_z_max(p, r), 161), table_paths,
                                   Stream::derive(seed, 1), opt);
    const auto e = advance(ParticleEnsemble::initial(particles), obs, p, obs.steps(), Stream::derive(seed, 2));
    fbar[s] = conditional_density(e, r, table);
  }
  const auto mean = summarize(fbar);
  const auto f = estimate_f(p, r, 200000, dt, Stream::derive(kSeed, 8));
  const auto g = estimate_G(p, t, t, 200000, dt, Stream::derive(kSeed, 9));
  const double ratio = f.value / g.value;
  const double ratio_se = std::hypot(f.std_error / g.value, f.value * g.std_error / (g.value * g.value));
  const double joint = std::hypot(mean.std_error, ratio_se);
  std::size_t single = 0;
  for (double v : fbar) single += std::abs(v - ratio) <= 3.0 * std::hypot(mean.std_error * std::sqrt(seeds), ratio_se);
  report(8, "filter h=0 reduction", std::abs(mean.value - ratio) <= 3.0 * joint,
         fmt("mean fbar over %zu seeds=%.5f se=%.5f; f/G=%.5f se=%.5f; %zu/%zu seeds within 3 se", seeds,
             mean.value, mean.std_error, ratio, ratio_se, single, seeds));
}

void crit9() {
  set_thread_count(1);
  const auto p = make(0.0, 0.0, JumpLaw::point_mass(0.0), 1.0);
  LadderOptions opt;
  opt.base_seed = kSeed;
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = theorem1_ladder(p, ObservationFn::clipped_linear(0.5, 1.0), opt);
  const double secs = seconds_since(t0);
  std::string detail;
  for (const auto& rung : res.rungs) {
    detail += fmt("(dt=%.4g,n=%zu): med|res|=%.2e med se=%.2e; ", rung.rung.dt, rung.rung.n_particles,
                  rung.median_abs_residual, rung.median_stderr);
  }
  detail += fmt("monotone=%s runtime=%.0fs (limit 600s)", res.monotone ? "yes" : "no", secs);
  report(9, "conditional-density residual", res.passed && secs <= 600.0, detail);
}

void crit10() {
  const auto p = make(0.0, 1.0, JumpLaw::exponential(1.0), 2.0);
  ZakaiOptions opt;
  opt.base_seed = kSeed;
  const auto res = zakai_suite(p, ObservationFn::bounded_logistic(1.0, 1.0), opt);
  double worst = 0.0;
  for (const auto& rep : res.reports) worst = std::max(worst, std::abs(rep.difference) / rep.stderr_combined);
  report(10, "unnormalized survival identity", res.passed,
         fmt("%zu/%zu seeds within 5 se at dt=%.4g n=%zu; worst |diff|/se=%.2f", res.within, res.reports.size(),
             opt.dt, opt.n_particles, worst));
}

void crit11() {
  const double horizon = 10.0;
  const auto bm = make(0.0, 0.0, JumpLaw::point_mass(0.0), 1.0);
  const auto taus = sample_passage_times(bm, 10000, horizon, 1e-3, kSeed);
  const auto analytic = ks_test(taus, analytic_conditional_cdf(1.0, 0.0, horizon));

  const auto neg = make(-1.0, 0.0, JumpLaw::point_mass(0.0), 1.0);
  TableOptions opt;
  opt.interp_tol = -1.0;
  opt.grid_dt = 0.01;
  const auto table = build_table(neg, uniform_grid(horizon, 0.01), {1.0}, 1000, kSeed + 1, opt);
  const auto mismatch = ks_goodness(bm, 10000, table, 1e-3, kSeed + 2);
  report(11, "KS goodness of fit", analytic.passed && !mismatch.passed,
         fmt("analytic D=%.4f crit=%.4f p=%.3f; mismatched drift D=%.4f p=%.2e (must fail)", analytic.statistic,
             analytic.critical, analytic.p_value, mismatch.statistic, mismatch.p_value));
}

void crit12() {
  const fs::path dir = fs::temp_directory_path() / ("levy_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string jump = kConfigs + "/jump.cfg", bm = kConfigs + "/pure_bm.cfg";
  struct Command {
    std::string name, args;
    std::vector<std::string> extra;
  };
  const std::vector<Command> commands{
      {"simulate", "simulate --config " + jump + " --n 500", {}},
      {"density", "density --config " + jump + " --t-grid 0.1:3:20 --n 4000", {}},
      {"table", "density --config " + jump + " --table --t-grid 1:3:11 --z-max 4 --z-count 11 --n 2000", {}},
      {"bounds", "bounds --config " + jump, {}},
      {"filter", "filter --config " + jump + " --n 2000 --dt 0.02 --horizon 0.5 --table-paths 4000 --r-grid 1:2:3",
       {".obs.csv", ".fbar.csv"}},
      {"theorem1", "validate theorem1 --config " + bm + " --ladder single --dt 0.02 --n 2000 --seeds 2 --table-paths 4000",
       {}},
      {"zakai", "validate zakai --config " + jump + " --dt 0.02 --n 2000 --seeds 2 --table-paths 4000", {}},
      {"ks", "validate ks --config " + jump + " --n 2000 --table-paths 4000", {}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : commands) {
    bool same = true;
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "8"}) {
      const fs::path out = dir / (c.name + "_" + threads + ".csv");
      const int code = shell(kCli + " " + c.args + " --seed 7 --threads " + threads + " --out " + out.string());
      if (code != 0 && code != 2) same = false;
      std::string all = slurp(out);
      for (const auto& suffix : c.extra) all += slurp(out.string() + suffix);
      if (all.empty()) same = false;
      outputs.push_back(all);
    }
    same = same && outputs[0] == outputs[1];
    // Replaying the manifest must reproduce the bytes as well.
    const fs::path first = dir / (c.name + "_1.csv");
    const std::string before = slurp(first);
    fs::remove(first);
    if (shell(kCli + " replay " + first.string() + ".manifest.json") > 2 || slurp(first) != before) same = false;
    ok = ok && same;
    detail += c.name + (same ? ":same " : ":DIFF ");
  }
  fs::remove_all(dir);
  report(12, "CLI determinism (threads 1 vs 8)", ok, detail);
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::function<void()>> criteria{crit1, crit2, crit3, crit4,  crit5,  crit6,
                                                    crit7, crit8, crit9, crit10, crit11, crit12};
  for (const auto& run : criteria) {
    try {
      set_thread_count(std::max(1u, std::thread::hardware_concurrency()));
      run();
    } catch (const std::exception& e) {
      std::printf("[FAIL] criterion threw: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed; total %.0fs\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
