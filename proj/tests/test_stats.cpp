#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "levy/parallel.hpp"
#include "levy/rng.hpp"
#include "levy/stats.hpp"

using namespace levy;

TEST_CASE("mean accumulator merge equals sequential") {
  std::vector<double> v;
  Stream rng(3);
  for (int i = 0; i < 1000; ++i) v.push_back(rng.normal(2.0, 3.0));
  MeanAccumulator all, a, b;
  for (std::size_t i = 0; i < v.size(); ++i) {
    all.add(v[i]);
    (i < 400 ? a : b).add(v[i]);
  }
  a.merge(b);
  CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
  CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
  CHECK(summarize(v).value == doctest::Approx(all.mean()));
}

TEST_CASE("standard error halves when n quadruples") {
  auto se = [](std::size_t n) {
    Stream rng(8);
    MeanAccumulator acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(rng.normal());
    return acc.std_error();
  };
  CHECK(se(10000) / se(40000) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("kolmogorov distribution") {
  CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_survival(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(kolmogorov_survival(0.1) == doctest::Approx(1.0));
  const double crit = ks_critical_value(0.01, 10000);
  CHECK(ks_pvalue(crit, 10000) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("ks statistic of a uniform sample") {
  Stream rng(4);
  std::vector<double> u(5000);
  for (auto& v : u) v = rng.uniform();
  const double d = ks_statistic(u, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(d < ks_critical_value(0.01, u.size()));
  const double shifted = ks_statistic(u, [](double x) { return std::clamp(x * x, 0.0, 1.0); });
  CHECK(shifted > ks_critical_value(0.01, u.size()));
}

TEST_CASE("trapezoid") {
  std::vector<double> x{0.0, 0.5, 1.5, 2.0};
  std::vector<double> y{0.0, 1.0, 3.0, 4.0};
  CHECK(trapezoid(x, y) == doctest::Approx(4.0));
}

TEST_CASE("compensated sum") {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 10; ++i) s.add(1e-16);
  CHECK(s.value() == doctest::Approx(1.0 + 1e-15).epsilon(1e-16));
}

TEST_CASE("streams are reproducible and distinct") {
  Stream a(1, 2, 3), b(1, 2, 3), c(1, 2, 4);
  CHECK(a() == b());
  CHECK(a() != c());
  Stream u(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("chunked reduction independent of thread count") {
  auto run = [](unsigned threads) {
    set_thread_count(threads);
    std::vector<MeanAccumulator> parts(kReductionChunks);
    for_each_chunk(10007, kReductionChunks, [&](std::size_t c, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        Stream rng(5, i);
        parts[c].add(rng.normal());
      }
    });
    MeanAccumulator all;
    for (const auto& p : parts) all.merge(p);
    set_thread_count(1);
    return std::pair{all.mean(), all.variance()};
  };
  const auto one = run(1);
  const auto many = run(8);
  CHECK(one.first == many.first);
  CHECK(one.second == many.second);
}
