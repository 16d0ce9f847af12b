#include "levy/stats.hpp"

#include <algorithm>
#include <cassert>

namespace levy {

DensityEstimate summarize(std::span<const double> values) {
  MeanAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.estimate();
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, hi - f, f - lo});
  }
  return d;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.27) {
    // Small-lambda form avoids the slowly converging alternating series.
    const double pi2 = M_PI * M_PI;
    const double v = -pi2 / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 7; k += 2) sum += std::exp(v * k * k);
    return 1.0 - std::sqrt(2.0 * M_PI) / lambda * sum;
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_pvalue(double d, std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d);
}

double ks_critical_value(double alpha, std::size_t n) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (ks_pvalue(mid, n) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  CompensatedSum sum;
  for (std::size_t i = 1; i < x.size(); ++i) sum.add(0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
  return sum.value();
}

}  // namespace levy
