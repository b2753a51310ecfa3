#include "finflow/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace finflow::harness {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty series");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_std: need >= 2 entries");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double sharpe_ratio(std::span<const double> returns, bool* degenerate) {
  if (returns.size() < 2)
    throw std::invalid_argument("sharpe_ratio: need >= 2 returns");
  const double sd = sample_std(returns);
  if (degenerate) *degenerate = sd == 0.0;
  if (sd == 0.0) return 0.0;
  return mean(returns) / sd;
}

double max_drawdown(std::span<const double> series) {
  if (series.empty()) throw std::invalid_argument("max_drawdown: empty series");
  double peak = series[0];
  double worst = 0.0;
  for (double w : series) {
    peak = std::max(peak, w);
    const double dd = (peak - w) / std::max(std::abs(peak), 1.0) * 100.0;
    worst = std::max(worst, dd);
  }
  return worst;
}

double paired_one_sided_pvalue(std::span<const double> a,
                               std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("paired test: need equal-length series, n >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double m = mean(d);
  const double sd = sample_std(d);
  if (sd == 0.0) return m > 0.0 ? 0.0 : 1.0;
  const double t = m / (sd / std::sqrt(static_cast<double>(d.size())));
  return 0.5 * std::erfc(t / std::sqrt(2.0));
}

}  // namespace finflow::harness
