#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace finflow::harness {

// mean / sample std (n-1), risk-free rate 0. A zero-std series is defined as
// ratio 0 with the degenerate flag set.
double sharpe_ratio(std::span<const double> returns, bool* degenerate = nullptr);

// Largest peak-to-trough decline in percent, single pass:
//   max_t (peak_t - w_t) / max(|peak_t|, 1) * 100.
double max_drawdown(std::span<const double> series);

double mean(std::span<const double> xs);
double sample_std(std::span<const double> xs);

// One-sided paired test of H1: mean(a - b) > 0 over paired samples; returns
// the p-value under the normal approximation of the t statistic.
double paired_one_sided_pvalue(std::span<const double> a,
                               std::span<const double> b);

}  // namespace finflow::harness
