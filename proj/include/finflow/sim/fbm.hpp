#pragma once

#include <cstdint>
#include <vector>

namespace finflow::sim {

// Autocovariance of unit-variance fractional Gaussian noise at integer lag:
//   gamma(k) = 0.5 (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
double fgn_autocovariance(double hurst, int lag);

// Generates n increments of fractional Brownian motion over steps of length
// dt, i.e. stationary fractional Gaussian noise with Var = dt^{2H} and
// Cov(X_i, X_{i+k}) = dt^{2H} gamma(k). H = 0.5 reduces to i.i.d. N(0, dt).
//
// Uses Davies-Harte circulant embedding (exact, O(n log n)); falls back to a
// Cholesky factor of the Toeplitz covariance if the embedding is not
// nonnegative definite. Deterministic given the seed.
std::vector<double> simulate_fbm(double hurst, int n, double dt,
                                 std::uint64_t seed);

namespace detail {
// Circulant eigenvalues for the embedding of size 2n. Returns false when any
// eigenvalue is materially negative (embedding infeasible).
bool davies_harte_eigenvalues(double hurst, int n, std::vector<double>& out);
// Exact O(n^2) fallback path, exposed for tests.
std::vector<double> simulate_fbm_cholesky(double hurst, int n, double dt,
                                          std::uint64_t seed);
}  // namespace detail

}  // namespace finflow::sim
