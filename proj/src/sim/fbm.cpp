#include "finflow/sim/fbm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "finflow/rng.hpp"

namespace finflow::sim {

double fgn_autocovariance(double hurst, int lag) {
  const double k = std::abs(static_cast<double>(lag));
  const double two_h = 2.0 * hurst;
  return 0.5 * (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) +
                std::pow(std::abs(k - 1.0), two_h));
}

namespace {

struct FbmPlan {
  bool spectral = true;
  std::vector<double> lambda;  // size 2n, circulant eigenvalues
  Eigen::MatrixXd chol;        // lower factor, only when !spectral
};

// Plans depend only on (hurst, n); memoized so repeated episodes pay one FFT
// worth of setup per scenario shape.
std::shared_ptr<const FbmPlan> plan_for(double hurst, int n) {
  static std::mutex mu;
  static std::map<std::pair<std::uint64_t, int>, std::shared_ptr<const FbmPlan>>
      cache;
  std::uint64_t hbits;
  static_assert(sizeof(hbits) == sizeof(hurst));
  std::memcpy(&hbits, &hurst, sizeof(hbits));
  const auto key = std::make_pair(hbits, n);
  {
    std::lock_guard<std::mutex> g(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto plan = std::make_shared<FbmPlan>();
  if (!detail::davies_harte_eigenvalues(hurst, n, plan->lambda)) {
    plan->spectral = false;
    Eigen::MatrixXd cov(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cov(i, j) = fgn_autocovariance(hurst, i - j);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("fbm: covariance factorization failed");
    plan->chol = llt.matrixL();
  }
  std::lock_guard<std::mutex> g(mu);
  auto [it, inserted] = cache.emplace(key, std::move(plan));
  return it->second;
}

}  // namespace

namespace detail {

bool davies_harte_eigenvalues(double hurst, int n, std::vector<double>& out) {
  const int m = 2 * n;
  std::vector<std::complex<double>> row(m);
  for (int j = 0; j <= n; ++j) row[j] = fgn_autocovariance(hurst, j);
  for (int j = n + 1; j < m; ++j) row[j] = row[m - j];
  std::vector<std::complex<double>> freq(m);
  Eigen::FFT<double> fft;
  fft.fwd(freq, row);
  out.resize(m);
  double max_ev = 0.0, min_ev = 0.0;
  for (int k = 0; k < m; ++k) {
    out[k] = freq[k].real();
    max_ev = std::max(max_ev, out[k]);
    min_ev = std::min(min_ev, out[k]);
  }
  if (min_ev < -1e-8 * std::max(1.0, max_ev)) return false;
  for (auto& v : out) v = std::max(0.0, v);
  return true;
}

std::vector<double> simulate_fbm_cholesky(double hurst, int n, double dt,
                                          std::uint64_t seed) {
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cov(i, j) = fgn_autocovariance(hurst, i - j);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("fbm: covariance factorization failed");
  Eigen::MatrixXd lower = llt.matrixL();
  Rng rng(seed);
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g(i) = rng.normal();
  Eigen::VectorXd x = lower * g;
  const double scale = std::pow(dt, hurst);
  std::vector<double> inc(n);
  for (int i = 0; i < n; ++i) inc[i] = scale * x(i);
  return inc;
}

}  // namespace detail

std::vector<double> simulate_fbm(double hurst, int n, double dt,
                                 std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::invalid_argument("fbm: hurst must be in (0, 1)");
  if (n < 1) throw std::invalid_argument("fbm: n must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("fbm: dt must be > 0");

  auto plan = plan_for(hurst, n);
  Rng rng(seed);
  const double scale = std::pow(dt, hurst);

  if (!plan->spectral) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g(i) = rng.normal();
    Eigen::VectorXd x = plan->chol * g;
    std::vector<double> inc(n);
    for (int i = 0; i < n; ++i) inc[i] = scale * x(i);
    return inc;
  }

  const int m = 2 * n;
  std::vector<std::complex<double>> a(m);
  const auto& lam = plan->lambda;
  // Fixed draw order: endpoint normals first, then one (re, im) pair per
  // conjugate frequency bin.
  const double v0 = rng.normal();
  const double vn = rng.normal();
  a[0] = std::sqrt(lam[0] / m) * v0;
  a[n] = std::sqrt(lam[n] / m) * vn;
  for (int k = 1; k < n; ++k) {
    const double re = rng.normal();
    const double im = rng.normal();
    const double s = std::sqrt(lam[k] / (2.0 * m));
    a[k] = std::complex<double>(s * re, s * im);
    a[m - k] = std::conj(a[k]);
  }
  std::vector<std::complex<double>> x(m);
  Eigen::FFT<double> fft;
  fft.fwd(x, a);
  std::vector<double> inc(n);
  for (int i = 0; i < n; ++i) inc[i] = scale * x[i].real();
  return inc;
}

}  // namespace finflow::sim
