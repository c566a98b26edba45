#pragma once

// Small dense numerics used by the capacity estimator and chain analysis:
// Cholesky log-determinants of Hermitian positive-definite matrices and a
// subtraction-free (GTH) stationary solver for finite Markov chains.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mimocal {

using Complex = std::complex<double>;

// Natural-log determinant of a Hermitian positive-definite matrix `a`
// (row-major n×n), destroyed in place by the Cholesky factorization.
inline double cholesky_logdet_inplace(std::vector<Complex>& a, int n) {
  double logdet = 0.0;
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j].real();
    for (int k = 0; k < j; ++k) d -= std::norm(a[j * n + k]);
    if (!(d > 0.0)) throw std::domain_error("cholesky_logdet: matrix not positive definite");
    logdet += std::log(d);
    const double root = std::sqrt(d);
    a[j * n + j] = root;
    for (int i = j + 1; i < n; ++i) {
      Complex v = a[i * n + j];
      for (int k = 0; k < j; ++k) v -= a[i * n + k] * std::conj(a[j * n + k]);
      a[i * n + j] = v / root;
    }
  }
  return logdet;
}

// ln det(scale·I + coeff·H·H†) for a row-major n×n complex matrix H.
// scale = 1 gives the capacity integrand; scale = 0 the raw Gram determinant.
inline double logdet_scaled_gram(const std::vector<Complex>& h, int n, double coeff,
                                 double scale) {
  std::vector<Complex> a(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      Complex g{0.0, 0.0};
      for (int k = 0; k < n; ++k) g += h[i * n + k] * std::conj(h[j * n + k]);
      a[i * n + j] = coeff * g;
    }
    a[i * n + i] += scale;
  }
  return cholesky_logdet_inplace(a, n);
}

// Stationary distribution of a row-stochastic matrix `q` (row-major k×k) by
// Grassmann-Taksar-Heyman elimination: no subtractions, entrywise stable, and
// valid for any irreducible chain. Consumes a copy of q.
inline std::vector<double> gth_stationary(std::vector<double> q, int k) {
  if (k <= 0) throw std::invalid_argument("gth_stationary: empty chain");
  for (int m = k - 1; m >= 1; --m) {
    double scale = 0.0;
    for (int j = 0; j < m; ++j) scale += q[m * k + j];
    if (!(scale > 0.0))
      throw std::domain_error("gth_stationary: chain is reducible (zero return rate)");
    for (int i = 0; i < m; ++i) q[i * k + m] /= scale;
    for (int i = 0; i < m; ++i) {
      const double w = q[i * k + m];
      if (w == 0.0) continue;
      for (int j = 0; j < m; ++j) q[i * k + j] += w * q[m * k + j];
    }
  }
  std::vector<double> pi(k, 0.0);
  pi[0] = 1.0;
  for (int m = 1; m < k; ++m) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += pi[i] * q[i * k + m];
    pi[m] = acc;
  }
  double total = 0.0;
  for (double v : pi) total += v;
  for (double& v : pi) v /= total;
  return pi;
}

// Power iteration on pi <- pi·q; test oracle for gth_stationary.
inline std::vector<double> power_iteration_stationary(const std::vector<double>& q, int k,
                                                      double tol = 1e-13,
                                                      int max_iter = 2000000) {
  std::vector<double> pi(k, 1.0 / k);
  std::vector<double> next(k);
  for (int iter = 0; iter < max_iter; ++iter) {
    for (int j = 0; j < k; ++j) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += pi[i] * q[i * k + j];
      next[j] = acc;
    }
    double norm = 0.0;
    for (double v : next) norm += v;
    double diff = 0.0;
    for (int j = 0; j < k; ++j) {
      next[j] /= norm;
      diff = std::max(diff, std::abs(next[j] - pi[j]));
    }
    pi.swap(next);
    if (diff < tol) break;
  }
  return pi;
}

}  // namespace mimocal
