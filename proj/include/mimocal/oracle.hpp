#pragma once

// Independent validation oracles: brute-force path enumeration for the service
// MGF, a slot-level FIFO queue simulator, closed-form and Monte Carlo Wishart
// log-determinants, a Monte Carlo arrival MGF, and a quadrature-grade SISO
// capacity reference. These deliberately share no formula code with the
// analytic modules beyond primitive arithmetic and harmonic_number.

#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "mimocal/channel.hpp"
#include "mimocal/errors.hpp"
#include "mimocal/netcal.hpp"
#include "mimocal/rng.hpp"
#include "mimocal/stats.hpp"

namespace mimocal {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

// Exact service MGF by enumerating all K^t state paths:
//   Σ_paths π_{i1}·e^{−θR_{i1}}·Π_t q_{i_{t−1} i_t}·e^{−θR_{it}}.
// Kahan compensation keeps ~10^7-term sums accurate to ~1 ulp.
inline double brute_force_service_mgf(const ServiceChain& chain, double theta, int t) {
  if (theta <= 0.0) throw std::domain_error("brute_force_service_mgf: theta must be positive");
  if (t < 1) throw std::domain_error("brute_force_service_mgf: t must be >= 1");
  const double paths = std::pow(static_cast<double>(chain.k), static_cast<double>(t));
  if (paths > 1e8)
    throw EnumerationGuardError("brute_force_service_mgf: K^t exceeds the 1e8 path guard");

  const int k = chain.k;
  std::vector<double> decay(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    decay[static_cast<std::size_t>(i)] = std::exp(-theta * chain.rates[static_cast<std::size_t>(i)]);

  KahanSum total;
  struct Walker {
    const ServiceChain& chain;
    const std::vector<double>& decay;
    int depth_max;
    KahanSum& total;
    void walk(int state, int depth, double acc) {
      acc *= decay[static_cast<std::size_t>(state)];
      if (depth == depth_max) {
        total.add(acc);
        return;
      }
      const double* row = &chain.q[static_cast<std::size_t>(state) * chain.k];
      for (int next = 0; next < chain.k; ++next)
        walk(next, depth + 1, acc * row[next]);
    }
  } walker{chain, decay, t, total};
  for (int i = 0; i < k; ++i) walker.walk(i, 1, chain.pi[static_cast<std::size_t>(i)]);
  return total.value();
}

// Delay samples from a slot-level FIFO queue fed by the periodic source.
// Convention (the bound must dominate any work-conserving FIFO discipline):
// a burst arriving during slot t joins the queue at the end of slot t, is
// serviceable from slot t+1 on, and its delay is departure_slot − arrival_slot.
// Zero-size bursts depart on arrival with delay 0. Bursts still queued at the
// horizon are tracked separately so violation counts stay conservative.
struct QueueTrace {
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> delays;        // departed bursts
  std::vector<std::int64_t> pending_ages;  // still queued at the horizon

  std::int64_t bursts() const {
    return static_cast<std::int64_t>(delays.size() + pending_ages.size());
  }

  std::int64_t violations(std::int64_t d) const {
    std::int64_t count = 0;
    for (std::int64_t v : delays) count += v > d ? 1 : 0;
    for (std::int64_t age : pending_ages) count += age > d ? 1 : 0;
    return count;
  }
};

inline QueueTrace simulate_queue(const ServiceChain& chain, const PeriodicSource& src,
                                 std::int64_t horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::domain_error("simulate_queue: horizon must be >= 1");
  QueueTrace trace;
  trace.horizon = horizon;
  trace.seed = seed;

  Xoshiro256pp rng(seed);
  const int k = chain.k;
  std::vector<double> pi_cdf(static_cast<std::size_t>(k));
  {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      acc += chain.pi[static_cast<std::size_t>(i)];
      pi_cdf[static_cast<std::size_t>(i)] = acc;
    }
  }
  std::vector<double> row_cdf(static_cast<std::size_t>(k) * k);
  for (int i = 0; i < k; ++i) {
    double acc = 0.0;
    for (int j = 0; j < k; ++j) {
      acc += chain.q[static_cast<std::size_t>(i) * k + j];
      row_cdf[static_cast<std::size_t>(i) * k + j] = acc;
    }
  }
  auto pick = [&](const double* cdf, double u) {
    int lo = 0, hi = k - 1;
    while (lo < hi) {
      const int mid = lo + (hi - lo) / 2;
      if (u <= cdf[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  };

  int state = pick(pi_cdf.data(), rng.uniform());
  const double phase = rng.uniform();
  double next_arrival = phase * static_cast<double>(src.tau);

  struct Burst {
    std::int64_t arrival_slot;
    double remaining;
  };
  std::deque<Burst> queue;

  for (std::int64_t t = 0; t < horizon; ++t) {
    double capacity = chain.rates[static_cast<std::size_t>(state)];
    while (!queue.empty() && capacity > 0.0) {
      Burst& head = queue.front();
      const double served = std::min(head.remaining, capacity);
      head.remaining -= served;
      capacity -= served;
      if (head.remaining <= 1e-12) {
        trace.delays.push_back(t - head.arrival_slot);
        queue.pop_front();
      }
    }
    while (next_arrival < static_cast<double>(t + 1)) {
      if (src.sigma > 0.0)
        queue.push_back({t, src.sigma});
      else
        trace.delays.push_back(0);
      next_arrival += static_cast<double>(src.tau);
    }
    state = pick(&row_cdf[static_cast<std::size_t>(state) * k], rng.uniform());
  }
  for (const Burst& b : queue) trace.pending_ages.push_back(horizon - b.arrival_slot);
  return trace;
}

// E[ln det(H·H†)] for an r×r matrix of unit complex Gaussians:
//   Σ_{k=1}^{r} (H_{k−1} − γ)  (natural log).
inline double wishart_logdet_mean(int r) {
  if (r < 1) throw std::domain_error("wishart_logdet_mean: r must be >= 1");
  double mean = 0.0;
  for (int k = 1; k <= r; ++k) mean += harmonic_number(k - 1) - kEulerGamma;
  return mean;
}

// Monte Carlo counterpart of wishart_logdet_mean.
inline McEstimate mc_wishart_logdet(int r, std::int64_t samples, std::uint64_t seed) {
  if (r < 1 || samples < 1) throw std::domain_error("mc_wishart_logdet: bad arguments");
  Xoshiro256pp rng(seed);
  RunningMoments moments;
  const double amp = std::sqrt(0.5);
  std::vector<Complex> h(static_cast<std::size_t>(r) * r);
  for (std::int64_t s = 0; s < samples; ++s) {
    for (auto& entry : h) entry = Complex{amp * rng.normal(), amp * rng.normal()};
    moments.add(logdet_scaled_gram(h, r, 1.0, 0.0));
  }
  return {moments.mean, moments.std_error(), moments.n};
}

// Monte Carlo arrival MGF: draw the phase U, count bursts in (0, t], average
// e^{θ·σ·count}.
inline McEstimate mc_arrival_mgf(const PeriodicSource& src, double theta, std::int64_t t,
                                 std::int64_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::domain_error("mc_arrival_mgf: samples must be >= 1");
  Xoshiro256pp rng(seed);
  RunningMoments moments;
  const double t_over_tau = static_cast<double>(t) / static_cast<double>(src.tau);
  for (std::int64_t s = 0; s < samples; ++s) {
    const double u = rng.uniform();
    const double count = u <= t_over_tau ? std::floor(t_over_tau - u) + 1.0 : 0.0;
    moments.add(std::exp(theta * src.sigma * count));
  }
  return {moments.mean, moments.std_error(), moments.n};
}

// Rayleigh SISO ergodic capacity e^{1/ρ}·E₁(1/ρ)/ln 2 via the E₁ power series
// E₁(x) = −γ − ln x + Σ (−1)^{k+1} x^k/(k·k!); accurate to ~1e−12 for x ≤ 3,
// which covers every SNR of interest (x = 1/ρ).
inline double siso_capacity_reference(double snr_db) {
  const double rho = std::pow(10.0, snr_db / 10.0);
  const double x = 1.0 / rho;
  if (x > 3.0) throw std::domain_error("siso_capacity_reference: series valid for snr >= ~-5 dB");
  double sum = 0.0;
  double term = 1.0;
  for (int k = 1; k <= 60; ++k) {
    term *= -x / static_cast<double>(k);
    sum -= term / static_cast<double>(k);
  }
  const double e1 = -kEulerGamma - std::log(x) + sum;
  return std::exp(x) * e1 / std::numbers::ln2;
}

}  // namespace mimocal
