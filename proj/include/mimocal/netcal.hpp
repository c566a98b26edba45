#pragma once

// MGF-based stochastic network calculus: service MGF of a Markov-modulated
// server, arrival MGF of a phase-randomized periodic source, the FIFO delay
// bound with θ-optimization, and the delay-constrained throughput search.
//
// All bound evaluation runs in log space: the service curve accumulates log
// scale factors of a renormalized state vector, and the bound sum uses
// streaming log-sum-exp, so θσ up to hundreds neither overflows nor turns a
// 0·inf product into NaN.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "mimocal/markov.hpp"

namespace mimocal {

// σ blocks every τ slots, burst phase uniform over the period.
struct PeriodicSource {
  double sigma = 0.0;
  int tau = 1;
  double rate() const { return sigma / static_cast<double>(tau); }
};

// log M_A(θ,t) = θσ·⌊t/τ⌋ + log(1 + (t/τ − ⌊t/τ⌋)(e^{θσ} − 1)), evaluated
// with stable branches for small and large θσ.
inline double arrival_log_mgf(const PeriodicSource& src, double theta, std::int64_t t) {
  if (theta <= 0.0) throw std::domain_error("arrival_log_mgf: theta must be positive");
  if (t < 0) throw std::domain_error("arrival_log_mgf: t must be nonnegative");
  if (t == 0 || src.sigma == 0.0) return 0.0;
  const std::int64_t k = t / src.tau;
  const double frac = static_cast<double>(t - k * src.tau) / static_cast<double>(src.tau);
  const double x = theta * src.sigma;
  double rem;
  if (x < 30.0)
    rem = std::log1p(frac * std::expm1(x));
  else
    rem = x + std::log(frac + (1.0 - frac) * std::exp(-x));
  return static_cast<double>(k) * x + rem;
}

inline double arrival_mgf(const PeriodicSource& src, double theta, std::int64_t t) {
  return std::exp(arrival_log_mgf(src, theta, t));
}

// log M̂_S(θ,s) for s = 0..t_max (entry 0 is log 1 = 0: no service in zero
// time). Incremental left-multiplication with per-step renormalization keeps
// every intermediate in [0,1] while the log magnitude accumulates exactly.
inline std::vector<double> service_log_mgf_curve(const ServiceChain& chain, double theta,
                                                 int t_max) {
  if (theta <= 0.0) throw std::domain_error("service_log_mgf_curve: theta must be positive");
  if (t_max < 1) throw std::domain_error("service_log_mgf_curve: t_max must be >= 1");
  const int k = chain.k;
  std::vector<double> decay(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    decay[static_cast<std::size_t>(i)] = std::exp(-theta * chain.rates[static_cast<std::size_t>(i)]);

  std::vector<double> curve(static_cast<std::size_t>(t_max) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(k)), w(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    v[static_cast<std::size_t>(i)] =
        chain.pi[static_cast<std::size_t>(i)] * decay[static_cast<std::size_t>(i)];

  double log_acc = 0.0;
  for (int t = 1; t <= t_max; ++t) {
    double scale = 0.0;
    for (double x : v) scale += x;
    log_acc += std::log(scale);
    curve[static_cast<std::size_t>(t)] = log_acc;
    if (t == t_max) break;
    const double inv = 1.0 / scale;
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < k; ++i) {
      const double vi = v[static_cast<std::size_t>(i)] * inv;
      if (vi == 0.0) continue;
      const double* row = &chain.q[static_cast<std::size_t>(i) * k];
      for (int j = 0; j < k; ++j) w[static_cast<std::size_t>(j)] += vi * row[j];
    }
    for (int j = 0; j < k; ++j) w[static_cast<std::size_t>(j)] *= decay[static_cast<std::size_t>(j)];
    v.swap(w);
  }
  return curve;
}

// M̂_S(θ,t) = π·(R(−θ)Q)^{t−1}·R(−θ)·1 with R(−θ) = diag(e^{−θR_i});
// M̂_S(θ,0) = 1 (no service accrues in zero time).
inline double service_mgf(const ServiceChain& chain, double theta, int t) {
  if (t < 0) throw std::domain_error("service_mgf: t must be >= 0");
  if (t == 0) {
    if (theta <= 0.0) throw std::domain_error("service_mgf: theta must be positive");
    return 1.0;
  }
  return std::exp(service_log_mgf_curve(chain, theta, t)[static_cast<std::size_t>(t)]);
}

struct DelayBoundResult {
  std::optional<int> d;       // empty = infeasible at every tried θ
  double theta_star = std::numeric_limits<double>::quiet_NaN();
  double tail_mass = std::numeric_limits<double>::quiet_NaN();
  int trunc = 0;
  bool unstable_tail = false;  // set when infeasibility came from a non-decaying tail

  bool feasible() const { return d.has_value(); }
};

// Default θ grid: 60 log-spaced points spanning [1e-3, 10].
inline std::vector<double> default_theta_grid(double theta_min = 1e-3, double theta_max = 10.0,
                                              int points = 60) {
  if (!(theta_min > 0.0) || !(theta_max > theta_min) || points < 1)
    throw std::invalid_argument("default_theta_grid: need 0 < theta_min < theta_max, points >= 1");
  std::vector<double> grid(static_cast<std::size_t>(points));
  if (points == 1) {
    grid[0] = theta_min;
    return grid;
  }
  const double log_min = std::log(theta_min);
  const double step = (std::log(theta_max) - log_min) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = std::exp(log_min + i * step);
  return grid;
}

namespace detail {

// Shared evaluation context: caches the service log-MGF curve per θ so the
// throughput bisection re-prices only the arrival side.
class DelayBoundContext {
 public:
  DelayBoundContext(const ServiceChain& chain, int trunc) : chain_(chain), trunc_(trunc) {
    if (trunc < 1) throw std::invalid_argument("delay bound: trunc must be >= 1");
  }

  int trunc() const { return trunc_; }

  const std::vector<double>& curve(double theta) {
    auto it = curves_.find(theta);
    if (it == curves_.end()) {
      // The refinement step probes fresh θ values on every bisection pass;
      // without a cap the cache would grow without bound over a long sweep.
      if (curves_.size() >= kMaxCachedCurves) curves_.clear();
      it = curves_.emplace(theta, service_log_mgf_curve(chain_, theta, trunc_)).first;
    }
    return it->second;
  }

  struct ThetaOutcome {
    std::optional<int> d;
    double tail_mass = std::numeric_limits<double>::quiet_NaN();
    bool unstable = false;
  };

  // Smallest τ ∈ [0, trunc] with Σ_{s=τ}^{trunc} M_A(θ,s−τ)·M̂_S(θ,s) ≤ ε.
  // The sum is nonincreasing in τ (shifting τ up only shrinks every arrival
  // factor), so binary search returns the same τ as a linear scan.
  ThetaOutcome min_delay(const PeriodicSource& src, double eps, double theta) {
    const std::vector<double>& lms = curve(theta);
    const double log_eps = std::log(eps);
    // Arrival factors depend only on the lag s−τ; tabulate once per (θ,σ).
    std::vector<double> lma(static_cast<std::size_t>(trunc_) + 1);
    for (int u = 0; u <= trunc_; ++u)
      lma[static_cast<std::size_t>(u)] = arrival_log_mgf(src, theta, u);
    const auto log_sum = [&](int tau) { return log_bound_sum(lma, lms, tau); };

    ThetaOutcome out;
    if (log_sum(trunc_).first > log_eps) return out;  // even a single-term sum too large
    int lo = -1, hi = trunc_;  // invariant: F(lo) > eps (or lo == -1), F(hi) <= eps
    if (log_sum(0).first <= log_eps) {
      hi = 0;
    } else {
      lo = 0;
      while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (log_sum(mid).first <= log_eps)
          hi = mid;
        else
          lo = mid;
      }
    }
    const auto [total, tail] = log_sum(hi);
    out.tail_mass = tail;
    if (tail > kTailThreshold) {
      out.unstable = true;  // truncated sum not decaying: bound untrustworthy
      return out;
    }
    out.d = hi;
    return out;
  }

 private:
  static constexpr double kTailThreshold = 1e-3;
  static constexpr std::size_t kMaxCachedCurves = 512;

  // Returns (log Σ, last-term mass) of the truncated bound sum at delay τ.
  std::pair<double, double> log_bound_sum(const std::vector<double>& lma,
                                          const std::vector<double>& lms, int tau) const {
    double max_term = -std::numeric_limits<double>::infinity();
    for (int s = tau; s <= trunc_; ++s) {
      const double term =
          lma[static_cast<std::size_t>(s - tau)] + lms[static_cast<std::size_t>(s)];
      max_term = std::max(max_term, term);
    }
    double acc = 0.0;
    double last = 0.0;
    for (int s = tau; s <= trunc_; ++s) {
      last = std::exp(lma[static_cast<std::size_t>(s - tau)] +
                      lms[static_cast<std::size_t>(s)] - max_term);
      acc += last;
    }
    return {max_term + std::log(acc), last / acc};
  }

  const ServiceChain& chain_;
  int trunc_;
  std::map<double, std::vector<double>> curves_;
};

inline DelayBoundResult optimize_delay_bound(DelayBoundContext& ctx, const PeriodicSource& src,
                                             double eps, const std::vector<double>& theta_grid,
                                             bool refine) {
  DelayBoundResult best;
  best.trunc = ctx.trunc();
  bool any_unstable = false;

  std::size_t argmin = theta_grid.size();
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    const auto outcome = ctx.min_delay(src, eps, theta_grid[i]);
    any_unstable = any_unstable || outcome.unstable;
    if (outcome.d && (!best.d || *outcome.d < *best.d)) {
      best.d = outcome.d;
      best.theta_star = theta_grid[i];
      best.tail_mass = outcome.tail_mass;
      argmin = i;
    }
  }

  // One golden-section refinement (in log θ) around the grid argmin; the
  // objective is integer-valued, so we keep the best point seen and break
  // ties toward smaller θ.
  if (refine && best.d && theta_grid.size() >= 2) {
    const std::size_t left_idx = argmin == 0 ? 0 : argmin - 1;
    const std::size_t right_idx = std::min(argmin + 1, theta_grid.size() - 1);
    double lo = std::log(theta_grid[left_idx]);
    double hi = std::log(theta_grid[right_idx]);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - inv_phi * (hi - lo);
    double b = lo + inv_phi * (hi - lo);
    auto value = [&](double log_theta) -> std::pair<double, DelayBoundContext::ThetaOutcome> {
      const double theta = std::exp(log_theta);
      return {theta, ctx.min_delay(src, eps, theta)};
    };
    auto consider = [&](double theta, const DelayBoundContext::ThetaOutcome& outcome) {
      if (outcome.d &&
          (*outcome.d < *best.d || (*outcome.d == *best.d && theta < best.theta_star))) {
        best.d = outcome.d;
        best.theta_star = theta;
        best.tail_mass = outcome.tail_mass;
      }
    };
    auto [ta, oa] = value(a);
    auto [tb, ob] = value(b);
    consider(ta, oa);
    consider(tb, ob);
    for (int iter = 0; iter < 24; ++iter) {
      const double da = oa.d ? static_cast<double>(*oa.d) : std::numeric_limits<double>::infinity();
      const double db = ob.d ? static_cast<double>(*ob.d) : std::numeric_limits<double>::infinity();
      if (da <= db) {
        hi = b;
        b = a;
        tb = ta;
        ob = oa;
        a = hi - inv_phi * (hi - lo);
        std::tie(ta, oa) = value(a);
        consider(ta, oa);
      } else {
        lo = a;
        a = b;
        ta = tb;
        oa = ob;
        b = lo + inv_phi * (hi - lo);
        std::tie(tb, ob) = value(b);
        consider(tb, ob);
      }
    }
  }

  if (!best.d) best.unstable_tail = any_unstable;
  return best;
}

}  // namespace detail

// Smallest τ with the truncated bound sum ≤ ε at one θ; infeasible when no
// τ ≤ trunc qualifies or the sum is not decaying at the truncation horizon.
inline DelayBoundResult delay_bound_at_theta(const ServiceChain& chain, const PeriodicSource& src,
                                             double eps, double theta, int trunc = 4000) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw std::domain_error("delay_bound_at_theta: eps must lie in (0,1]");
  detail::DelayBoundContext ctx(chain, trunc);
  DelayBoundResult result;
  result.trunc = trunc;
  const auto outcome = ctx.min_delay(src, eps, theta);
  result.d = outcome.d;
  result.tail_mass = outcome.tail_mass;
  result.unstable_tail = outcome.unstable;
  if (outcome.d) result.theta_star = theta;
  return result;
}

// Minimum bound over a θ grid plus golden-section refinement around the
// argmin; ties broken toward smaller θ.
inline DelayBoundResult delay_bound(const ServiceChain& chain, const PeriodicSource& src,
                                    double eps, const std::vector<double>& theta_grid,
                                    int trunc = 4000, bool refine = true) {
  if (theta_grid.empty()) throw std::invalid_argument("delay_bound: empty theta grid");
  if (!(eps > 0.0 && eps <= 1.0))
    throw std::domain_error("delay_bound: eps must lie in (0,1]");
  detail::DelayBoundContext ctx(chain, trunc);
  return detail::optimize_delay_bound(ctx, src, eps, theta_grid, refine);
}

struct SearchSettings {
  double lambda_tol = 1e-3;   // absolute bisection tolerance, blocks/slot
  bool integer_sigma = false; // restrict burst size to whole blocks
};

struct ThroughputResult {
  double lambda = 0.0;               // largest feasible rate found (blocks/slot)
  double sigma = 0.0;                // λ·τ at the returned rate
  DelayBoundResult bound;            // bound evaluated at the returned rate
  bool infeasible_at_zero = false;   // guarantee unachievable even with no traffic
  int iterations = 0;
};

// Reusable bound/throughput evaluator for one chain: service log-MGF curves
// are cached per θ, so sweeping d^G, ε, or λ re-prices only the arrival side.
// The solver must not outlive the chain it references.
class ThroughputSolver {
 public:
  explicit ThroughputSolver(const ServiceChain& chain,
                            std::vector<double> theta_grid = default_theta_grid(),
                            int trunc = 4000)
      : grid_(std::move(theta_grid)), ctx_(chain, trunc) {
    if (grid_.empty()) throw std::invalid_argument("ThroughputSolver: empty theta grid");
    for (double r : chain.rates) rate_cap_ = std::max(rate_cap_, r);
  }

  DelayBoundResult bound(const PeriodicSource& src, double eps) {
    if (!(eps > 0.0 && eps <= 1.0))
      throw std::domain_error("ThroughputSolver::bound: eps must lie in (0,1]");
    return detail::optimize_delay_bound(ctx_, src, eps, grid_, true);
  }

  // Delay-constrained throughput: the largest λ (σ = λτ) whose delay bound
  // stays within d_guarantee. The feasible set is an interval in λ (raising
  // arrivals never shrinks the bound), which the bracket endpoints spot-check.
  ThroughputResult solve(int d_guarantee, double eps, int tau,
                         const SearchSettings& settings = {}) {
    if (d_guarantee < 0) throw std::domain_error("throughput: d_guarantee must be >= 0");
    if (!(eps > 0.0 && eps <= 1.0)) throw std::domain_error("throughput: eps must lie in (0,1]");
    if (tau < 1) throw std::domain_error("throughput: tau must be >= 1");

    ThroughputResult result;
    auto bound_at = [&](double lambda) {
      const PeriodicSource src{lambda * static_cast<double>(tau), tau};
      ++result.iterations;
      return detail::optimize_delay_bound(ctx_, src, eps, grid_, true);
    };
    auto feasible = [&](double lambda) {
      const auto b = bound_at(lambda);
      return b.d && *b.d <= d_guarantee;
    };

    if (!feasible(0.0)) {
      result.infeasible_at_zero = true;
      result.bound = bound_at(0.0);
      return result;
    }
    if (rate_cap_ == 0.0) {
      result.bound = bound_at(0.0);
      return result;
    }

    if (settings.integer_sigma) {
      // Search whole-block burst sizes directly; the predicate is monotone in σ.
      std::int64_t lo = 0;
      std::int64_t hi = static_cast<std::int64_t>(std::floor(rate_cap_ * tau)) + 1;
      auto feasible_sigma = [&](std::int64_t sigma) {
        return feasible(static_cast<double>(sigma) / static_cast<double>(tau));
      };
      while (feasible_sigma(hi)) hi *= 2;  // defensive; rates bound this quickly
      while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (feasible_sigma(mid))
          lo = mid;
        else
          hi = mid;
      }
      result.sigma = static_cast<double>(lo);
      result.lambda = result.sigma / static_cast<double>(tau);
      result.bound = bound_at(result.lambda);
      return result;
    }

    double lo = 0.0, hi = rate_cap_;
    if (feasible(hi)) {
      result.lambda = hi;
      result.sigma = hi * tau;
      result.bound = bound_at(hi);
      return result;
    }
    while (hi - lo > settings.lambda_tol) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(mid))
        lo = mid;
      else
        hi = mid;
    }
    result.lambda = lo;
    result.sigma = lo * tau;
    result.bound = bound_at(lo);
    return result;
  }

 private:
  std::vector<double> grid_;
  detail::DelayBoundContext ctx_;
  double rate_cap_ = 0.0;
};

inline ThroughputResult throughput(const ServiceChain& chain, int d_guarantee, double eps,
                                   int tau, const SearchSettings& settings = {},
                                   const std::vector<double>& theta_grid = default_theta_grid(),
                                   int trunc = 4000) {
  ThroughputSolver solver(chain, theta_grid, trunc);
  return solver.solve(d_guarantee, eps, tau, settings);
}

}  // namespace mimocal
