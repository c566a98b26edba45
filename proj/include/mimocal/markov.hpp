#pragma once

// Markov-modulated service processes: per-path good/bad (Gilbert-Elliott)
// dynamics, the exact sub-state chain, the DOF-aggregated chain, stationary
// analysis and first-order capacity.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mimocal/channel.hpp"
#include "mimocal/errors.hpp"
#include "mimocal/linalg.hpp"

namespace mimocal {

struct GilbertElliott {
  double p_gb = 0.0;  // good -> bad per slot
  double p_bg = 0.0;  // bad -> good per slot
};

inline void validate(const GilbertElliott& ge) {
  if (!(ge.p_gb >= 0.0 && ge.p_gb <= 1.0 && ge.p_bg >= 0.0 && ge.p_bg <= 1.0))
    throw InfeasibleParameterError("GilbertElliott: probabilities must lie in [0,1]");
}

// Stationary bad-state probability κ = p_gb / (p_gb + p_bg).
inline double ge_kappa(const GilbertElliott& ge) {
  validate(ge);
  const double total = ge.p_gb + ge.p_bg;
  if (total == 0.0)
    throw DegenerateChainError("ge_kappa: p_gb = p_bg = 0 has no unique stationary state");
  return ge.p_gb / total;
}

// Inverse parameterization by (κ, p_bg).
inline GilbertElliott ge_from_kappa(double kappa, double p_bg) {
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw InfeasibleParameterError("ge_from_kappa: kappa must lie in [0,1)");
  if (!(p_bg > 0.0 && p_bg <= 1.0))
    throw InfeasibleParameterError("ge_from_kappa: p_bg must lie in (0,1]");
  const double p_gb = kappa * p_bg / (1.0 - kappa);
  if (p_gb > 1.0)
    throw InfeasibleParameterError("ge_from_kappa: implied p_gb exceeds 1");
  return {p_gb, p_bg};
}

// Product-form stationary weight of one sub-state: κ per bad link, 1−κ per good.
inline double substate_stationary_weight(const SupportPattern& p, double kappa) {
  const int good = p.good_count();
  const int bad = p.links() - good;
  return std::pow(kappa, bad) * std::pow(1.0 - kappa, good);
}

enum class ChainKind { kSubstate, kDofAggregated };

enum class RateAveraging { kUnweighted, kStationaryWeighted };

// Finite Markov-modulated service process. `rates` are per-state service in
// the caller's units; `labels` hold the sub-state index (kSubstate) or the
// DOF count (kDofAggregated), states ascending by label.
struct ServiceChain {
  int k = 0;
  std::vector<double> q;              // row-major k×k, row-stochastic
  std::vector<double> pi;             // stationary vector
  std::vector<double> rates;          // per-state service rate
  std::vector<std::int64_t> labels;
  ChainKind kind = ChainKind::kDofAggregated;
};

namespace detail {

// Transition probability between full sub-states depends only on the good
// counts and the overlap: p = (1−p_gb)^a · p_gb^(g−a) · p_bg^(g'−a) ·
// (1−p_bg)^(L−g−g'+a) with a = |good ∩ good'|. Power tables make one lookup.
class LinkTransitionKernel {
 public:
  LinkTransitionKernel(const GilbertElliott& ge, int links) : links_(links) {
    auto fill = [links](std::vector<double>& table, double base) {
      table.resize(static_cast<std::size_t>(links) + 1);
      table[0] = 1.0;
      for (int i = 1; i <= links; ++i) table[static_cast<std::size_t>(i)] = table[i - 1] * base;
    };
    fill(pow_gg_, 1.0 - ge.p_gb);
    fill(pow_gb_, ge.p_gb);
    fill(pow_bg_, ge.p_bg);
    fill(pow_bb_, 1.0 - ge.p_bg);
  }

  double prob(std::uint32_t from, std::uint32_t to) const {
    const int a = std::popcount(from & to);
    const int g = std::popcount(from);
    const int gp = std::popcount(to);
    return pow_gg_[a] * pow_gb_[g - a] * pow_bg_[gp - a] *
           pow_bb_[links_ - g - gp + a];
  }

 private:
  int links_;
  std::vector<double> pow_gg_, pow_gb_, pow_bg_, pow_bb_;
};

}  // namespace detail

// Exact sub-state chain: one Markov state per good/bad configuration of the
// N² paths, ordered by ascending sub-state index (state 0 = all bad). The
// stationary vector is the exact product form implied by link independence.
// `capacities` maps sub-state index -> rate (zero-DOF states forced to 0).
inline ServiceChain full_chain(int n, const GilbertElliott& ge,
                               const std::vector<double>& capacities) {
  validate(ge);
  if (n < 1) throw std::invalid_argument("full_chain: n must be >= 1");
  if (n > 3)
    throw StateSpaceCapError(
        "full_chain: 2^(n^2) states only materialized for n <= 3; use aggregated_chain");
  const int links = n * n;
  const int k = 1 << links;
  if (static_cast<int>(capacities.size()) != k)
    throw std::invalid_argument("full_chain: capacities must have 2^(n^2) entries");

  const double kappa = ge_kappa(ge);
  detail::LinkTransitionKernel kernel(ge, links);

  ServiceChain chain;
  chain.k = k;
  chain.kind = ChainKind::kSubstate;
  chain.q.resize(static_cast<std::size_t>(k) * k);
  chain.pi.resize(static_cast<std::size_t>(k));
  chain.rates.resize(static_cast<std::size_t>(k));
  chain.labels.resize(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) {
    const auto from = static_cast<std::uint32_t>(s);
    for (int t = 0; t < k; ++t)
      chain.q[static_cast<std::size_t>(s) * k + t] =
          kernel.prob(from, static_cast<std::uint32_t>(t));
    const SupportPattern pattern{n, from};
    chain.pi[static_cast<std::size_t>(s)] = substate_stationary_weight(pattern, kappa);
    chain.rates[static_cast<std::size_t>(s)] =
        structural_rank(pattern) == 0 ? 0.0 : capacities[static_cast<std::size_t>(s)];
    chain.labels[static_cast<std::size_t>(s)] = s;
  }
  double total = 0.0;
  for (double w : chain.pi) total += w;
  for (double& w : chain.pi) w /= total;
  return chain;
}

// DOF-aggregated chain: K = N+1 states labeled by DOF 0..N. Transition rows
// average the sub-state rows with within-class-normalized stationary weights;
// per-state rates average the sub-state capacities over each class (unweighted
// by default). Both sums run over one representative per permutation orbit,
// which is exact: orbit members share the weight and, because every DOF class
// is closed under row/column permutations, the conditional class-transition
// distribution as well.
inline ServiceChain aggregated_chain(int n, const GilbertElliott& ge,
                                     const std::vector<double>& capacities,
                                     RateAveraging averaging = RateAveraging::kUnweighted) {
  validate(ge);
  if (n < 1) throw std::invalid_argument("aggregated_chain: n must be >= 1");
  if (n > 4)
    throw StateSpaceCapError("aggregated_chain: sub-state enumeration capped at n <= 4");
  const int links = n * n;
  const std::uint32_t count = 1u << links;
  if (capacities.size() != count)
    throw std::invalid_argument("aggregated_chain: capacities must have 2^(n^2) entries");

  const double kappa = ge_kappa(ge);
  const int k = n + 1;
  detail::LinkTransitionKernel kernel(ge, links);
  const PatternClassTable classes = build_pattern_classes(n);

  // Every orbit member shares its representative's rank.
  std::vector<int> rank_of(count);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    const std::uint32_t rep = classes.canonical[mask];
    const auto it = std::lower_bound(classes.reps.begin(), classes.reps.end(), rep);
    rank_of[mask] = classes.rep_rank[static_cast<std::size_t>(it - classes.reps.begin())];
  }

  ServiceChain chain;
  chain.k = k;
  chain.kind = ChainKind::kDofAggregated;
  chain.q.assign(static_cast<std::size_t>(k) * k, 0.0);
  chain.pi.assign(static_cast<std::size_t>(k), 0.0);
  chain.rates.assign(static_cast<std::size_t>(k), 0.0);
  chain.labels.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) chain.labels[static_cast<std::size_t>(i)] = i;

  // Transition rows via one representative per orbit.
  std::vector<double> class_weight(static_cast<std::size_t>(k), 0.0);
  std::vector<std::vector<double>> row(static_cast<std::size_t>(k),
                                       std::vector<double>(static_cast<std::size_t>(k), 0.0));
  std::vector<double> dist(static_cast<std::size_t>(k));
  for (std::size_t c = 0; c < classes.reps.size(); ++c) {
    const std::uint32_t rep = classes.reps[c];
    const int i = classes.rep_rank[c];
    const double weight = static_cast<double>(classes.rep_size[c]) *
                          substate_stationary_weight({n, rep}, kappa);
    std::fill(dist.begin(), dist.end(), 0.0);
    for (std::uint32_t to = 0; to < count; ++to)
      dist[static_cast<std::size_t>(rank_of[to])] += kernel.prob(rep, to);
    for (int j = 0; j < k; ++j)
      row[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
          weight * dist[static_cast<std::size_t>(j)];
    class_weight[static_cast<std::size_t>(i)] += weight;
  }
  for (int i = 0; i < k; ++i) {
    const double z = class_weight[static_cast<std::size_t>(i)];
    for (int j = 0; j < k; ++j)
      chain.q[static_cast<std::size_t>(i) * k + j] =
          z > 0.0 ? row[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] / z
                  : (i == j ? 1.0 : 0.0);
  }

  // Per-class rates; the zero-DOF class serves nothing by definition.
  for (int i = 1; i < k; ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < classes.reps.size(); ++c) {
      if (classes.rep_rank[c] != i) continue;
      const double size = static_cast<double>(classes.rep_size[c]);
      const double w =
          averaging == RateAveraging::kUnweighted
              ? size
              : size * substate_stationary_weight({n, classes.reps[c]}, kappa);
      num += w * capacities[classes.reps[c]];
      den += w;
    }
    chain.rates[static_cast<std::size_t>(i)] = den > 0.0 ? num / den : 0.0;
  }

  // Stationary vector: GTH for ergodic parameters; reducible corner cases
  // (κ ∈ {0,1}) take the exact product-form class sums, which is the limit
  // distribution of the absorbed chain.
  if (ge.p_gb > 0.0 && ge.p_bg > 0.0) {
    chain.pi = gth_stationary(chain.q, k);
  } else {
    chain.pi = class_weight;  // already the product-form class sums
    double total = 0.0;
    for (double w : chain.pi) total += w;
    for (double& w : chain.pi) w /= total;
  }
  return chain;
}

// NOTE: aggregated_chain's `capacities` may be filled per canonical class
// (identical value across an orbit); the class means are then exact.

inline double first_order_capacity(const ServiceChain& chain) {
  double c1 = 0.0;
  for (int i = 0; i < chain.k; ++i)
    c1 += chain.rates[static_cast<std::size_t>(i)] * chain.pi[static_cast<std::size_t>(i)];
  return c1;
}

}  // namespace mimocal
