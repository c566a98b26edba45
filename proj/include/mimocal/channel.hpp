#pragma once

// Virtual-channel layer: binary support patterns of an N×N spatial channel,
// their degrees of freedom (structural rank), power-normalized variance
// matrices, Monte Carlo ergodic capacity, and high-SNR closed forms.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "mimocal/errors.hpp"
#include "mimocal/linalg.hpp"
#include "mimocal/rng.hpp"
#include "mimocal/stats.hpp"
#include "mimocal/version.hpp"

namespace mimocal {

// Good/bad occupancy of the N² spatial paths. Bit k of `mask` is link k in
// row-major order: link (row m, col j), 0-based, sits at bit m*n + j; a set
// bit means the path is good (carries energy).
struct SupportPattern {
  int n = 0;
  std::uint32_t mask = 0;

  int links() const { return n * n; }
  int good_count() const { return std::popcount(mask); }
  bool good(int row, int col) const { return (mask >> (row * n + col)) & 1u; }

  std::string to_string() const {
    std::string s(static_cast<std::size_t>(links()), 'b');
    for (int k = 0; k < links(); ++k)
      if ((mask >> k) & 1u) s[static_cast<std::size_t>(k)] = 'g';
    return s;
  }

  static SupportPattern from_string(const std::string& s, int n) {
    if (static_cast<int>(s.size()) != n * n)
      throw std::invalid_argument("SupportPattern::from_string: length must be n^2");
    std::uint32_t mask = 0;
    for (int k = 0; k < n * n; ++k) {
      const char c = s[static_cast<std::size_t>(k)];
      if (c == 'g')
        mask |= (1u << k);
      else if (c != 'b')
        throw std::invalid_argument("SupportPattern::from_string: alphabet is {g,b}");
    }
    return {n, mask};
  }
};

// Canonical enumeration of sub-states: bit k of the index is link k's state.
inline SupportPattern pattern_from_substate(std::uint64_t state_index, int n) {
  if (n < 1 || n > 5) throw std::domain_error("pattern_from_substate: n must be in [1,5]");
  const int links = n * n;
  if (state_index >= (std::uint64_t{1} << links))
    throw std::domain_error("pattern_from_substate: state index out of range");
  return {n, static_cast<std::uint32_t>(state_index)};
}

// Maximum bipartite matching (rows to columns) of the support; equals the
// rank of a generic matrix with this sparsity pattern.
inline int structural_rank(const SupportPattern& p) {
  const int n = p.n;
  std::array<int, 8> match_col{};
  match_col.fill(-1);
  std::array<bool, 8> seen{};

  auto try_augment = [&](auto&& self, int row) -> bool {
    for (int col = 0; col < n; ++col) {
      if (!p.good(row, col) || seen[static_cast<std::size_t>(col)]) continue;
      seen[static_cast<std::size_t>(col)] = true;
      if (match_col[static_cast<std::size_t>(col)] < 0 ||
          self(self, match_col[static_cast<std::size_t>(col)])) {
        match_col[static_cast<std::size_t>(col)] = row;
        return true;
      }
    }
    return false;
  };

  int rank = 0;
  for (int row = 0; row < n; ++row) {
    seen.fill(false);
    if (try_augment(try_augment, row)) ++rank;
  }
  return rank;
}

// Shared per-good-link variance v_s = N²/D, the unique uniform solution of the
// power-normalization constraint D·v_s = N².
inline double good_variance(const SupportPattern& p) {
  const int d = p.good_count();
  if (d == 0)
    throw NoGoodLinksError("good_variance: all-bad pattern carries no variance matrix");
  return static_cast<double>(p.links()) / static_cast<double>(d);
}

struct VarianceMatrix {
  SupportPattern pattern;
  double good_variance = 0.0;
};

inline VarianceMatrix make_variance_matrix(const SupportPattern& p) {
  return {p, good_variance(p)};
}

// Degrees of freedom r plus the good-link counts of the reduced support
// (all-bad rows/columns removed). `approximate` flags shapes on which the
// high-SNR closed form has no exact derivation (non-square reduction or a
// structurally rank-deficient square reduction).
struct DofProfile {
  int r = 0;
  std::vector<int> row_counts;
  int total = 0;
  bool approximate = false;
};

inline DofProfile dof_profile(const SupportPattern& p) {
  DofProfile out;
  out.r = structural_rank(p);
  int rows = 0, cols = 0;
  for (int m = 0; m < p.n; ++m) {
    int count = 0;
    for (int j = 0; j < p.n; ++j) count += p.good(m, j) ? 1 : 0;
    if (count > 0) {
      out.row_counts.push_back(count);
      out.total += count;
      ++rows;
    }
  }
  for (int j = 0; j < p.n; ++j) {
    bool any = false;
    for (int m = 0; m < p.n; ++m) any = any || p.good(m, j);
    if (any) ++cols;
  }
  out.approximate = (rows != cols) || (out.r != rows);
  return out;
}

inline double harmonic_number(int k) {
  if (k < 0) throw std::domain_error("harmonic_number: negative index");
  double h = 0.0;
  for (int p = 1; p <= k; ++p) h += 1.0 / static_cast<double>(p);
  return h;
}

// High-SNR ergodic capacity closed form:
//   C = r·[log2(ρN) − (1+γ)/ln2 + c],  c = (1/(r·ln2))·Σ H_{D_m−1} − log2(D).
inline double highsnr_capacity_closed_form(const DofProfile& profile, double snr_db, int n) {
  if (profile.r == 0) return 0.0;
  const double rho = std::pow(10.0, snr_db / 10.0);
  const double r = static_cast<double>(profile.r);
  const double ln2 = std::numbers::ln2;
  double harmonic_sum = 0.0;
  for (int d : profile.row_counts) harmonic_sum += harmonic_number(d - 1);
  const double c = harmonic_sum / (r * ln2) - std::log2(static_cast<double>(profile.total));
  return r * (std::log2(rho * n) - (1.0 + kEulerGamma) / ln2 + c);
}

// The same value split as r·log2(ρN/r) + r·c′ with an SNR-independent offset.
struct LinearOffsetForm {
  double linear_term = 0.0;
  double offset = 0.0;
};

inline LinearOffsetForm lemma1_form(const DofProfile& profile, double snr_db, int n) {
  if (profile.r == 0) return {0.0, 0.0};
  const double rho = std::pow(10.0, snr_db / 10.0);
  const double r = static_cast<double>(profile.r);
  const double linear = r * std::log2(rho * n / r);
  return {linear, highsnr_capacity_closed_form(profile, snr_db, n) - linear};
}

struct CapacityEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline RunningMoments capacity_chunk(const VarianceMatrix& v, double rho,
                                     std::int64_t samples, std::uint64_t seed) {
  const int n = v.pattern.n;
  const double amp = std::sqrt(v.good_variance / 2.0);
  const double coeff = rho / static_cast<double>(n);
  Xoshiro256pp rng(seed);
  RunningMoments moments;
  std::vector<Complex> h(static_cast<std::size_t>(n) * n);
  for (std::int64_t s = 0; s < samples; ++s) {
    for (int k = 0; k < n * n; ++k) {
      if ((v.pattern.mask >> k) & 1u) {
        const double re = rng.normal();
        const double im = rng.normal();
        h[static_cast<std::size_t>(k)] = Complex{amp * re, amp * im};
      } else {
        h[static_cast<std::size_t>(k)] = Complex{0.0, 0.0};
      }
    }
    moments.add(logdet_scaled_gram(h, n, coeff, 1.0) / std::numbers::ln2);
  }
  return moments;
}

}  // namespace detail

// Sample mean of log2 det(I + (ρ/N)·H·H†) over `samples` draws with independent
// complex-Gaussian good links of variance v_s. Sampling is split into fixed
// 8192-draw chunks with independently derived seeds and merged in chunk order,
// so the result is identical for any thread count.
inline CapacityEstimate ergodic_capacity_mc(const VarianceMatrix& v, double snr_db,
                                            std::int64_t samples, std::uint64_t seed,
                                            int threads = 0) {
  if (samples < 1) throw std::invalid_argument("ergodic_capacity_mc: samples must be >= 1");
  if (v.pattern.good_count() == 0)
    throw NoGoodLinksError("ergodic_capacity_mc: all-bad pattern (capacity is 0 upstream)");
  const double rho = std::pow(10.0, snr_db / 10.0);
  constexpr std::int64_t kChunk = 8192;
  const std::int64_t chunks = (samples + kChunk - 1) / kChunk;

  std::vector<RunningMoments> partial(static_cast<std::size_t>(chunks));
  auto run_chunk = [&](std::int64_t c) {
    const std::int64_t count = std::min(kChunk, samples - c * kChunk);
    partial[static_cast<std::size_t>(c)] =
        detail::capacity_chunk(v, rho, count, derive_seed(seed, static_cast<std::uint64_t>(c)));
  };

  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(chunks)));
  if (workers == 1) {
    for (std::int64_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::int64_t c = w; c < chunks; c += workers) run_chunk(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  RunningMoments total;
  for (const auto& m : partial) total.combine(m);
  return {total.mean, total.std_error(), total.n, snr_db, seed};
}

// Orbits of patterns under simultaneous row/column permutations. Capacity and
// DOF are invariant within an orbit, so one Monte Carlo run per representative
// covers the whole class (7/36/317 classes for N = 2/3/4).
struct PatternClassTable {
  int n = 0;
  std::vector<std::uint32_t> canonical;  // index = mask, value = orbit representative
  std::vector<std::uint32_t> reps;       // sorted unique representatives
  std::vector<int> rep_rank;             // structural rank per representative
  std::vector<std::int64_t> rep_size;    // orbit cardinality per representative

  // Position of a pattern's orbit within `reps` (reps are sorted ascending).
  std::size_t class_index(std::uint32_t mask) const {
    const auto it = std::lower_bound(reps.begin(), reps.end(), canonical[mask]);
    return static_cast<std::size_t>(it - reps.begin());
  }
};

inline PatternClassTable build_pattern_classes(int n) {
  if (n < 1 || n > 4)
    throw StateSpaceCapError("build_pattern_classes: n must be in [1,4] (2^(n^2) patterns)");
  const int links = n * n;
  const std::uint32_t count = 1u << links;

  std::vector<int> perm_base(static_cast<std::size_t>(n));
  std::iota(perm_base.begin(), perm_base.end(), 0);
  std::vector<std::vector<int>> perms;
  {
    std::vector<int> p = perm_base;
    do {
      perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  }
  // Bit map per (row perm, col perm): link k -> permuted position.
  std::vector<std::array<std::uint8_t, 25>> maps;
  maps.reserve(perms.size() * perms.size());
  for (const auto& pr : perms) {
    for (const auto& pc : perms) {
      std::array<std::uint8_t, 25> map{};
      for (int k = 0; k < links; ++k)
        map[static_cast<std::size_t>(k)] =
            static_cast<std::uint8_t>(pr[static_cast<std::size_t>(k / n)] * n +
                                      pc[static_cast<std::size_t>(k % n)]);
      maps.push_back(map);
    }
  }

  PatternClassTable table;
  table.n = n;
  table.canonical.assign(count, 0);
  std::vector<bool> visited(count, false);
  std::vector<std::uint32_t> orbit;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    if (visited[mask]) continue;
    orbit.clear();
    std::uint32_t canon = mask;
    for (const auto& map : maps) {
      std::uint32_t image = 0;
      std::uint32_t bits = mask;
      while (bits) {
        const int k = std::countr_zero(bits);
        bits &= bits - 1;
        image |= (1u << map[static_cast<std::size_t>(k)]);
      }
      canon = std::min(canon, image);
      orbit.push_back(image);
    }
    std::int64_t size = 0;
    for (std::uint32_t image : orbit) {
      if (!visited[image]) {
        visited[image] = true;
        table.canonical[image] = canon;
        ++size;
      }
    }
    table.reps.push_back(canon);
    table.rep_size.push_back(size);
  }
  // Representatives were appended in first-encounter order == ascending mask
  // of the smallest orbit member, which is the representative itself.
  table.rep_rank.resize(table.reps.size());
  for (std::size_t i = 0; i < table.reps.size(); ++i)
    table.rep_rank[i] = structural_rank({n, table.reps[i]});
  return table;
}

}  // namespace mimocal
