// Scenario assembly and experiment harness: translates a user-facing
// configuration into a service chain with rates in blocks/slot, caches
// Monte-Carlo capacity estimates on disk, and drives the canned experiment
// presets that emit CSV curves.
#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mimocal/channel.hpp"
#include "mimocal/errors.hpp"
#include "mimocal/markov.hpp"
#include "mimocal/netcal.hpp"
#include "mimocal/rng.hpp"
#include "mimocal/version.hpp"

namespace mimocal {

// ---------------------------------------------------------------------------
// Units
// ---------------------------------------------------------------------------

// Physical-layer framing used to convert spectral efficiency (bits/s/Hz)
// into transport blocks per scheduling slot.
struct UnitProfile {
  double bandwidth_hz = 4.0e7;
  double slot_seconds = 3.1e-5;
  double block_bits = 18496.0;

  double blocks_per_slot_factor() const {
    return bandwidth_hz * slot_seconds / block_bits;
  }
};

inline double rate_to_blocks(double bits_per_s_per_hz, const UnitProfile& units = {}) {
  return bits_per_s_per_hz * units.blocks_per_slot_factor();
}

inline double blocks_to_rate(double blocks_per_slot, const UnitProfile& units = {}) {
  return blocks_per_slot / units.blocks_per_slot_factor();
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

struct ScenarioConfig {
  int n = 2;                 // antennas per side
  double snr_db = 25.0;      // per-receive-antenna SNR
  std::optional<double> p_gb;   // good -> bad flip probability
  std::optional<double> p_bg;   // bad -> good recovery probability
  std::optional<double> kappa;  // stationary bad probability (alternative to p_gb)
  double eps = 1e-6;         // delay-violation probability target
  int d_guarantee = 30;      // delay guarantee in slots
  int tau = 10;              // arrival period in slots
  int method = 2;            // 1 = per-substate chain, 2 = DOF-aggregated chain
  std::int64_t mc_samples = 100000;
  std::uint64_t seed = 20240607;
  int trunc = 4000;          // bound-sum truncation horizon
  double theta_min = 1e-3;
  double theta_max = 10.0;
  int theta_points = 60;
  UnitProfile units;
  RateAveraging averaging = RateAveraging::kUnweighted;
  double lambda_tol = 1e-3;  // throughput bisection tolerance, blocks/slot
};

// Resolves the link chain from whichever parameterisation the config carries.
// Exactly one of {p_gb, kappa} may be set; p_bg defaults to 0.1 and, in the
// flip-probability form, p_gb defaults to 0.01.
inline GilbertElliott resolve_ge(const ScenarioConfig& cfg) {
  if (cfg.kappa && cfg.p_gb)
    throw std::invalid_argument(
        "scenario: kappa and p_gb are alternative parameterisations; set only one");
  const double p_bg = cfg.p_bg.value_or(0.1);
  if (cfg.kappa) return ge_from_kappa(*cfg.kappa, p_bg);
  GilbertElliott ge{cfg.p_gb.value_or(0.01), p_bg};
  validate(ge);
  return ge;
}

inline std::string averaging_name(RateAveraging a) {
  return a == RateAveraging::kUnweighted ? "unweighted" : "stationary_weighted";
}

// ---------------------------------------------------------------------------
// Capacity cache (JSON-lines, append-only)
// ---------------------------------------------------------------------------

struct CapacityRecord {
  int n = 0;
  double snr_db = 0.0;
  std::uint32_t class_mask = 0;  // canonical representative of the pattern class
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

// Append-only JSONL store for per-class ergodic capacity estimates. Each line
// is a self-contained record; lookups require an exact match on every key
// field so a cache can never silently serve stale settings. Appends go
// through a single POSIX write on an O_APPEND descriptor, which keeps lines
// intact even when several processes share the file.
class CapacityCache {
 public:
  CapacityCache() = default;
  explicit CapacityCache(std::filesystem::path path) : path_(std::move(path)) {}

  bool enabled() const { return !path_.empty(); }
  const std::filesystem::path& path() const { return path_; }

  std::optional<CapacityRecord> find(int n, double snr_db, std::uint32_t class_mask,
                                     std::int64_t samples, std::uint64_t seed) {
    if (!enabled()) return std::nullopt;
    ensure_loaded();
    const auto it = records_.find(key(n, snr_db, class_mask, samples, seed));
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  void put(const CapacityRecord& rec) {
    if (!enabled()) return;
    ensure_loaded();
    records_[key(rec.n, rec.snr_db, rec.class_mask, rec.samples, rec.seed)] = rec;
    nlohmann::json j{{"v", 1},
                     {"n", rec.n},
                     {"snr_db", rec.snr_db},
                     {"class", rec.class_mask},
                     {"samples", rec.samples},
                     {"seed", rec.seed},
                     {"mean", rec.mean},
                     {"std_error", rec.std_error}};
    append_line(j.dump());
  }

 private:
  using Key = std::tuple<int, double, std::uint32_t, std::int64_t, std::uint64_t>;

  static Key key(int n, double snr_db, std::uint32_t class_mask, std::int64_t samples,
                 std::uint64_t seed) {
    return {n, snr_db, class_mask, samples, seed};
  }

  void ensure_loaded() {
    if (loaded_) return;
    loaded_ = true;
    std::ifstream in(path_);
    if (!in) return;  // absent file is just an empty cache
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        if (j.value("v", 0) != 1) throw std::runtime_error("unsupported record version");
        CapacityRecord rec;
        rec.n = j.at("n").get<int>();
        rec.snr_db = j.at("snr_db").get<double>();
        rec.class_mask = j.at("class").get<std::uint32_t>();
        rec.samples = j.at("samples").get<std::int64_t>();
        rec.seed = j.at("seed").get<std::uint64_t>();
        rec.mean = j.at("mean").get<double>();
        rec.std_error = j.at("std_error").get<double>();
        records_[key(rec.n, rec.snr_db, rec.class_mask, rec.samples, rec.seed)] = rec;
      } catch (const std::exception& e) {
        std::fprintf(stderr, "warning: %s:%zu: skipping unreadable cache line (%s)\n",
                     path_.string().c_str(), line_no, e.what());
      }
    }
  }

  void append_line(const std::string& line) {
    std::string payload = line;
    payload.push_back('\n');
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0)
      throw std::runtime_error("cache: cannot open " + path_.string() + ": " +
                               std::strerror(errno));
    const char* data = payload.data();
    std::size_t left = payload.size();
    while (left > 0) {
      const ssize_t wrote = ::write(fd, data, left);
      if (wrote < 0) {
        if (errno == EINTR) continue;
        const int err = errno;
        ::close(fd);
        throw std::runtime_error("cache: write failed: " + std::string(std::strerror(err)));
      }
      data += wrote;
      left -= static_cast<std::size_t>(wrote);
    }
    ::close(fd);
  }

  std::filesystem::path path_;
  bool loaded_ = false;
  std::map<Key, CapacityRecord> records_;
};

// ---------------------------------------------------------------------------
// Scenario assembly
// ---------------------------------------------------------------------------

// Ergodic capacity (bits/s/Hz) of every support pattern of an n x n channel.
// Only one representative per permutation-equivalence class is estimated —
// capacity depends on the pattern only through its class — and the estimate
// is fanned out to the whole orbit. Each class draws its Monte-Carlo seed
// from the master seed and its canonical mask, so estimates are reproducible
// independently of evaluation order and of which classes a cache already
// holds. `provenance`, when given, collects one JSON entry per class.
inline std::vector<double> per_substate_capacities(int n, double snr_db,
                                                   std::int64_t mc_samples,
                                                   std::uint64_t master_seed,
                                                   const PatternClassTable& classes,
                                                   CapacityCache* cache = nullptr,
                                                   nlohmann::json* provenance = nullptr) {
  const std::size_t n_sub = std::size_t{1} << (n * n);
  std::vector<double> class_mean(classes.reps.size(), 0.0);

  for (std::size_t c = 0; c < classes.reps.size(); ++c) {
    const std::uint32_t rep = classes.reps[c];
    const SupportPattern pattern{n, rep};
    if (structural_rank(pattern) == 0) {
      class_mean[c] = 0.0;  // no spatial degrees of freedom, nothing to estimate
      continue;
    }
    const std::uint64_t class_seed = derive_seed(master_seed, rep);
    bool from_cache = false;
    CapacityRecord rec;
    if (cache) {
      if (auto hit = cache->find(n, snr_db, rep, mc_samples, class_seed)) {
        rec = *hit;
        from_cache = true;
      }
    }
    if (!from_cache) {
      const auto v = make_variance_matrix(pattern);
      const auto est = ergodic_capacity_mc(v, snr_db, mc_samples, class_seed);
      rec = CapacityRecord{n, snr_db, rep, mc_samples, class_seed, est.mean, est.std_error};
      if (cache) cache->put(rec);
    }
    class_mean[c] = rec.mean;
    if (provenance) {
      provenance->push_back({{"class", rep},
                             {"pattern", pattern.to_string()},
                             {"orbit_size", classes.rep_size[c]},
                             {"rank", classes.rep_rank[c]},
                             {"samples", rec.samples},
                             {"seed", rec.seed},
                             {"mean_bits", rec.mean},
                             {"std_error", rec.std_error},
                             {"cache_hit", from_cache}});
    }
  }

  std::vector<double> capacities(n_sub, 0.0);
  for (std::size_t s = 0; s < n_sub; ++s)
    capacities[s] = class_mean[classes.class_index(static_cast<std::uint32_t>(s))];
  return capacities;
}

struct BuiltScenario {
  ServiceChain chain;                   // service rates in blocks/slot
  std::vector<double> capacities_bits;  // per-substate ergodic capacity, bits/s/Hz
  GilbertElliott ge;
  nlohmann::json provenance;            // per-class capacity sourcing
};

// Builds the service chain for a configuration. Capacities are estimated in
// bits/s/Hz and converted to blocks/slot before any aggregation, so class
// rates and the chain itself are already in scheduler units.
inline BuiltScenario build_scenario(const ScenarioConfig& cfg, CapacityCache* cache = nullptr) {
  if (cfg.method != 1 && cfg.method != 2)
    throw std::invalid_argument("scenario: method must be 1 or 2");
  if (cfg.mc_samples < 1) throw std::invalid_argument("scenario: mc_samples must be >= 1");

  BuiltScenario out;
  out.ge = resolve_ge(cfg);
  const auto classes = build_pattern_classes(cfg.n);
  out.provenance = nlohmann::json::array();
  out.capacities_bits = per_substate_capacities(cfg.n, cfg.snr_db, cfg.mc_samples, cfg.seed,
                                                classes, cache, &out.provenance);

  std::vector<double> blocks(out.capacities_bits.size());
  const double factor = cfg.units.blocks_per_slot_factor();
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i] = out.capacities_bits[i] * factor;

  out.chain = cfg.method == 1 ? full_chain(cfg.n, out.ge, blocks)
                              : aggregated_chain(cfg.n, out.ge, blocks, cfg.averaging);
  return out;
}

// ---------------------------------------------------------------------------
// Chain serialization
// ---------------------------------------------------------------------------

inline nlohmann::json chain_to_json(const ServiceChain& chain,
                                    const std::string& rate_units = "blocks_per_slot") {
  nlohmann::json j;
  j["v"] = 1;
  j["kind"] = chain.kind == ChainKind::kSubstate ? "substate" : "dof_aggregated";
  j["k"] = chain.k;
  j["labels"] = chain.labels;
  j["q"] = chain.q;  // row-major, k*k entries
  j["pi"] = chain.pi;
  j["rates"] = chain.rates;
  j["rate_units"] = rate_units;
  return j;
}

inline ServiceChain chain_from_json(const nlohmann::json& j) {
  if (j.value("v", 0) != 1) throw std::invalid_argument("chain json: unsupported version");
  ServiceChain chain;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "substate")
    chain.kind = ChainKind::kSubstate;
  else if (kind == "dof_aggregated")
    chain.kind = ChainKind::kDofAggregated;
  else
    throw std::invalid_argument("chain json: unknown kind '" + kind + "'");
  chain.k = j.at("k").get<int>();
  chain.labels = j.at("labels").get<std::vector<std::int64_t>>();
  chain.q = j.at("q").get<std::vector<double>>();
  chain.pi = j.at("pi").get<std::vector<double>>();
  chain.rates = j.at("rates").get<std::vector<double>>();
  const std::size_t k = static_cast<std::size_t>(chain.k);
  if (chain.k < 1 || chain.q.size() != k * k || chain.pi.size() != k ||
      chain.rates.size() != k || chain.labels.size() != k)
    throw std::invalid_argument("chain json: inconsistent dimensions");
  return chain;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

// Shortest round-trippable-ish representation; %.9g keeps CSVs readable while
// preserving far more precision than any downstream plot needs.
inline std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    columns_ = columns.size();
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  void header(const std::vector<std::string>& columns) { raw_row(columns); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
      throw std::logic_error("csv row width mismatch");
    raw_row(cells);
  }

 private:
  void raw_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t columns_ = 0;
};

inline std::string config_echo(const ScenarioConfig& cfg, const GilbertElliott& ge) {
  std::ostringstream os;
  os << "n=" << cfg.n << " snr_db=" << fmt9(cfg.snr_db) << " p_gb=" << fmt9(ge.p_gb)
     << " p_bg=" << fmt9(ge.p_bg) << " kappa=" << fmt9(ge_kappa(ge)) << " eps=" << fmt9(cfg.eps)
     << " d_guarantee=" << cfg.d_guarantee << " tau=" << cfg.tau << " method=" << cfg.method
     << " mc_samples=" << cfg.mc_samples << " seed=" << cfg.seed << " trunc=" << cfg.trunc
     << " theta_grid=[" << fmt9(cfg.theta_min) << "," << fmt9(cfg.theta_max) << "]x"
     << cfg.theta_points << " averaging=" << averaging_name(cfg.averaging)
     << " lambda_tol=" << fmt9(cfg.lambda_tol) << " bandwidth_hz=" << fmt9(cfg.units.bandwidth_hz)
     << " slot_seconds=" << fmt9(cfg.units.slot_seconds)
     << " block_bits=" << fmt9(cfg.units.block_bits);
  return os.str();
}

// ---------------------------------------------------------------------------
// Experiment presets
// ---------------------------------------------------------------------------

struct ExperimentResult {
  std::vector<std::filesystem::path> files;
  bool any_infeasible = false;  // some grid point had no feasible rate
  bool any_unstable = false;    // some bound sum failed its truncation check
};

namespace detail {

inline std::vector<double> theta_grid_for(const ScenarioConfig& cfg) {
  return default_theta_grid(cfg.theta_min, cfg.theta_max, cfg.theta_points);
}

// One throughput evaluation, flattened for CSV emission.
struct ThroughputCells {
  double lambda_blocks = 0.0;
  double lambda_bits = 0.0;
  double theta_star = 0.0;
  double tail_mass = 0.0;
  bool infeasible = false;
  bool unstable = false;
};

inline ThroughputCells eval_throughput(ThroughputSolver& solver, const ScenarioConfig& cfg,
                                       int d_guarantee, double eps) {
  SearchSettings settings;
  settings.lambda_tol = cfg.lambda_tol;
  const auto res = solver.solve(d_guarantee, eps, cfg.tau, settings);
  ThroughputCells cells;
  cells.lambda_blocks = res.lambda;
  cells.lambda_bits = blocks_to_rate(res.lambda, cfg.units);
  cells.theta_star = res.bound.theta_star;
  cells.tail_mass = res.bound.tail_mass;
  cells.infeasible = res.infeasible_at_zero;
  cells.unstable = res.bound.unstable_tail;
  return cells;
}

inline std::string sanitize_for_filename(double eps) {
  // 1e-06 -> "1e-06": keep scientific form, it is unambiguous in a filename.
  std::ostringstream os;
  os << eps;
  auto s = os.str();
  std::replace(s.begin(), s.end(), '+', 'p');
  return s;
}

inline void emit_common_header(CsvWriter& csv, const std::string& preset,
                               const ScenarioConfig& cfg, const GilbertElliott& ge) {
  csv.comment(std::string("mimocal ") + kVersion);
  csv.comment("preset=" + preset);
  csv.comment(config_echo(cfg, ge));
}

}  // namespace detail

// Throughput-vs-delay-guarantee curves for both chain constructions at three
// violation targets. One file per (method, eps) curve.
inline ExperimentResult run_fig2(ScenarioConfig cfg, const std::filesystem::path& out_dir,
                                 CapacityCache* cache) {
  cfg.n = 2;
  ExperimentResult result;
  const std::vector<double> eps_list{1e-2, 1e-4, 1e-6};
  const std::vector<int> d_list{10, 20, 30, 40, 50, 60};
  const std::vector<std::string> columns{
      "d_guarantee", "eps", "method", "n", "snr_db",
      "lambda_blocks_per_slot", "lambda_bits_per_s_per_hz", "theta_star", "tail_mass"};

  for (int method : {1, 2}) {
    cfg.method = method;
    const auto built = build_scenario(cfg, cache);
    ThroughputSolver solver(built.chain, detail::theta_grid_for(cfg), cfg.trunc);
    for (double eps : eps_list) {
      const auto path = out_dir / ("fig2_method" + std::to_string(method) + "_eps" +
                                   detail::sanitize_for_filename(eps) + ".csv");
      CsvWriter csv(path, columns);
      detail::emit_common_header(csv, "fig2", cfg, built.ge);
      csv.header(columns);
      for (int d : d_list) {
        const auto cells = detail::eval_throughput(solver, cfg, d, eps);
        result.any_infeasible |= cells.infeasible;
        result.any_unstable |= cells.unstable;
        csv.row({std::to_string(d), fmt9(eps), std::to_string(method), std::to_string(cfg.n),
                 fmt9(cfg.snr_db), fmt9(cells.lambda_blocks), fmt9(cells.lambda_bits),
                 fmt9(cells.theta_star), fmt9(cells.tail_mass)});
      }
      result.files.push_back(path);
    }
  }
  return result;
}

// Throughput vs SNR at several delay guarantees. One file per guarantee.
inline ExperimentResult run_fig3(ScenarioConfig cfg, const std::filesystem::path& out_dir,
                                 CapacityCache* cache) {
  cfg.n = 2;
  cfg.eps = 1e-6;
  ExperimentResult result;
  const std::vector<int> d_list{20, 30, 40, 50};
  const std::vector<double> snr_list{5, 10, 15, 20, 25, 30};
  const std::vector<std::string> columns{
      "d_guarantee", "eps", "method", "n", "snr_db",
      "lambda_blocks_per_slot", "lambda_bits_per_s_per_hz", "theta_star", "tail_mass"};

  // Chains are per-SNR; build each once and sweep guarantees against it.
  std::vector<std::pair<GilbertElliott, std::vector<detail::ThroughputCells>>> grid;
  grid.reserve(snr_list.size());
  for (double snr : snr_list) {
    cfg.snr_db = snr;
    const auto built = build_scenario(cfg, cache);
    ThroughputSolver solver(built.chain, detail::theta_grid_for(cfg), cfg.trunc);
    std::vector<detail::ThroughputCells> per_d;
    per_d.reserve(d_list.size());
    for (int d : d_list) {
      per_d.push_back(detail::eval_throughput(solver, cfg, d, cfg.eps));
      result.any_infeasible |= per_d.back().infeasible;
      result.any_unstable |= per_d.back().unstable;
    }
    grid.emplace_back(built.ge, std::move(per_d));
  }

  for (std::size_t di = 0; di < d_list.size(); ++di) {
    const auto path = out_dir / ("fig3_d" + std::to_string(d_list[di]) + ".csv");
    CsvWriter csv(path, columns);
    detail::emit_common_header(csv, "fig3", cfg, grid.front().first);
    csv.header(columns);
    for (std::size_t si = 0; si < snr_list.size(); ++si) {
      const auto& cells = grid[si].second[di];
      csv.row({std::to_string(d_list[di]), fmt9(cfg.eps), std::to_string(cfg.method),
               std::to_string(cfg.n), fmt9(snr_list[si]), fmt9(cells.lambda_blocks),
               fmt9(cells.lambda_bits), fmt9(cells.theta_star), fmt9(cells.tail_mass)});
    }
    result.files.push_back(path);
  }
  return result;
}

// Throughput vs channel-change timescale at fixed stationary quality: p_bg is
// swept log-uniformly while kappa stays put, so the chain mixes slower or
// faster around the same long-run state mix. One file per antenna count.
inline ExperimentResult run_fig4(ScenarioConfig cfg, const std::filesystem::path& out_dir,
                                 CapacityCache* cache) {
  if (!cfg.kappa) {
    cfg.kappa = 0.1;
    cfg.p_gb.reset();
  }
  cfg.eps = 1e-3;
  ExperimentResult result;
  const int points = 9;
  std::vector<double> p_bg_list(points);
  const double lo = std::log(1e-3), hi = std::log(0.5);
  for (int i = 0; i < points; ++i)
    p_bg_list[i] = std::exp(lo + (hi - lo) * i / (points - 1));
  p_bg_list.front() = 1e-3;  // pin the endpoints exactly
  p_bg_list.back() = 0.5;

  const std::vector<std::string> columns{
      "p_bg", "p_gb", "kappa", "mean_change_time", "n", "lambda_blocks_per_slot"};

  for (int n : {2, 3}) {
    cfg.n = n;
    const auto path = out_dir / ("fig4_n" + std::to_string(n) + ".csv");
    CsvWriter csv(path, columns);
    bool wrote_header = false;
    for (double p_bg : p_bg_list) {
      cfg.p_bg = p_bg;
      const auto built = build_scenario(cfg, cache);
      if (!wrote_header) {
        detail::emit_common_header(csv, "fig4", cfg, built.ge);
        csv.header(columns);
        wrote_header = true;
      }
      ThroughputSolver solver(built.chain, detail::theta_grid_for(cfg), cfg.trunc);
      const auto cells = detail::eval_throughput(solver, cfg, cfg.d_guarantee, cfg.eps);
      result.any_infeasible |= cells.infeasible;
      result.any_unstable |= cells.unstable;
      const double mean_change_time = 1.0 / built.ge.p_bg + 1.0 / built.ge.p_gb;
      csv.row({fmt9(built.ge.p_bg), fmt9(built.ge.p_gb), fmt9(ge_kappa(built.ge)),
               fmt9(mean_change_time), std::to_string(n), fmt9(cells.lambda_blocks)});
    }
    result.files.push_back(path);
  }
  return result;
}

// Throughput vs delay guarantee across antenna counts, out to guarantees long
// enough for the curves to approach their ergodic ceilings. One file per n.
inline ExperimentResult run_fig5(ScenarioConfig cfg, const std::filesystem::path& out_dir,
                                 CapacityCache* cache) {
  cfg.eps = 1e-3;
  cfg.method = 2;
  ExperimentResult result;
  const std::vector<int> d_list{10, 20, 30, 40, 50, 60, 80, 100, 150, 200, 300, 500, 700, 1000};
  const std::vector<std::string> columns{
      "d_guarantee", "eps", "method", "n", "snr_db",
      "lambda_blocks_per_slot", "lambda_bits_per_s_per_hz", "theta_star", "tail_mass"};

  for (int n : {2, 3, 4}) {
    cfg.n = n;
    const auto built = build_scenario(cfg, cache);
    ThroughputSolver solver(built.chain, detail::theta_grid_for(cfg), cfg.trunc);
    const auto path = out_dir / ("fig5_n" + std::to_string(n) + ".csv");
    CsvWriter csv(path, columns);
    detail::emit_common_header(csv, "fig5", cfg, built.ge);
    csv.header(columns);
    for (int d : d_list) {
      const auto cells = detail::eval_throughput(solver, cfg, d, cfg.eps);
      result.any_infeasible |= cells.infeasible;
      result.any_unstable |= cells.unstable;
      csv.row({std::to_string(d), fmt9(cfg.eps), std::to_string(cfg.method), std::to_string(n),
               fmt9(cfg.snr_db), fmt9(cells.lambda_blocks), fmt9(cells.lambda_bits),
               fmt9(cells.theta_star), fmt9(cells.tail_mass)});
    }
    result.files.push_back(path);
  }
  return result;
}

// First-order (ergodic) capacity of the aggregated chain per antenna count.
inline ExperimentResult run_table1(ScenarioConfig cfg, const std::filesystem::path& out_dir,
                                   CapacityCache* cache) {
  if (!cfg.kappa && !cfg.p_gb) {
    cfg.kappa = 0.1;
    cfg.p_gb.reset();
  }
  cfg.method = 2;
  ExperimentResult result;
  const std::vector<std::string> columns{"n", "c1_bits_per_s_per_hz", "kappa", "snr_db"};
  const auto path = out_dir / "table1.csv";
  CsvWriter csv(path, columns);
  bool wrote_header = false;
  for (int n : {2, 3}) {
    cfg.n = n;
    const auto built = build_scenario(cfg, cache);
    if (!wrote_header) {
      detail::emit_common_header(csv, "table1", cfg, built.ge);
      csv.header(columns);
      wrote_header = true;
    }
    const double c1_blocks = first_order_capacity(built.chain);
    csv.row({std::to_string(n), fmt9(blocks_to_rate(c1_blocks, cfg.units)),
             fmt9(ge_kappa(built.ge)), fmt9(cfg.snr_db)});
  }
  result.files.push_back(path);
  return result;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2", "fig3", "fig4", "fig5", "table1"};
  return names;
}

inline ExperimentResult run_experiment(const std::string& preset, ScenarioConfig cfg,
                                       const std::filesystem::path& out_dir,
                                       CapacityCache* cache = nullptr) {
  std::filesystem::create_directories(out_dir);
  if (preset == "fig2") return run_fig2(cfg, out_dir, cache);
  if (preset == "fig3") return run_fig3(cfg, out_dir, cache);
  if (preset == "fig4") return run_fig4(cfg, out_dir, cache);
  if (preset == "fig5") return run_fig5(cfg, out_dir, cache);
  if (preset == "table1") return run_table1(cfg, out_dir, cache);
  std::string known;
  for (const auto& name : preset_names()) {
    if (!known.empty()) known += ", ";
    known += name;
  }
  throw std::invalid_argument("unknown preset '" + preset + "' (available: " + known + ")");
}

}  // namespace mimocal
