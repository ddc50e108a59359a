#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dcmpr/degree_model.hpp"
#include "dcmpr/errors.hpp"
#include "dcmpr/graph_builder.hpp"
#include "dcmpr/pagerank.hpp"
#include "dcmpr/random.hpp"
#include "dcmpr/tbt.hpp"

namespace dcmpr {

/// Number of power iterations (and tree generations) used for a graph of size n.
struct IterationRule {
  enum class Kind { Fixed, LogScaled };

  Kind kind = Kind::LogScaled;
  int k = 0;       // Fixed
  double h = 1.0;  // LogScaled: k_n = floor(h log n)

  static IterationRule fixed(int k) { return {Kind::Fixed, k, 0.0}; }
  static IterationRule log_scaled(double h) { return {Kind::LogScaled, 0, h}; }

  int resolve(std::size_t n) const {
    if (kind == Kind::Fixed) return k;
    return static_cast<int>(std::floor(h * std::log(static_cast<double>(n))));
  }
};

struct ExperimentConfig {
  DegreeParams params;
  Algorithm1Config alg1;
  double c = 0.5;
  double r0 = 1.0;
  double eps0 = 1e-6;
  int max_iters = 100000;
  std::vector<std::size_t> sizes;
  IterationRule rule;
  std::vector<int> k_sweep;     // overrides `rule` when nonempty
  std::vector<double> c_sweep;  // overrides `c` when nonempty
  int replications = 100;
  std::uint64_t master_seed = 1;
  int tbt_root_samples = 1000;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    params.validate();
    alg1.validate(params);
    if (sizes.empty()) throw InvalidParameter("sizes", "must be nonempty");
    for (std::size_t n : sizes) {
      if (n == 0) throw InvalidParameter("n", "must be positive");
    }
    if (replications < 1) throw InvalidParameter("replications", "must be >= 1");
    if (tbt_root_samples < 1) throw InvalidParameter("tbt_root_samples", "must be >= 1");
    for (double cc : c_sweep.empty() ? std::vector<double>{c} : c_sweep) {
      if (!(cc > 0.0 && cc < 1.0)) throw InvalidParameter("c", "must lie in (0, 1)");
    }
    for (int k : k_sweep) {
      if (k < 0) throw InvalidParameter("k", "must be nonnegative");
    }
    if (rule.kind == IterationRule::Kind::Fixed && rule.k < 0) {
      throw InvalidParameter("k", "must be nonnegative");
    }
    if (!(eps0 > 0.0)) throw InvalidParameter("eps0", "must be positive");
    if (!(r0 >= 0.0)) throw InvalidParameter("r0", "must be nonnegative");
  }

  std::vector<int> ks_for(std::size_t n) const {
    return k_sweep.empty() ? std::vector<int>{rule.resolve(n)} : k_sweep;
  }
  std::vector<double> cs() const { return c_sweep.empty() ? std::vector<double>{c} : c_sweep; }
  PageRankConfig pagerank_config(double damping) const {
    PageRankConfig cfg;
    cfg.c = damping;
    cfg.r0 = r0;
    cfg.eps0 = eps0;
    cfg.max_iters = max_iters;
    return cfg;
  }
};

struct ExperimentRow {
  std::size_t n = 0;
  int k = 0;
  double c = 0.0;
  int replications = 0;  // successful ones
  int failures = 0;
  double mean_R_inf = 0.0;
  double mean_R_k = 0.0;
  double mean_Rhat_k = 0.0;
  double mse_R_k = 0.0;
  double mse_Rhat_k = 0.0;
  double se_R_inf = 0.0;
  double se_mse_R_k = 0.0;
  double se_mse_Rhat_k = 0.0;
  double coupling_break_fraction = 0.0;  // share of replications with tau < k
  int coupled_replications = 0;          // tau >= k
  double max_coupled_gap = 0.0;          // max |R_k - Rhat_k| over coupled replications
  int l1_bound_violations = 0;
  int not_converged = 0;
  std::uint64_t seed = 0;
};

struct EmpiricalCdf {
  std::vector<double> sorted;

  EmpiricalCdf() = default;
  explicit EmpiricalCdf(std::vector<double> samples) : sorted(std::move(samples)) {
    std::sort(sorted.begin(), sorted.end());
  }

  /// Fraction of samples <= x.
  double operator()(double x) const {
    if (sorted.empty()) return 0.0;
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
    return static_cast<double>(below) / static_cast<double>(sorted.size());
  }

  std::size_t size() const noexcept { return sorted.size(); }
};

/// sup_x |F_a(x) - F_b(x)| over the merged sample points.
inline double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b) {
  if (a.sorted.empty() || b.sorted.empty()) throw DimensionMismatch("empty sample");
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  // Work in units of 1/(na nb) so a distance of k/n rounds exactly once.
  std::size_t i = 0;
  std::size_t j = 0;
  std::uint64_t best = 0;
  while (i < na && j < nb) {
    const double x = std::min(a.sorted[i], b.sorted[j]);
    while (i < na && a.sorted[i] <= x) ++i;
    while (j < nb && b.sorted[j] <= x) ++j;
    const std::uint64_t u = static_cast<std::uint64_t>(i) * nb;
    const std::uint64_t v = static_cast<std::uint64_t>(j) * na;
    best = std::max(best, u > v ? u - v : v - u);
  }
  return static_cast<double>(best) / (static_cast<double>(na) * static_cast<double>(nb));
}

inline double mse(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size() || estimates.empty()) {
    throw DimensionMismatch("mse needs two vectors of the same nonzero length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - truths[i];
    sum += d * d;
  }
  return sum / static_cast<double>(estimates.size());
}

/// Runs fn(0) .. fn(count - 1) on up to `threads` workers. The first
/// exception thrown by any task is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

inline RandomStream replication_stream(std::uint64_t master_seed, std::size_t n, std::size_t rep) {
  return RandomStream::derive(master_seed, rep).child(static_cast<std::uint64_t>(n));
}

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return count ? sum / count : 0.0; }
  // Standard error of the mean; 0 when fewer than two samples.
  double se() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - count * m * m) / (count - 1));
    return std::sqrt(var / count);
  }
};

struct ReplicationValues {
  double R_inf = 0.0;
  double R_k = 0.0;
  double Rhat_k = 0.0;
  double l1_error = 0.0;
  double l1_allowance = 0.0;
  bool converged = true;
};

struct Replication {
  bool ok = false;
  std::string error;
  bool coupled = false;
  std::vector<ReplicationValues> per_c;  // indexed like cfg.cs()
};

}  // namespace detail

/// Monte Carlo over replications of: bi-degree sequence, coupled
/// exploration to depth k, converged PageRank (truth), k power iterations
/// and tree PageRank, all at the uniformly chosen root. One row per
/// (n, k, c). Within a replication the same sequence is reused across k and
/// the same graph across c.
inline std::vector<ExperimentRow> run_table_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> cs = cfg.cs();
  std::vector<ExperimentRow> rows;
  for (std::size_t n : cfg.sizes) {
    for (int k : cfg.ks_for(n)) {
      std::vector<detail::Replication> reps(static_cast<std::size_t>(cfg.replications));
      parallel_for(reps.size(), cfg.threads, [&](std::size_t r) {
        detail::Replication& out = reps[r];
        try {
          RandomStream stream = detail::replication_stream(cfg.master_seed, n, r);
          RandomStream degree_rng = stream.child("degrees");
          RandomStream explore_rng = stream.child("explore");
          const BiDegreeSequence seq = run_algorithm1(n, cfg.params, cfg.alg1, degree_rng);
          const CoupledExploration ex = explore_and_couple(seq, k, explore_rng);
          const std::size_t root = ex.stats.root;
          out.coupled = ex.stats.coupled_through(k);
          for (double c : cs) {
            const PageRankConfig pr = cfg.pagerank_config(c);
            const RankVector truth = power_iterate_converged(ex.graph, pr);
            const RankVector approx = power_iterate_k(ex.graph, pr, k);
            detail::ReplicationValues v;
            v.R_inf = truth.values[root];
            v.R_k = approx.values[root];
            v.Rhat_k = tree_pagerank(ex.tree, c, k, cfg.r0);
            v.converged = truth.converged;
            for (std::size_t i = 0; i < n; ++i) v.l1_error += std::abs(approx.values[i] - truth.values[i]);
            // The converged truth is itself off by at most sqrt(n) eps0 c / (1 - c) in L1.
            v.l1_allowance = (cfg.r0 + 1.0) * static_cast<double>(n) * std::pow(c, k) +
                             std::sqrt(static_cast<double>(n)) * truth.last_delta * c / (1.0 - c);
            out.per_c.push_back(v);
          }
          out.ok = true;
        } catch (const Error& e) {
          out.error = e.name();
        }
      });

      for (std::size_t ci = 0; ci < cs.size(); ++ci) {
        ExperimentRow row;
        row.n = n;
        row.k = k;
        row.c = cs[ci];
        row.seed = cfg.master_seed;
        detail::Moments r_inf, r_k, rhat_k, se_k, se_hat;
        int breaks = 0;
        for (const detail::Replication& rep : reps) {
          if (!rep.ok) {
            ++row.failures;
            continue;
          }
          const detail::ReplicationValues& v = rep.per_c[ci];
          r_inf.add(v.R_inf);
          r_k.add(v.R_k);
          rhat_k.add(v.Rhat_k);
          se_k.add((v.R_k - v.R_inf) * (v.R_k - v.R_inf));
          se_hat.add((v.Rhat_k - v.R_inf) * (v.Rhat_k - v.R_inf));
          if (!v.converged) ++row.not_converged;
          if (v.l1_error > v.l1_allowance) ++row.l1_bound_violations;
          if (rep.coupled) {
            ++row.coupled_replications;
            row.max_coupled_gap = std::max(row.max_coupled_gap, std::abs(v.R_k - v.Rhat_k));
          } else {
            ++breaks;
          }
        }
        row.replications = r_inf.count;
        row.mean_R_inf = r_inf.mean();
        row.mean_R_k = r_k.mean();
        row.mean_Rhat_k = rhat_k.mean();
        row.mse_R_k = se_k.mean();
        row.mse_Rhat_k = se_hat.mean();
        row.se_R_inf = r_inf.se();
        row.se_mse_R_k = se_k.se();
        row.se_mse_Rhat_k = se_hat.se();
        row.coupling_break_fraction =
            row.replications ? static_cast<double>(breaks) / row.replications : 0.0;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

/// Wilson score interval for a binomial proportion.
struct ProportionCi {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline ProportionCi wilson_interval(int successes, int trials, double z = 1.959963984540054) {
  if (trials <= 0) return {0.0, 0.0, 1.0};
  const double nn = trials;
  const double p = successes / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {p, lo, hi};
}

struct CouplingRow {
  std::size_t n = 0;
  int k = 0;
  int runs = 0;       // successful runs
  int breaks = 0;     // runs with tau <= k
  int failures = 0;
  ProportionCi p_break;
  std::uint64_t seed = 0;
};

/// Mean degree L_n / n of a pilot Algorithm 1 run.
inline double estimate_mu(const DegreeParams& params, const Algorithm1Config& alg1, std::uint64_t seed,
                          std::size_t pilot_n = 100000) {
  RandomStream rng = RandomStream(seed).child("pilot");
  return run_algorithm1(pilot_n, params, alg1, rng).mean_degree();
}

/// True when k_n = floor(h log n) stays inside h < 1 / (2 log mu).
inline bool within_coupling_regime(double h, double mu) {
  return mu > 1.0 && h > 0.0 && h < 1.0 / (2.0 * std::log(mu));
}

/// Monte Carlo estimate of P(tau <= k_n) per n, with a fresh bi-degree
/// sequence and exploration in every run.
inline std::vector<CouplingRow> run_coupling_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<CouplingRow> rows;
  for (std::size_t n : cfg.sizes) {
    for (int k : cfg.ks_for(n)) {
      // 0: failed, 1: coupled, 2: broke
      std::vector<int> outcome(static_cast<std::size_t>(cfg.replications), 0);
      parallel_for(outcome.size(), cfg.threads, [&](std::size_t r) {
        try {
          RandomStream stream = detail::replication_stream(cfg.master_seed, n, r);
          RandomStream degree_rng = stream.child("degrees");
          RandomStream explore_rng = stream.child("explore");
          const BiDegreeSequence seq = run_algorithm1(n, cfg.params, cfg.alg1, degree_rng);
          const CoupledExploration ex = explore_and_couple(seq, k, explore_rng);
          outcome[r] = ex.stats.tau ? 2 : 1;
        } catch (const Error&) {
          outcome[r] = 0;
        }
      });
      CouplingRow row;
      row.n = n;
      row.k = k;
      row.seed = cfg.master_seed;
      for (int o : outcome) {
        if (o == 0) ++row.failures;
        else ++row.runs;
        if (o == 2) ++row.breaks;
      }
      row.p_break = wilson_interval(row.breaks, row.runs);
      rows.push_back(row);
    }
  }
  return rows;
}

struct CdfResult {
  std::size_t n = 0;
  int k = 0;
  double c = 0.0;
  EmpiricalCdf truth;  // converged PageRank of all nodes
  EmpiricalCdf iter;   // k power iterations, all nodes
  EmpiricalCdf tbt;    // root PageRank of independently coupled trees
  double ks_iter = 0.0;
  double ks_tbt = 0.0;
  std::uint64_t seed = 0;
};

/// One graph of size sizes[0]; compares the PageRank distribution of all its
/// nodes (converged and after k iterations) with tree PageRank at the roots
/// of `tbt_root_samples` coupled explorations of the same bi-degree sequence.
inline CdfResult run_cdf_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  CdfResult result;
  result.n = cfg.sizes.front();
  result.k = cfg.ks_for(result.n).front();
  result.c = cfg.c;
  result.seed = cfg.master_seed;

  RandomStream stream(cfg.master_seed);
  RandomStream degree_rng = stream.child("degrees");
  RandomStream graph_rng = stream.child("graph");
  const RandomStream tree_stream = stream.child("trees");

  const BiDegreeSequence seq = run_algorithm1(result.n, cfg.params, cfg.alg1, degree_rng);
  const MultiDigraph graph = build_dcm(seq, graph_rng);
  const PageRankConfig pr = cfg.pagerank_config(cfg.c);
  result.truth = EmpiricalCdf(power_iterate_converged(graph, pr).values);
  result.iter = EmpiricalCdf(power_iterate_k(graph, pr, result.k).values);

  std::vector<double> roots(static_cast<std::size_t>(cfg.tbt_root_samples));
  parallel_for(roots.size(), cfg.threads, [&](std::size_t s) {
    RandomStream rng = tree_stream.child(static_cast<std::uint64_t>(s));
    const CoupledExploration ex = explore_and_couple(seq, result.k, rng);
    roots[s] = tree_pagerank(ex.tree, cfg.c, result.k, cfg.r0);
  });
  result.tbt = EmpiricalCdf(std::move(roots));
  result.ks_iter = ks_distance(result.truth, result.iter);
  result.ks_tbt = ks_distance(result.truth, result.tbt);
  return result;
}

}  // namespace dcmpr
