#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcmpr/errors.hpp"
#include "dcmpr/multidigraph.hpp"

namespace dcmpr {

struct PageRankConfig {
  double c = 0.5;         // damping factor
  double r0 = 1.0;        // initial level, R^(0) = r0 * 1
  double eps0 = 1e-6;     // stop when ||R^(t) - R^(t-1)||_2 < eps0
  int max_iters = 100000;
  std::size_t dense_limit = 2000;  // largest n accepted by solve_exact

  void validate() const {
    if (!(c > 0.0 && c < 1.0)) throw InvalidParameter("c", "must lie in (0, 1)");
    if (!(r0 >= 0.0)) throw InvalidParameter("r0", "must be nonnegative");
    if (!(eps0 > 0.0)) throw InvalidParameter("eps0", "must be positive");
    if (max_iters < 1) throw InvalidParameter("max_iters", "must be positive");
  }
};

/// Scale-free PageRank values (mean 1 in expectation).
struct RankVector {
  std::vector<double> values;
  int iterations_used = 0;
  bool converged = true;  // false when power_iterate_converged hit max_iters
  double last_delta = 0.0;
};

/// out = v M with M_ij = c s_ij / D_i. Edges are streamed in (src, dst)
/// order, so every output coordinate is summed in a fixed order.
inline void apply_M(const MultiDigraph& graph, std::span<const double> v, double c,
                    std::span<double> out) {
  if (v.size() != graph.size() || out.size() != graph.size()) {
    throw DimensionMismatch("vector length " + std::to_string(v.size()) + " vs n = " +
                            std::to_string(graph.size()));
  }
  std::fill(out.begin(), out.end(), 0.0);
  const auto out_deg = graph.out_degrees();
  for (const Edge& e : graph.edges()) {
    const double weight =
        c * static_cast<double>(e.multiplicity) / static_cast<double>(out_deg[e.src]);
    out[e.dst] += v[e.src] * weight;
  }
}

inline std::vector<double> apply_M(const MultiDigraph& graph, std::span<const double> v, double c) {
  std::vector<double> out(graph.size());
  apply_M(graph, v, c, out);
  return out;
}

namespace detail {

// R <- R M + (1 - c) 1, using `scratch` as the output buffer.
inline void pagerank_step(const MultiDigraph& graph, double c, std::vector<double>& rank,
                          std::vector<double>& scratch) {
  apply_M(graph, rank, c, scratch);
  for (double& x : scratch) x += 1.0 - c;
  rank.swap(scratch);
}

}  // namespace detail

/// R^(n,k): exactly k applications of M starting from r0 * 1.
inline RankVector power_iterate_k(const MultiDigraph& graph, const PageRankConfig& cfg, int k) {
  cfg.validate();
  if (k < 0) throw InvalidParameter("k", "must be nonnegative");
  RankVector result;
  result.values.assign(graph.size(), cfg.r0);
  std::vector<double> scratch(graph.size());
  for (int t = 0; t < k; ++t) detail::pagerank_step(graph, cfg.c, result.values, scratch);
  result.iterations_used = k;
  return result;
}

/// Iterates until the successive-iterate L2 distance is below eps0. If
/// max_iters is reached first the last iterate is returned with
/// converged = false.
inline RankVector power_iterate_converged(const MultiDigraph& graph, const PageRankConfig& cfg) {
  cfg.validate();
  RankVector result;
  result.values.assign(graph.size(), cfg.r0);
  std::vector<double> previous(graph.size());
  std::vector<double> scratch(graph.size());
  result.converged = false;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    previous = result.values;
    detail::pagerank_step(graph, cfg.c, result.values, scratch);
    double sq = 0.0;
    for (std::size_t i = 0; i < previous.size(); ++i) {
      const double d = result.values[i] - previous[i];
      sq += d * d;
    }
    result.iterations_used = t;
    result.last_delta = std::sqrt(sq);
    if (result.last_delta < cfg.eps0) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// Dense LU solve of R (I - M) = (1 - c) 1.
inline RankVector solve_exact(const MultiDigraph& graph, const PageRankConfig& cfg) {
  cfg.validate();
  const std::size_t n = graph.size();
  if (n > cfg.dense_limit) {
    throw TooLarge("n = " + std::to_string(n) + " exceeds the dense limit " +
                   std::to_string(cfg.dense_limit));
  }
  const auto dim = static_cast<Eigen::Index>(n);
  // Transposed system (I - M)^T R^T = (1 - c) 1^T.
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(dim, dim);
  const auto out_deg = graph.out_degrees();
  for (const Edge& e : graph.edges()) {
    system(static_cast<Eigen::Index>(e.dst), static_cast<Eigen::Index>(e.src)) -=
        cfg.c * static_cast<double>(e.multiplicity) / static_cast<double>(out_deg[e.src]);
  }
  const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(dim, 1.0 - cfg.c);
  const Eigen::VectorXd solution = system.partialPivLu().solve(rhs);
  RankVector result;
  result.values.assign(solution.data(), solution.data() + dim);
  return result;
}

}  // namespace dcmpr
