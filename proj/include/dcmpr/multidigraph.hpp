#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dcmpr/degree_model.hpp"
#include "dcmpr/errors.hpp"

namespace dcmpr {

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::int64_t multiplicity = 0;

  bool operator==(const Edge&) const = default;
};

/// Directed multigraph stored as an edge map (src, dst) -> s_ij, sorted by
/// (src, dst). Self-loops and multiplicities above one are allowed. Degrees
/// are derived from the edges, so the conservation identities hold by
/// construction. Immutable once built.
class MultiDigraph {
 public:
  MultiDigraph() = default;

  /// One entry per directed edge (src, dst); duplicates become multiplicities.
  static MultiDigraph from_pairs(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    std::vector<Edge> edges;
    for (const auto& [src, dst] : pairs) {
      if (!edges.empty() && edges.back().src == src && edges.back().dst == dst) {
        ++edges.back().multiplicity;
      } else {
        edges.push_back({src, dst, 1});
      }
    }
    return MultiDigraph(n, std::move(edges));
  }

  /// Edge list in any order; repeated keys are merged by adding multiplicities.
  static MultiDigraph from_edges(std::size_t n, std::vector<Edge> edges) {
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
    });
    std::vector<Edge> merged;
    for (const Edge& e : edges) {
      if (e.multiplicity <= 0) throw InvalidParameter("multiplicity", "must be positive");
      if (!merged.empty() && merged.back().src == e.src && merged.back().dst == e.dst) {
        merged.back().multiplicity += e.multiplicity;
      } else {
        merged.push_back(e);
      }
    }
    return MultiDigraph(n, std::move(merged));
  }

  std::size_t size() const noexcept { return out_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const Degree> out_degrees() const noexcept { return out_; }
  std::span<const Degree> in_degrees() const noexcept { return in_; }
  Degree out_degree(std::size_t i) const { return out_[i]; }
  Degree in_degree(std::size_t j) const { return in_[j]; }
  Degree total_edges() const noexcept { return total_; }

  std::int64_t multiplicity(std::size_t src, std::size_t dst) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair(src, dst),
                               [](const Edge& e, const std::pair<std::size_t, std::size_t>& key) {
                                 return std::pair(e.src, e.dst) < key;
                               });
    return it != edges_.end() && it->src == src && it->dst == dst ? it->multiplicity : 0;
  }

  bool operator==(const MultiDigraph&) const = default;

 private:
  MultiDigraph(std::size_t n, std::vector<Edge> edges)
      : edges_(std::move(edges)), out_(n, 0), in_(n, 0) {
    for (const Edge& e : edges_) {
      if (e.src >= n || e.dst >= n) throw InvalidParameter("edge", "endpoint out of range");
      out_[e.src] += e.multiplicity;
      in_[e.dst] += e.multiplicity;
      total_ += e.multiplicity;
    }
  }

  std::vector<Edge> edges_;
  std::vector<Degree> out_;
  std::vector<Degree> in_;
  Degree total_ = 0;
};

}  // namespace dcmpr
