#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dcmpr/degree_model.hpp"
#include "dcmpr/errors.hpp"
#include "dcmpr/random.hpp"

namespace dcmpr {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

struct TreeNode {
  std::size_t source = npos;  // graph node this individual copies
  std::size_t parent = npos;
  Degree offspring = 0;       // inbound stubs, i.e. number of children
  Degree thorns = 0;          // outbound stubs leaving the tree
  int generation = 0;
};

/// Thorny branching tree.
///
/// Every non-root individual has one outbound edge to its parent plus
/// `thorns` outbound stubs pointing to an auxiliary node outside the tree;
/// the root's outbound stubs are all thorns. Nodes are appended in
/// breadth-first order, so each generation occupies a contiguous id range
/// and node 0 is the root.
class Tbt {
 public:
  Tbt(std::size_t source, Degree offspring, Degree thorns) {
    if (offspring < 0 || thorns < 0) throw InvalidParameter("root_profile", "must be nonnegative");
    nodes_.push_back({source, npos, offspring, thorns, 0});
    gen_begin_.push_back(0);
  }

  std::size_t add_child(std::size_t parent, std::size_t source, Degree offspring, Degree thorns) {
    if (parent >= nodes_.size()) throw std::out_of_range("Tbt::add_child: unknown parent");
    if (offspring < 0 || thorns < 0) throw InvalidParameter("profile", "must be nonnegative");
    const int gen = nodes_[parent].generation + 1;
    const auto generations = static_cast<int>(gen_begin_.size());
    if (gen == generations) {
      gen_begin_.push_back(nodes_.size());
    } else if (gen != generations - 1) {
      throw std::logic_error("Tbt::add_child: children must be added breadth-first");
    }
    nodes_.push_back({source, parent, offspring, thorns, gen});
    depth_ = std::max(depth_, gen);
    return nodes_.size() - 1;
  }

  /// Marks generations up to `depth` as explored, even if they are empty.
  void set_depth(int depth) { depth_ = std::max(depth_, depth); }

  static constexpr std::size_t root() noexcept { return 0; }
  const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Number of explored generations below the root.
  int depth() const noexcept { return depth_; }
  /// Index of the last nonempty generation.
  int height() const noexcept { return static_cast<int>(gen_begin_.size()) - 1; }

  /// Node ids [first, last) of generation g; empty past the last nonempty one.
  std::pair<std::size_t, std::size_t> generation_range(int g) const {
    if (g < 0 || g > height()) return {nodes_.size(), nodes_.size()};
    const auto gi = static_cast<std::size_t>(g);
    const std::size_t last = gi + 1 < gen_begin_.size() ? gen_begin_[gi + 1] : nodes_.size();
    return {gen_begin_[gi], last};
  }

  std::span<const TreeNode> generation(int g) const {
    auto [first, last] = generation_range(g);
    return std::span<const TreeNode>(nodes_).subspan(first, last - first);
  }

  std::size_t generation_size(int g) const {
    auto [first, last] = generation_range(g);
    return last - first;
  }

  Degree thorn_total(int g) const {
    Degree total = 0;
    for (const TreeNode& node : generation(g)) total += node.thorns;
    return total;
  }

 private:
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> gen_begin_;
  int depth_ = 0;
};

/// Bookkeeping of a coupled exploration. `tau` is empty when no label-2 or
/// label-3 stub was drawn while matching the inbound stubs of nodes at
/// distance 0..k, i.e. tau > k.
struct CouplingStats {
  std::optional<int> tau;
  int k = 0;
  std::vector<Degree> Z;     // inbound stubs of graph nodes at distance r, r = 0..k
  std::vector<Degree> Zhat;  // tree generation sizes |generation r+1|, r = 0..k
  std::vector<Degree> Vhat;  // thorns per tree generation s, s = 0..k+1
  std::size_t root = 0;

  /// True when the tree and graph agree through k generations (tau >= k).
  bool coupled_through(int generations) const { return !tau || *tau >= generations; }
};

struct SizeBiasedDraw {
  std::size_t node = 0;
  Degree offspring = 0;
  Degree thorns = 0;

  bool operator==(const SizeBiasedDraw&) const = default;
};

/// O(1) draws of a node with probability D_k / L_n via a stub-owner table.
class SizeBiasedSampler {
 public:
  explicit SizeBiasedSampler(const BiDegreeSequence& seq) : seq_(&seq) {
    if (seq.total_stubs() == 0) throw EmptyGraph("no outbound stubs to sample from");
    owner_.reserve(static_cast<std::size_t>(seq.total_stubs()));
    for (std::size_t i = 0; i < seq.size(); ++i) {
      owner_.insert(owner_.end(), static_cast<std::size_t>(seq.out_degree(i)), i);
    }
  }

  SizeBiasedDraw operator()(RandomStream& rng) const {
    const std::size_t k = owner_[rng.index(owner_.size())];
    return {k, seq_->in_degree(k), seq_->out_degree(k) - 1};
  }

 private:
  const BiDegreeSequence* seq_;
  std::vector<std::size_t> owner_;
};

/// Single size-biased draw without a prebuilt table (linear scan).
inline SizeBiasedDraw sample_size_biased(const BiDegreeSequence& seq, RandomStream& rng) {
  if (seq.total_stubs() == 0) throw EmptyGraph("no outbound stubs to sample from");
  auto stub = static_cast<Degree>(rng.index(static_cast<std::uint64_t>(seq.total_stubs())));
  std::size_t k = 0;
  while (stub >= seq.out_degree(k)) stub -= seq.out_degree(k++);
  return {k, seq.in_degree(k), seq.out_degree(k) - 1};
}

struct RootProfile {
  Degree offspring = 0;
  Degree thorns = 0;
};

/// Standalone tree of depth k: the root has the given profile and every
/// later individual draws (offspring, thorns) independently by size-biased
/// sampling.
inline Tbt grow_tbt(const BiDegreeSequence& seq, RootProfile root, int k, RandomStream& rng) {
  if (k < 0) throw InvalidParameter("k", "must be nonnegative");
  SizeBiasedSampler sample(seq);
  Tbt tree(npos, root.offspring, root.thorns);
  for (int g = 0; g < k; ++g) {
    const auto [first, last] = tree.generation_range(g);
    for (std::size_t parent = first; parent < last; ++parent) {
      const Degree children = tree.node(parent).offspring;
      for (Degree c = 0; c < children; ++c) {
        const SizeBiasedDraw d = sample(rng);
        tree.add_child(parent, d.node, d.offspring, d.thorns);
      }
    }
  }
  tree.set_depth(k);
  return tree;
}

/// Root PageRank after k iterations, evaluated from generation k upwards.
///
/// Generation-k individuals start at r0; an individual with thorns t sends
/// c / (t + 1) of its value to its parent, the remaining t / (t + 1) share
/// leaves through the thorns.
inline double tree_pagerank(const Tbt& tree, double c, int k, double r0 = 1.0) {
  if (!(c > 0.0 && c < 1.0)) throw InvalidParameter("c", "must lie in (0, 1)");
  if (k < 0) throw InvalidParameter("k", "must be nonnegative");
  if (k > tree.depth()) {
    throw DepthExceeded("k = " + std::to_string(k) + " exceeds tree depth " +
                        std::to_string(tree.depth()));
  }
  if (k == 0) return r0;
  const auto nodes = tree.nodes();
  std::vector<double> value(nodes.size(), 0.0);
  {
    const auto [first, last] = tree.generation_range(k);
    for (std::size_t i = first; i < last; ++i) value[i] = r0;
  }
  for (int g = k - 1; g >= 0; --g) {
    const auto [first, last] = tree.generation_range(g);
    const auto [cfirst, clast] = tree.generation_range(g + 1);
    std::vector<double> inflow(last - first, 0.0);
    for (std::size_t j = cfirst; j < clast; ++j) {
      const TreeNode& child = nodes[j];
      inflow[child.parent - first] += c / static_cast<double>(child.thorns + 1) * value[j];
    }
    for (std::size_t i = first; i < last; ++i) value[i] = inflow[i - first] + (1.0 - c);
  }
  return value[Tbt::root()];
}

}  // namespace dcmpr
