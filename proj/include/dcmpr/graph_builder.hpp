#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "dcmpr/degree_model.hpp"
#include "dcmpr/errors.hpp"
#include "dcmpr/multidigraph.hpp"
#include "dcmpr/random.hpp"
#include "dcmpr/tbt.hpp"

namespace dcmpr {

enum class StubLabel : std::uint8_t {
  Label1 = 1,  // owner not yet attached
  Label2 = 2,  // owner attached, stub unpaired
  Label3 = 3,  // stub paired
};

namespace detail {

// Outbound stubs of node i are the contiguous ids [first(i), first(i + 1)).
class StubTable {
 public:
  explicit StubTable(const BiDegreeSequence& seq) : first_(seq.size() + 1, 0) {
    owner_.reserve(static_cast<std::size_t>(seq.total_stubs()));
    for (std::size_t i = 0; i < seq.size(); ++i) {
      first_[i + 1] = first_[i] + static_cast<std::size_t>(seq.out_degree(i));
      owner_.insert(owner_.end(), static_cast<std::size_t>(seq.out_degree(i)), i);
    }
  }

  std::size_t size() const noexcept { return owner_.size(); }
  std::size_t owner(std::size_t stub) const { return owner_[stub]; }
  std::size_t first(std::size_t node) const { return first_[node]; }
  std::size_t last(std::size_t node) const { return first_[node + 1]; }

 private:
  std::vector<std::size_t> first_;
  std::vector<std::size_t> owner_;
};

// Unmatched outbound stubs with O(1) removal by id and uniform draws.
class StubPool {
 public:
  explicit StubPool(std::size_t stubs) : stubs_(stubs), pos_(stubs) {
    for (std::size_t s = 0; s < stubs; ++s) stubs_[s] = pos_[s] = s;
  }

  std::size_t size() const noexcept { return stubs_.size(); }

  void remove(std::size_t stub) {
    const std::size_t p = pos_[stub];
    const std::size_t moved = stubs_.back();
    stubs_[p] = moved;
    pos_[moved] = p;
    stubs_.pop_back();
  }

  std::size_t take(RandomStream& rng) {
    const std::size_t stub = stubs_[rng.index(stubs_.size())];
    remove(stub);
    return stub;
  }

 private:
  std::vector<std::size_t> stubs_;
  std::vector<std::size_t> pos_;
};

}  // namespace detail

/// Uniform stub matching: each inbound stub, node by node in index order,
/// takes a uniformly chosen unmatched outbound stub.
inline MultiDigraph build_dcm(const BiDegreeSequence& seq, RandomStream& rng) {
  detail::StubTable table(seq);
  detail::StubPool pool(table.size());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(table.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (Degree m = 0; m < seq.in_degree(i); ++m) {
      pairs.emplace_back(table.owner(pool.take(rng)), i);
    }
  }
  return MultiDigraph::from_pairs(seq.size(), std::move(pairs));
}

struct CoupledExploration {
  MultiDigraph graph;
  Tbt tree{npos, 0, 0};
  CouplingStats stats;
  std::vector<int> distance;  // graph distance to the root, -1 if never reached
};

using LabelObserver = std::function<void(std::size_t stub, StubLabel from, StubLabel to)>;

/// Builds the graph and the thorny branching tree together.
///
/// The root is uniform over nodes. Inbound stubs are processed breadth-first
/// for nodes at distance 0..k; each one draws uniformly from all L_n outbound
/// stubs. The tree takes the first draw: a label-1 stub yields a child tied to
/// the newly attached graph node, a label-2 or label-3 stub yields a detached
/// copy (and sets tau if unset) whose own children are drawn independently.
/// The graph redraws label-3 stubs. Afterwards every remaining inbound stub
/// is matched uniformly, node by node in index order.
///
/// The returned tree has depth k + 1; stats.tau is empty when tau > k.
inline CoupledExploration explore_and_couple(const BiDegreeSequence& seq, int k, RandomStream& rng,
                                             const LabelObserver& observer = {}) {
  if (k < 0) throw InvalidParameter("k", "must be nonnegative");
  const std::size_t n = seq.size();
  detail::StubTable table(seq);
  const std::size_t stubs = table.size();

  std::vector<StubLabel> labels(stubs, StubLabel::Label1);
  auto relabel = [&](std::size_t stub, StubLabel to) {
    if (observer) observer(stub, labels[stub], to);
    labels[stub] = to;
  };
  detail::StubPool pool(stubs);
  std::vector<Degree> matched_in(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(stubs);

  const auto root = static_cast<std::size_t>(rng.index(n));
  for (std::size_t s = table.first(root); s < table.last(root); ++s) relabel(s, StubLabel::Label2);

  CoupledExploration out;
  out.distance.assign(n, -1);
  out.distance[root] = 0;
  out.tree = Tbt(root, seq.in_degree(root), seq.out_degree(root));
  out.stats.root = root;
  out.stats.k = k;

  // An inbound stub awaiting a draw. `node` is npos for slots that exist only
  // in the tree; `tree_node` is npos for graph stubs with no tree counterpart.
  struct Slot {
    std::size_t node;
    std::size_t tree_node;
    int level;
  };
  std::deque<Slot> frontier;
  auto enqueue = [&](std::size_t node, std::size_t tree_node, Degree count, int level) {
    if (level > k) return;
    for (Degree m = 0; m < count; ++m) frontier.push_back({node, tree_node, level});
  };
  enqueue(root, Tbt::root(), seq.in_degree(root), 0);

  auto draw = [&] { return static_cast<std::size_t>(rng.index(stubs)); };

  while (!frontier.empty()) {
    const Slot slot = frontier.front();
    frontier.pop_front();
    std::size_t stub = draw();
    const StubLabel first_label = labels[stub];

    std::size_t child = npos;
    if (slot.tree_node != npos) {
      const std::size_t j = table.owner(stub);
      child = out.tree.add_child(slot.tree_node, j, seq.in_degree(j), seq.out_degree(j) - 1);
      if (first_label != StubLabel::Label1 || slot.node == npos) {
        enqueue(npos, child, seq.in_degree(j), slot.level + 1);
      }
    }
    if (slot.node == npos) continue;

    if (first_label != StubLabel::Label1 && !out.stats.tau) out.stats.tau = slot.level;
    while (labels[stub] == StubLabel::Label3) stub = draw();

    const std::size_t j = table.owner(stub);
    const bool fresh = labels[stub] == StubLabel::Label1;
    relabel(stub, StubLabel::Label3);
    pool.remove(stub);
    pairs.emplace_back(j, slot.node);
    ++matched_in[slot.node];
    if (fresh) {
      for (std::size_t s = table.first(j); s < table.last(j); ++s) {
        if (s != stub) relabel(s, StubLabel::Label2);
      }
      out.distance[j] = slot.level + 1;
      enqueue(j, first_label == StubLabel::Label1 ? child : npos, seq.in_degree(j), slot.level + 1);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (Degree m = matched_in[i]; m < seq.in_degree(i); ++m) {
      const std::size_t stub = pool.take(rng);
      relabel(stub, StubLabel::Label3);
      pairs.emplace_back(table.owner(stub), i);
    }
  }

  out.tree.set_depth(k + 1);
  out.stats.Z.assign(static_cast<std::size_t>(k) + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int d = out.distance[i];
    if (d >= 0 && d <= k) out.stats.Z[static_cast<std::size_t>(d)] += seq.in_degree(i);
  }
  for (int r = 0; r <= k; ++r) {
    out.stats.Zhat.push_back(static_cast<Degree>(out.tree.generation_size(r + 1)));
  }
  for (int s = 0; s <= k + 1; ++s) out.stats.Vhat.push_back(out.tree.thorn_total(s));

  out.graph = MultiDigraph::from_pairs(n, std::move(pairs));
  return out;
}

}  // namespace dcmpr
