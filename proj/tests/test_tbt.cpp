#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcmpr/graph_builder.hpp"
#include "dcmpr/pagerank.hpp"
#include "dcmpr/presets.hpp"
#include "dcmpr/tbt.hpp"

using namespace dcmpr;

namespace {

BiDegreeSequence reference_sequence(std::size_t n, std::uint64_t seed) {
  const DegreeParams p = presets::reference_params();
  RandomStream rng(seed);
  return run_algorithm1(n, p, Algorithm1Config::for_params(p), rng);
}

// k-step PageRank at the root of `tree`, computed on an explicit graph: each
// individual links to its parent and sends its thorns to one extra sink node.
double dense_tree_pagerank(const Tbt& tree, double c, int k) {
  const auto n = static_cast<Eigen::Index>(tree.size() + 1);
  const Eigen::Index sink = n - 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const TreeNode& node = tree.node(i);
    const double out = static_cast<double>(node.thorns + (node.parent == npos ? 0 : 1));
    if (out == 0) continue;
    const auto row = static_cast<Eigen::Index>(i);
    if (node.parent != npos) m(row, static_cast<Eigen::Index>(node.parent)) += c / out;
    m(row, sink) += c * static_cast<double>(node.thorns) / out;
  }
  Eigen::RowVectorXd r = Eigen::RowVectorXd::Ones(n);
  for (int t = 0; t < k; ++t) r = (r * m).array() + (1.0 - c);
  return r(0);
}

// Root with offspring 2; its children have offspring 1 and 3; four leaves.
Tbt seven_node_tree(const std::vector<Degree>& thorns) {
  Tbt tree(npos, 2, thorns[0]);
  const auto a = tree.add_child(0, npos, 1, thorns[1]);
  const auto b = tree.add_child(0, npos, 3, thorns[2]);
  tree.add_child(a, npos, 0, thorns[3]);
  tree.add_child(b, npos, 0, thorns[4]);
  tree.add_child(b, npos, 0, thorns[5]);
  tree.add_child(b, npos, 0, thorns[6]);
  return tree;
}

double chi_square(const std::vector<int>& counts, const std::vector<double>& probs) {
  double total = 0.0;
  for (int c : counts) total += c;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = total * probs[i];
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
  }
  return chi2;
}

}  // namespace

TEST(SampleSizeBiased, TwoNodeProbabilities) {
  const BiDegreeSequence seq({2, 2}, {1, 3});
  RandomStream rng(17);
  const SizeBiasedSampler sampler(seq);
  std::vector<int> scan(2, 0), table(2, 0);
  for (int i = 0; i < 10000; ++i) {
    ++scan[sample_size_biased(seq, rng).node];
    ++table[sampler(rng).node];
  }
  EXPECT_LT(chi_square(scan, {0.25, 0.75}), 6.635);
  EXPECT_LT(chi_square(table, {0.25, 0.75}), 6.635);
}

TEST(SampleSizeBiased, EqualOutDegreesGiveUniformNodes) {
  const BiDegreeSequence s({3, 1, 2, 2}, {2, 2, 2, 2});
  RandomStream rng(23);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 20000; ++i) ++counts[sample_size_biased(s, rng).node];
  EXPECT_LT(chi_square(counts, {0.25, 0.25, 0.25, 0.25}), 11.345);  // 3 df, 1%
}

TEST(SampleSizeBiased, ProfileIsInDegreeAndOutDegreeMinusOne) {
  const BiDegreeSequence seq({4, 0, 1}, {1, 3, 1});
  RandomStream rng(2);
  for (int i = 0; i < 100; ++i) {
    const SizeBiasedDraw d = sample_size_biased(seq, rng);
    EXPECT_EQ(d.offspring, seq.in_degree(d.node));
    EXPECT_EQ(d.thorns, seq.out_degree(d.node) - 1);
  }
}

TEST(SampleSizeBiased, JointLawMatchesExactFrequencies) {
  const BiDegreeSequence seq = reference_sequence(100, 4);
  // f(i, j) = sum_k 1(N_k = i, D_k = j) D_k / L_n
  std::map<std::pair<Degree, Degree>, double> exact;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    exact[{seq.in_degree(k), seq.out_degree(k)}] +=
        static_cast<double>(seq.out_degree(k)) / static_cast<double>(seq.total_stubs());
  }
  const SizeBiasedSampler sampler(seq);
  RandomStream rng(8);
  const int draws = 100000;
  std::map<std::pair<Degree, Degree>, double> empirical;
  for (int i = 0; i < draws; ++i) {
    const SizeBiasedDraw d = sampler(rng);
    empirical[{d.offspring, d.thorns + 1}] += 1.0 / draws;
  }
  double tv = 0.0;
  for (const auto& [key, p] : exact) tv += std::abs(p - (empirical.count(key) ? empirical[key] : 0.0));
  for (const auto& [key, q] : empirical) {
    if (!exact.count(key)) tv += q;
  }
  EXPECT_LT(tv / 2.0, 0.02);
}

TEST(SampleSizeBiased, EmptyGraph) {
  const BiDegreeSequence seq({0, 0}, {0, 0});
  RandomStream rng(1);
  EXPECT_THROW(sample_size_biased(seq, rng), EmptyGraph);
  EXPECT_THROW(SizeBiasedSampler{seq}, EmptyGraph);
  EXPECT_THROW(grow_tbt(seq, {1, 0}, 2, rng), EmptyGraph);
}

TEST(GrowTbt, ChildlessRoot) {
  const BiDegreeSequence seq = reference_sequence(100, 1);
  RandomStream rng(3);
  const Tbt tree = grow_tbt(seq, {0, 5}, 4, rng);
  EXPECT_EQ(tree.size(), 1u);
  EXPECT_EQ(tree.generation_size(1), 0u);
  EXPECT_EQ(tree.thorn_total(0), 5);
  EXPECT_EQ(tree.depth(), 4);
  EXPECT_EQ(tree.height(), 0);
}

TEST(GrowTbt, DepthZeroIsRootOnly) {
  const BiDegreeSequence seq = reference_sequence(100, 1);
  RandomStream rng(3);
  const Tbt tree = grow_tbt(seq, {7, 2}, 0, rng);
  EXPECT_EQ(tree.size(), 1u);
  EXPECT_EQ(tree.node(0).offspring, 7);
}

TEST(GrowTbt, GenerationsTelescope) {
  const BiDegreeSequence seq = reference_sequence(1000, 2);
  RandomStream rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Tbt tree = grow_tbt(seq, {3, 1}, 5, rng);
    for (int g = 0; g < 5; ++g) {
      Degree offspring = 0;
      for (const TreeNode& node : tree.generation(g)) {
        offspring += node.offspring;
        EXPECT_GE(node.thorns, 0);
      }
      EXPECT_EQ(static_cast<Degree>(tree.generation_size(g + 1)), offspring);
    }
  }
}

TEST(GrowTbt, MeanGrowthMatchesMu) {
  const BiDegreeSequence seq = reference_sequence(100000, 5);
  const double mu = seq.mean_degree();
  const int k = 4;
  const int reps = 1000;
  RandomStream rng(6);
  std::vector<double> sum(k + 1, 0.0), sum_sq(k + 1, 0.0);
  for (int rep = 0; rep < reps; ++rep) {
    const auto root = static_cast<std::size_t>(rng.index(seq.size()));
    const Tbt tree = grow_tbt(seq, {seq.in_degree(root), seq.out_degree(root)}, k + 1, rng);
    for (int r = 0; r <= k; ++r) {
      const double x = static_cast<double>(tree.generation_size(r + 1)) / std::pow(mu, r + 1);
      sum[r] += x;
      sum_sq[r] += x * x;
    }
  }
  for (int r = 0; r <= k; ++r) {
    const double mean = sum[r] / reps;
    const double se = std::sqrt((sum_sq[r] / reps - mean * mean) / reps);
    EXPECT_NEAR(mean, 1.0, 3.0 * se) << "r = " << r;
  }
}

TEST(GrowTbt, DeterministicBySeed) {
  const BiDegreeSequence seq = reference_sequence(1000, 2);
  RandomStream a(4), b(4);
  const Tbt x = grow_tbt(seq, {4, 1}, 6, a);
  const Tbt y = grow_tbt(seq, {4, 1}, 6, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x.node(i).source, y.node(i).source);
    EXPECT_EQ(x.node(i).parent, y.node(i).parent);
  }
}

TEST(Tbt, ChildrenMustBeAddedBreadthFirst) {
  Tbt tree(npos, 2, 0);
  const auto a = tree.add_child(0, npos, 1, 0);
  tree.add_child(a, npos, 0, 0);
  EXPECT_THROW(tree.add_child(0, npos, 0, 0), std::logic_error);
  EXPECT_THROW(tree.add_child(99, npos, 0, 0), std::out_of_range);
}

TEST(TreePageRank, DepthZeroIsOne) {
  const Tbt tree = seven_node_tree({0, 0, 0, 0, 0, 0, 0});
  EXPECT_EQ(tree_pagerank(tree, 0.5, 0), 1.0);
  EXPECT_EQ(tree_pagerank(tree, 0.85, 0), 1.0);
}

TEST(TreePageRank, RootWithTwoChildren) {
  Tbt tree(npos, 2, 0);
  tree.add_child(0, npos, 0, 0);
  tree.add_child(0, npos, 0, 0);
  EXPECT_DOUBLE_EQ(tree_pagerank(tree, 0.5, 1), 1.5);
}

TEST(TreePageRank, SevenNodeTreeMatchesDenseIteration) {
  const Tbt plain = seven_node_tree({0, 0, 0, 0, 0, 0, 0});
  EXPECT_NEAR(tree_pagerank(plain, 0.5, 2), dense_tree_pagerank(plain, 0.5, 2), 1e-15);
  EXPECT_DOUBLE_EQ(tree_pagerank(plain, 0.5, 2), 2.0);
  const Tbt thorny = seven_node_tree({2, 1, 0, 2, 0, 1, 3});
  for (double c : {0.1, 0.5, 0.9}) {
    EXPECT_NEAR(tree_pagerank(thorny, c, 2), dense_tree_pagerank(thorny, c, 2), 1e-14) << c;
    EXPECT_NEAR(tree_pagerank(thorny, c, 1), dense_tree_pagerank(thorny, c, 1), 1e-14) << c;
  }
}

TEST(TreePageRank, ChainIsFixedPoint) {
  Tbt tree(npos, 1, 0);
  std::size_t last = 0;
  for (int g = 0; g < 10; ++g) last = tree.add_child(last, npos, 1, 0);
  for (double c : {0.2, 0.5, 0.95}) {
    for (int k = 0; k <= 10; ++k) EXPECT_NEAR(tree_pagerank(tree, c, k), 1.0, 1e-15);
  }
}

TEST(TreePageRank, DepthExceeded) {
  const Tbt tree = seven_node_tree({0, 0, 0, 0, 0, 0, 0});
  EXPECT_THROW(tree_pagerank(tree, 0.5, 3), DepthExceeded);
  EXPECT_THROW(tree_pagerank(tree, 1.0, 1), InvalidParameter);
  EXPECT_THROW(tree_pagerank(tree, 0.5, -1), InvalidParameter);
}

TEST(TreePageRank, LowerBoundAndMonotoneInR0) {
  const BiDegreeSequence seq = reference_sequence(2000, 9);
  RandomStream rng(12);
  for (int rep = 0; rep < 100; ++rep) {
    const Tbt tree = grow_tbt(seq, {seq.in_degree(rep), seq.out_degree(rep)}, 5, rng);
    for (double c : {0.3, 0.5, 0.8}) {
      for (int k = 1; k <= 5; ++k) {
        const double low = tree_pagerank(tree, c, k, 0.0);
        const double one = tree_pagerank(tree, c, k, 1.0);
        const double high = tree_pagerank(tree, c, k, 2.0);
        EXPECT_GE(low, 1.0 - c);
        EXPECT_LE(low, one);
        EXPECT_LE(one, high);
      }
    }
  }
}

TEST(TreePageRank, EqualsGraphIterationWhileCoupled) {
  const BiDegreeSequence seq = reference_sequence(3000, 21);
  int coupled = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomStream rng(seed);
    const int k = 5;
    const CoupledExploration ex = explore_and_couple(seq, k, rng);
    if (!ex.stats.coupled_through(k)) continue;
    ++coupled;
    PageRankConfig cfg;
    cfg.c = 0.5;
    const double graph_value = power_iterate_k(ex.graph, cfg, k).values[ex.stats.root];
    EXPECT_NEAR(tree_pagerank(ex.tree, 0.5, k), graph_value, 1e-12);
  }
  EXPECT_GT(coupled, 50);
}
