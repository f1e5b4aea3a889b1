#include "fixtures.hpp"
#include "oracles.hpp"

#include "magc/error.hpp"
#include "magc/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace magc;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no magc::Error thrown";
  return ErrorKind::IoError;
}

Labels relabel(const Labels& l, const std::vector<int>& map) {
  Labels out(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) out[i] = map[static_cast<std::size_t>(l[i])];
  return out;
}

}  // namespace

TEST(Nmi, Examples) {
  EXPECT_DOUBLE_EQ(nmi({0, 0, 1, 1, 2}, {2, 2, 0, 0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(nmi({0, 0, 1, 1, 2}, {5, 5, 5, 5, 5}), 0.0);
  EXPECT_EQ(kind_of([] { nmi({0, 1}, {0}); }), ErrorKind::LengthMismatch);
}

TEST(Ari, Examples) {
  EXPECT_DOUBLE_EQ(ari({0, 0, 1, 1}, {0, 0, 1, 1}), 1.0);
  EXPECT_NEAR(ari({0, 0, 1, 1}, {0, 1, 0, 1}), -0.5, 1e-15);
  EXPECT_EQ(kind_of([] { ari({0, 1}, {0}); }), ErrorKind::LengthMismatch);
}

TEST(Accuracy, Examples) {
  EXPECT_DOUBLE_EQ(accuracy({0, 0, 1, 1}, {1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy({0, 0, 1, 1}, {0, 1, 0, 1}), 0.5);
  EXPECT_EQ(kind_of([] { accuracy({0, 1}, {0}); }), ErrorKind::LengthMismatch);
}

TEST(Accuracy, ExtraPureClusterMatchesEnumeration) {
  // 5 predicted clusters against 3 classes; cluster 4 is pure.
  const Labels truth{0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 0, 1};
  const Labels pred{0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 4, 4};
  const Labels pred_pure{0, 0, 1, 1, 2, 2, 3, 3, 3, 4, 4, 4};
  EXPECT_NEAR(accuracy(truth, pred), oracle::accuracy(truth, pred), 1e-12);
  EXPECT_NEAR(accuracy(truth, pred_pure), oracle::accuracy(truth, pred_pure), 1e-12);
  EXPECT_EQ(contingency_table(truth, pred).rows(), 3);
  EXPECT_EQ(contingency_table(truth, pred).cols(), 5);
}

TEST(MaxWeightAssignment, MatchesEnumerationOnRandomTables) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> w(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    const Index rows = 1 + trial % 5, cols = 1 + (trial / 5) % 5;
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m(i) = w(rng);
    const auto assignment = max_weight_assignment(m);
    double got = 0;
    std::vector<bool> used(static_cast<std::size_t>(cols), false);
    for (Index r = 0; r < rows; ++r) {
      const int c = assignment[static_cast<std::size_t>(r)];
      if (c < 0) continue;
      ASSERT_FALSE(used[static_cast<std::size_t>(c)]);
      used[static_cast<std::size_t>(c)] = true;
      got += m(r, c);
    }
    // Enumerate every injective partial map rows -> columns.
    double best = 0;
    std::function<void(Index, double)> rec = [&](Index r, double acc) {
      if (r == rows) {
        best = std::max(best, acc);
        return;
      }
      rec(r + 1, acc);
      for (Index c = 0; c < cols; ++c) {
        if (used[static_cast<std::size_t>(c)]) continue;
        used[static_cast<std::size_t>(c)] = true;
        rec(r + 1, acc + m(r, c));
        used[static_cast<std::size_t>(c)] = false;
      }
    };
    std::fill(used.begin(), used.end(), false);
    rec(0, 0.0);
    EXPECT_DOUBLE_EQ(got, best);
  }
}

TEST(LabelMetrics, MatchBruteForceOracles) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> size(2, 15), classes(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(size(rng));
    const Labels a = oracle::random_labels(rng, n, classes(rng));
    const Labels b = oracle::random_labels(rng, n, classes(rng));
    EXPECT_NEAR(nmi(a, b), oracle::nmi(a, b), 1e-10);
    EXPECT_NEAR(ari(a, b), oracle::ari(a, b), 1e-10);
    EXPECT_NEAR(accuracy(a, b), oracle::accuracy(a, b), 1e-10);
  }
}

TEST(LabelMetrics, InvariantUnderRelabeling) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Labels a = oracle::random_labels(rng, 14, 3);
    const Labels b = oracle::random_labels(rng, 14, 4);
    std::vector<int> map{7, 2, 9, 0};
    std::shuffle(map.begin(), map.end(), rng);
    const Labels b2 = relabel(b, map);
    EXPECT_NEAR(nmi(a, b), nmi(a, b2), 1e-12);
    EXPECT_NEAR(ari(a, b), ari(a, b2), 1e-12);
    EXPECT_NEAR(accuracy(a, b), accuracy(a, b2), 1e-12);
    EXPECT_NEAR(ari(a, b), ari(b, a), 1e-12);
  }
}

TEST(Modularity, Examples) {
  const AttributedGraph tri = fixture::triangle();
  EXPECT_NEAR(modularity_score(tri, {0, 0, 0}), 0.0, 1e-15);
  EXPECT_NEAR(modularity_score(tri, {0, 1, 2}), -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(modularity_score(fixture::two_triangles(), {0, 0, 0, 1, 1, 1}), 0.5, 1e-15);
  EXPECT_EQ(kind_of([] { modularity_score(AttributedGraph(SparseMatrix(3, 3)), {0, 0, 1}); }),
            ErrorKind::EmptyGraph);
}

TEST(Modularity, DoubleLoopEqualsTraceFormOnRandomGraphs) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Index p = 2 + trial % 29;
    const Matrix a = oracle::random_graph(rng, p, 0.3, trial % 2 == 1);
    const AttributedGraph g(oracle::sparse(a));
    const DerivedMatrices d = build_derived(g);
    const Labels l = oracle::random_labels(rng, static_cast<std::size_t>(p), 1 + trial % 5);
    const double brute = oracle::modularity(a, l);
    EXPECT_NEAR(modularity_trace_form(d, l), brute, 1e-9);
    EXPECT_NEAR(modularity_score(g, l), brute, 1e-9);
    EXPECT_GE(brute, -1.0);
    EXPECT_LE(brute, 1.0);
  }
}

TEST(Conductance, Examples) {
  EXPECT_DOUBLE_EQ(conductance(fixture::two_triangles(), {0, 0, 0, 1, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(conductance(fixture::cycle4(), {0, 0, 1, 1}), 0.5);
  EXPECT_EQ(kind_of([] { conductance(fixture::cycle4(), {0, 0, 0, 0}); }), ErrorKind::ZeroVolumeCluster);
}

TEST(Evaluate, FillsEverything) {
  const Evaluation e = evaluate({0, 0, 0, 1, 1, 1}, {1, 1, 1, 0, 0, 0}, nullptr);
  EXPECT_DOUBLE_EQ(e.nmi, 1.0);
  EXPECT_DOUBLE_EQ(e.ari, 1.0);
  EXPECT_DOUBLE_EQ(e.acc, 1.0);
  EXPECT_FALSE(e.modularity.has_value());
  EXPECT_EQ(e.contingency.sum(), 6);

  const AttributedGraph g = fixture::two_triangles();
  const Evaluation eg = evaluate({0, 0, 0, 1, 1, 1}, {0, 0, 0, 1, 1, 1}, &g);
  ASSERT_TRUE(eg.modularity && eg.conductance);
  EXPECT_NEAR(*eg.modularity, 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(*eg.conductance, 0.0);

  const Evaluation single = evaluate({0, 0, 0, 1, 1, 1}, {0, 0, 0, 0, 0, 0}, &g);
  EXPECT_TRUE(single.modularity.has_value());
  EXPECT_FALSE(single.conductance.has_value());
}
