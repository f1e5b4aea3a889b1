#include "fixtures.hpp"
#include "oracles.hpp"

#include "magc/error.hpp"
#include "magc/metrics.hpp"
#include "magc/solver.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace magc;

namespace {

struct Instance {
  Matrix a;
  AttributedGraph graph;
  DerivedMatrices derived;
  Matrix x;
  Matrix c;
  Matrix xc;
};

Instance random_instance(std::mt19937_64& rng, Index p, Index k, Index n) {
  Matrix a = oracle::random_graph(rng, p, 0.4, true);
  Matrix x = oracle::random_matrix(rng, p, n);
  AttributedGraph g(oracle::sparse(a), x);
  DerivedMatrices d = build_derived(g);
  return {a, g, d, x, oracle::random_feasible(rng, p, k), oracle::random_matrix(rng, k, n)};
}

SolverConfig random_weights(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  SolverConfig cfg;
  cfg.alpha = u(rng);
  cfg.beta = u(rng);
  cfg.gamma = u(rng);
  cfg.lambda = u(rng);
  cfg.k = k;
  return cfg;
}

// Largest componentwise error relative to max(|reference|, 1e-3 * |reference|_inf).
double max_relative_error(const Matrix& value, const Matrix& reference) {
  const double floor = std::max(1e-3 * reference.cwiseAbs().maxCoeff(), 1e-12);
  return ((value - reference).array().abs() / reference.array().abs().max(floor)).maxCoeff();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no magc::Error thrown";
  return ErrorKind::IoError;
}

}  // namespace

TEST(Loss, TriangleSingleCluster) {
  const AttributedGraph g = fixture::triangle();
  const DerivedMatrices d = build_derived(g);
  const Matrix x = Matrix::Ones(3, 2);
  const LossBreakdown l = loss(Matrix::Ones(3, 1), Matrix::Constant(1, 2, 0.7), d, x, SolverConfig{});
  EXPECT_NEAR(l.modularity, 0.0, 1e-14);
  EXPECT_NEAR(l.logdet, 0.0, 1e-14);
  EXPECT_NEAR(l.smoothness, 0.0, 1e-14);
}

TEST(Loss, OnlyRelaxationAndSparsityWithoutGraphWeights) {
  std::mt19937_64 rng(2);
  const Instance in = random_instance(rng, 7, 2, 3);
  SolverConfig cfg;
  cfg.beta = cfg.gamma = 0.0;
  cfg.alpha = 1.7;
  cfg.lambda = 0.4;
  const LossBreakdown l = loss(in.c, in.xc, in.derived, in.x, cfg);
  const double relax = 0.5 * (in.c * in.xc - in.x).squaredNorm();
  const double sparsity = 0.5 * in.c.rowwise().sum().squaredNorm();
  EXPECT_NEAR(l.total, l.smoothness + 1.7 * relax + 0.4 * sparsity, 1e-10);
}

TEST(Loss, MatchesDenseOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng, 6, 2, 3);
    const SolverConfig cfg = random_weights(rng, 2);
    const LossBreakdown l = loss(in.c, in.xc, in.derived, in.x, cfg);
    const oracle::Terms t = oracle::loss(in.c, in.xc, in.a, in.x, cfg);
    EXPECT_NEAR(l.smoothness, t.smoothness, 1e-8);
    EXPECT_NEAR(l.modularity, t.modularity, 1e-8);
    EXPECT_NEAR(l.logdet, t.logdet, 1e-8);
    EXPECT_NEAR(l.relaxation, t.relaxation, 1e-8);
    EXPECT_NEAR(l.sparsity, t.sparsity, 1e-8);
    EXPECT_NEAR(l.total, t.total, 1e-8);
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = 4 + trial % 7;
    const Index k = 1 + trial % 3;
    const Instance in = random_instance(rng, p, k, 3);
    const SolverConfig cfg = random_weights(rng, static_cast<int>(k));
    const Matrix g = gradient_C(in.c, in.xc, in.derived, in.x, cfg);
    const Matrix fd = oracle::fd_gradient(
        [&](const Matrix& c) { return oracle::loss(c, in.xc, in.a, in.x, cfg).total; }, in.c);
    EXPECT_LT(max_relative_error(g, fd), 1e-5) << "trial " << trial;
  }
}

TEST(Gradient, VanishesWithoutGraphTermsAtZeroCoarseFeatures) {
  std::mt19937_64 rng(5);
  const Instance in = random_instance(rng, 6, 2, 3);
  SolverConfig cfg;
  cfg.beta = cfg.gamma = cfg.lambda = 0.0;
  const Matrix g = gradient_C(in.c, Matrix::Zero(2, 3), in.derived, in.x, cfg);
  EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, LogDetTermOnTwoTriangles) {
  // Disjoint triangles split along the components: Theta C = 0, so the term vanishes.
  const AttributedGraph g = fixture::two_triangles();
  const Matrix c = one_hot({0, 0, 0, 1, 1, 1}, 2);
  SolverConfig cfg;
  cfg.alpha = cfg.beta = cfg.lambda = 0.0;
  cfg.gamma = 1.3;
  const Matrix x = Matrix::Ones(6, 2);
  EXPECT_EQ(gradient_C(c, Matrix::Zero(2, 2), build_derived(g), x, cfg).cwiseAbs().maxCoeff(), 0.0);

  // With the bridge the coarse matrix is nonsingular and the term is checked densely.
  const AttributedGraph bridged = fixture::bridged_triangles();
  const Matrix theta = oracle::laplacian(oracle::dense(bridged.adjacency()));
  const Matrix j = Matrix::Constant(2, 2, 0.5);
  const Matrix expected = -2.0 * 1.3 * theta * c * (c.transpose() * theta * c + j).inverse();
  const Matrix got = gradient_C(c, Matrix::Zero(2, 2), build_derived(bridged), x, cfg);
  EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Lipschitz, QuadraticCaseEqualsExactHessianEigenvalue) {
  std::mt19937_64 rng(6);
  const Instance in = random_instance(rng, 5, 2, 3);
  SolverConfig cfg;
  cfg.beta = cfg.gamma = cfg.lambda = 0.0;
  cfg.alpha = 0.8;
  // The objective is quadratic in C here, so gradient differences along unit
  // directions give the Hessian exactly.
  const Index m = in.c.size();
  Matrix hessian(m, m);
  const Matrix g0 = gradient_C(in.c, in.xc, in.derived, in.x, cfg);
  for (Index idx = 0; idx < m; ++idx) {
    Matrix e = in.c;
    e(idx % 5, idx / 5) += 1.0;
    const Matrix diff = gradient_C(e, in.xc, in.derived, in.x, cfg) - g0;
    hessian.col(idx) = Eigen::Map<const Vector>(diff.data(), m);
  }
  hessian = 0.5 * (hessian + hessian.transpose()).eval();
  const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(hessian).eigenvalues().maxCoeff();
  const double bound = lipschitz_bound(in.c, in.xc, in.derived, in.x, cfg);
  EXPECT_GE(bound, lmax * (1.0 - 1e-6));
  EXPECT_NEAR(bound, lmax, 1e-4 * lmax);
}

TEST(Lipschitz, QuadraticContributionScalesWithSquare) {
  std::mt19937_64 rng(7);
  const Instance in = random_instance(rng, 8, 3, 4);
  SolverConfig cfg;
  cfg.beta = cfg.gamma = cfg.lambda = 0.0;
  const double l1 = lipschitz_bound(in.c, in.xc, in.derived, in.x, cfg);
  const double l2 = lipschitz_bound(in.c, 2.0 * in.xc, in.derived, in.x, cfg);
  EXPECT_NEAR(l2, 4.0 * l1, 1e-9 * l2);
}

TEST(Lipschitz, MajorizesNearbyFeasiblePoints) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance in = random_instance(rng, 8, 3, 3);
    const SolverConfig cfg = random_weights(rng, 3);
    const double f0 = loss(in.c, in.xc, in.derived, in.x, cfg).total;
    const Matrix g = gradient_C(in.c, in.xc, in.derived, in.x, cfg);
    const double lip = lipschitz_bound(in.c, in.xc, in.derived, in.x, cfg);
    for (int s = 0; s < 100; ++s) {
      Matrix step(in.c.rows(), in.c.cols());
      for (Index i = 0; i < step.size(); ++i) step(i) = noise(rng);
      const Matrix cp = project_feasible(in.c + 0.05 * step);
      const Matrix delta = cp - in.c;
      const double surrogate = f0 + g.cwiseProduct(delta).sum() + 0.5 * lip * delta.squaredNorm();
      EXPECT_GE(surrogate, loss(cp, in.xc, in.derived, in.x, cfg).total - 1e-8);
    }
  }
}

TEST(Projection, Examples) {
  Matrix m(3, 2);
  m << 3, 4, -1, 0.5, 0.3, 0.4;
  Matrix expected(3, 2);
  expected << 0.6, 0.8, 0, 0.5, 0.3, 0.4;
  EXPECT_TRUE(project_feasible(m).isApprox(expected, 1e-15));
}

TEST(Projection, GlobalNormalization) {
  Matrix m(2, 2);
  m << 3, 4, -1, 0;
  const Matrix out = project_feasible(m, ProjectionMode::GlobalNormalization);
  EXPECT_NEAR(out(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(out(0, 1), 0.8, 1e-15);
  EXPECT_EQ(out(1, 0), 0.0);
}

TEST(UpdateC, ZeroGradientIsAFixedPoint) {
  // k = 1, C = 1, X = 1 x^T: Theta C = 0 and C X_C = X, so every term's gradient vanishes.
  const AttributedGraph g = fixture::bridged_triangles();
  const DerivedMatrices d = build_derived(g);
  Matrix x(6, 2);
  x.rowwise() = Eigen::RowVector2d(0.3, -1.2);
  SolverConfig cfg;
  cfg.k = 1;
  cfg.beta = cfg.gamma = cfg.lambda = 0.0;
  SolverState s;
  s.c = Matrix::Ones(6, 1);
  s.xc = x.topRows(1);
  const CUpdate u = update_C(s, d, x, cfg);
  EXPECT_TRUE(u.c.isApprox(s.c, 0.0));
}

TEST(UpdateC, ManualIterationDescendsAndStaysFeasible) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance in = random_instance(rng, 12, 3, 4);
    SolverConfig cfg = random_weights(rng, 3);
    SolverState s;
    s.c = in.c;
    s.xc = update_XC(s.c, in.derived, in.x, cfg);
    double prev = loss(s.c, s.xc, in.derived, in.x, cfg).total;
    for (int t = 0; t < 30; ++t) {
      const CUpdate u = update_C(s, in.derived, in.x, cfg);
      EXPECT_LE(u.loss.total, prev + 1e-8);
      EXPECT_GE(u.c.minCoeff(), 0.0);
      EXPECT_LE(u.c.rowwise().norm().maxCoeff(), 1.0 + 1e-9);
      s.c = u.c;
      s.xc = update_XC(s.c, in.derived, in.x, cfg);
      EXPECT_LE(xc_stationarity(s.c, s.xc, in.derived, in.x, cfg.alpha), 1e-6);
      const double now = loss(s.c, s.xc, in.derived, in.x, cfg).total;
      EXPECT_LE(now, u.loss.total + 1e-8);
      prev = now;
    }
  }
}

TEST(UpdateXC, ClusterMeansWhenNoEdgeIsCut) {
  std::mt19937_64 rng(10);
  const AttributedGraph g = fixture::two_triangles();
  const DerivedMatrices d = build_derived(g);
  const Matrix x = oracle::random_matrix(rng, 6, 3);
  const Matrix c = one_hot({0, 0, 0, 1, 1, 1}, 2);
  const Matrix xc = update_XC(c, d, x, SolverConfig{});
  EXPECT_LT((xc.row(0) - x.topRows(3).colwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((xc.row(1) - x.bottomRows(3).colwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UpdateXC, IdentityWithoutEdges) {
  std::mt19937_64 rng(11);
  DerivedMatrices d;
  d.laplacian = SparseMatrix(5, 5);
  d.degree = Vector::Zero(5);
  const Matrix x = oracle::random_matrix(rng, 5, 2);
  EXPECT_LT((update_XC(Matrix::Identity(5, 5), d, x, SolverConfig{}) - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UpdateXC, MatchesDenseSolve) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance in = random_instance(rng, 8, 3, 4);
    SolverConfig cfg;
    cfg.alpha = 0.7;
    const Matrix theta = oracle::laplacian(in.a);
    const Matrix system = (2.0 / 0.7) * in.c.transpose() * theta * in.c + in.c.transpose() * in.c;
    const Matrix expected = system.fullPivLu().solve(in.c.transpose() * in.x);
    const Matrix got = update_XC(in.c, in.derived, in.x, cfg);
    EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(xc_stationarity(in.c, got, in.derived, in.x, cfg.alpha), 1e-6);
  }
}

TEST(UpdateXC, EmptyClusterIsSingular) {
  const DerivedMatrices d = build_derived(fixture::two_triangles());
  Matrix c = one_hot({0, 0, 0, 0, 0, 0}, 2);
  EXPECT_EQ(kind_of([&] { update_XC(c, d, Matrix::Ones(6, 2), SolverConfig{}); }), ErrorKind::SingularSystem);
}

TEST(UpdateXC, ZeroAlphaGivesZero) {
  const DerivedMatrices d = build_derived(fixture::two_triangles());
  SolverConfig cfg;
  cfg.alpha = 0.0;
  EXPECT_EQ(update_XC(Matrix::Ones(6, 2), d, Matrix::Ones(6, 3), cfg).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HardAssignments, ArgmaxWithLowestIndexTies) {
  Matrix c(3, 2);
  c << 0.2, 0.8, 0.9, 0.1, 0.5, 0.5;
  EXPECT_EQ(hard_assignments(c), (Labels{1, 0, 0}));
  const Labels part{2, 0, 1, 1, 2};
  EXPECT_EQ(hard_assignments(one_hot(part, 3)), part);
}

TEST(Solve, TwoCliquesArePerfectlySeparated) {
  const AttributedGraph g = fixture::two_cliques(5);
  const AttributedGraph attributed = g.with_features(Matrix::Ones(10, 1));
  SolverConfig cfg;
  cfg.k = 2;
  cfg.gamma = 0.0;  // log det(C^T Theta C + J) is singular at a split along components
  cfg.init = InitPolicy::DegreeSeeded;
  const SolveResult r = solve(attributed, cfg);
  EXPECT_DOUBLE_EQ(nmi({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, r.labels), 1.0);
}

TEST(Solve, TwoTrianglesMatchBruteForcePartition) {
  const AttributedGraph g = fixture::two_triangles().with_features(Matrix::Ones(6, 1));
  const DerivedMatrices d = build_derived(g);
  SolverConfig cfg;
  cfg.k = 2;
  cfg.gamma = 0.0;  // see TwoCliquesArePerfectlySeparated
  cfg.init = InitPolicy::DegreeSeeded;
  // Every proper 2-partition, scored at its optimal X_C.
  double best = std::numeric_limits<double>::infinity();
  Labels best_labels;
  for (int mask = 1; mask < (1 << 6) - 1; ++mask) {
    if (mask & 1) continue;  // fix node 0 in cluster 0
    Labels l(6);
    for (int i = 0; i < 6; ++i) l[static_cast<std::size_t>(i)] = (mask >> i) & 1;
    const Matrix c = one_hot(l, 2);
    const double f = loss(c, update_XC(c, d, g.features(), cfg), d, g.features(), cfg).total;
    if (f < best) {
      best = f;
      best_labels = l;
    }
  }
  EXPECT_EQ(best_labels, (Labels{0, 0, 0, 1, 1, 1}));
  const SolveResult r = solve(g, d, cfg);
  EXPECT_DOUBLE_EQ(nmi(best_labels, r.labels), 1.0);
}

TEST(Solve, TraceIsMonotoneAndStationary) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Index p = 20;
    Matrix a = oracle::random_graph(rng, p, 0.2, true);
    const AttributedGraph g(oracle::sparse(a), oracle::random_matrix(rng, p, 3));
    SolverConfig cfg = random_weights(rng, 3);
    cfg.rel_tol = 1e-10;
    cfg.max_iters = 20000;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const SolveResult r = solve(g, cfg);
    const auto& trace = r.state.loss_trace;
    for (std::size_t t = 1; t < trace.size(); ++t) {
      EXPECT_LE(trace[t].loss.total, trace[t - 1].loss.total + 1e-8);
      EXPECT_LE(trace[t].xc_stationarity, 1e-6);
    }
    EXPECT_GE(r.state.c.minCoeff(), 0.0);
    EXPECT_LE(r.state.c.rowwise().norm().maxCoeff(), 1.0 + 1e-9);
    EXPECT_LT(r.kkt_residual, 1e-4) << "trial " << trial;
  }
}

TEST(Solve, RequiresFeatures) {
  EXPECT_EQ(kind_of([] { solve(fixture::two_triangles(), SolverConfig{}); }), ErrorKind::InvalidConfig);
}

TEST(Solve, RejectsInvalidConfig) {
  const AttributedGraph g = fixture::two_triangles().with_features(Matrix::Ones(6, 1));
  SolverConfig cfg;
  cfg.k = 7;
  EXPECT_EQ(kind_of([&] { solve(g, cfg); }), ErrorKind::InvalidConfig);
  cfg.k = 2;
  cfg.beta = -1.0;
  EXPECT_EQ(kind_of([&] { solve(g, cfg); }), ErrorKind::InvalidConfig);
  cfg.beta = 1.0;
  cfg.rel_tol = 0.0;
  EXPECT_EQ(kind_of([&] { solve(g, cfg); }), ErrorKind::InvalidConfig);
}

TEST(Solve, DeterministicForFixedSeed) {
  std::mt19937_64 rng(14);
  const Matrix a = oracle::random_graph(rng, 30, 0.2, false);
  const AttributedGraph g(oracle::sparse(a), oracle::random_matrix(rng, 30, 4));
  SolverConfig cfg;
  cfg.k = 3;
  cfg.seed = 99;
  const SolveResult r1 = solve(g, cfg);
  const SolveResult r2 = solve(g, cfg);
  EXPECT_TRUE(r1.state.c.cwiseEqual(r2.state.c).all());
  EXPECT_EQ(r1.labels, r2.labels);
}

TEST(Solve, PermutationEquivariance) {
  // Two noisy planted communities; the permuted problem starts from the permuted
  // initial point and must return the permuted labels.
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Index p = 24;
  Matrix a = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      if (u(rng) < ((i < 12) == (j < 12) ? 0.6 : 0.05)) a(i, j) = a(j, i) = 1.0;
  Matrix x = oracle::random_matrix(rng, p, 3);
  SolverConfig cfg;
  cfg.k = 2;
  cfg.seed = 4;
  const AttributedGraph g(oracle::sparse(a), x);
  const Matrix c0 = initial_assignment(build_derived(g), cfg);
  const SolveResult base = solve(g, cfg, SolveOptions{c0, {}});

  std::vector<Index> perm(static_cast<std::size_t>(p));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> pm(p);
  for (Index i = 0; i < p; ++i) pm.indices()(i) = static_cast<int>(perm[static_cast<std::size_t>(i)]);
  // Node i of the original becomes node perm[i].
  const Matrix ap = pm * a * pm.transpose();
  const AttributedGraph gp(oracle::sparse(ap), Matrix(pm * x));
  const SolveResult permuted = solve(gp, cfg, SolveOptions{Matrix(pm * c0), {}});
  for (Index i = 0; i < p; ++i) {
    EXPECT_EQ(permuted.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])],
              base.labels[static_cast<std::size_t>(i)]);
  }
}

TEST(KktResidual, FixedPointAndFarPoint) {
  const AttributedGraph g = fixture::bridged_triangles();
  const DerivedMatrices d = build_derived(g);
  Matrix x(6, 2);
  x.rowwise() = Eigen::RowVector2d(1.0, 2.0);
  SolverConfig cfg;
  cfg.k = 1;
  cfg.beta = cfg.gamma = cfg.lambda = 0.0;
  SolverState s;
  s.c = Matrix::Ones(6, 1);
  s.xc = x.topRows(1);
  EXPECT_EQ(kkt_residual(s, d, x, cfg), 0.0);

  std::mt19937_64 rng(16);
  const Instance in = random_instance(rng, 10, 3, 3);
  SolverConfig full = random_weights(rng, 3);
  SolverState far;
  far.c = in.c;
  far.xc = in.xc;
  EXPECT_GT(kkt_residual(far, in.derived, in.x, full), 1e-2);
}

TEST(InitialAssignment, FeasibleForBothPolicies) {
  std::mt19937_64 rng(17);
  const Matrix a = oracle::random_graph(rng, 40, 0.1, false);
  const DerivedMatrices d = build_derived(AttributedGraph(oracle::sparse(a)));
  for (InitPolicy init : {InitPolicy::RandomUniform, InitPolicy::DegreeSeeded}) {
    SolverConfig cfg;
    cfg.k = 4;
    cfg.init = init;
    const Matrix c = initial_assignment(d, cfg);
    EXPECT_GE(c.minCoeff(), 0.0);
    EXPECT_NEAR(c.rowwise().norm().maxCoeff(), 1.0, 1e-12);
    EXPECT_NEAR(c.rowwise().norm().minCoeff(), 1.0, 1e-12);
  }
}

TEST(Config, ParseNames) {
  EXPECT_EQ(parse_step_policy("analytic-bound"), StepPolicy::AnalyticBound);
  EXPECT_EQ(parse_init_policy("degree-seeded"), InitPolicy::DegreeSeeded);
  EXPECT_EQ(parse_projection_mode("global-normalization"), ProjectionMode::GlobalNormalization);
  EXPECT_EQ(kind_of([] { parse_step_policy("newton"); }), ErrorKind::InvalidConfig);
}
