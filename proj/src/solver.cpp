#include "magc/solver.hpp"

#include "magc/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace magc {

namespace {

constexpr std::string_view kModule = "solver";
constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

// Cholesky factor of C^T Theta C + J with diagonal jitter escalation.
struct CoarseFactor {
  Eigen::LLT<Matrix> llt;
  double logdet = 0.0;
};

CoarseFactor factor_coarse(const Matrix& theta_c) {
  const Index k = theta_c.rows();
  Matrix m = theta_c;
  m.array() += 1.0 / static_cast<double>(k);
  CoarseFactor f;
  for (double jitter : kJitterLadder) {
    Matrix shifted = m;
    shifted.diagonal().array() += jitter;
    f.llt.compute(shifted);
    if (f.llt.info() != Eigen::Success) continue;
    const Vector diag = f.llt.matrixLLT().diagonal();
    if (!(diag.array() > 0.0).all() || !diag.allFinite()) continue;
    f.logdet = 2.0 * diag.array().log().sum();
    return f;
  }
  throw Error(ErrorKind::SingularCoarseLaplacian, kModule,
              "C^T Theta C + J is not positive definite");
}

void check_dims(const Matrix& c, const Matrix& xc, const DerivedMatrices& derived,
                const Matrix& x) {
  const Index p = derived.node_count();
  if (c.rows() != p || x.rows() != p || xc.rows() != c.cols() || xc.cols() != x.cols() ||
      c.cols() < 1) {
    std::ostringstream msg;
    msg << "inconsistent shapes: C " << c.rows() << "x" << c.cols() << ", X_C " << xc.rows()
        << "x" << xc.cols() << ", X " << x.rows() << "x" << x.cols() << ", p = " << p;
    throw Error(ErrorKind::DimensionMismatch, kModule, msg.str());
  }
}

// Evaluates loss and gradient in C for a fixed X_C, caching X_C X_C^T and X X_C^T.
class Evaluator {
 public:
  Evaluator(const DerivedMatrices& derived, const Matrix& x, const SolverConfig& cfg)
      : derived_(derived), x_(x), cfg_(cfg), x_sq_norm_(x.squaredNorm()) {}

  void set_xc(const Matrix& xc) {
    xc_ = xc;
    gram_.noalias() = xc * xc.transpose();
    cross_.resize(x_.rows(), xc.rows());
    cross_.noalias() = x_ * xc.transpose();
  }

  const Matrix& xc() const { return xc_; }
  const Matrix& gram() const { return gram_; }

  LossBreakdown loss(const Matrix& c) const {
    LossBreakdown out;
    const Matrix theta_c = coarsened_laplacian(c, derived_.laplacian);
    out.smoothness = theta_c.cwiseProduct(gram_).sum();
    out.modularity = modularity_trace(derived_, c);
    out.logdet = factor_coarse(theta_c).logdet;
    const Matrix ctc = c.transpose() * c;
    out.relaxation =
        std::max(0.0, 0.5 * (x_sq_norm_ - 2.0 * c.cwiseProduct(cross_).sum() +
                             ctc.cwiseProduct(gram_).sum()));
    out.sparsity = 0.5 * c.rowwise().sum().squaredNorm();
    out.total = weighted_total(out);
    return out;
  }

  double weighted_total(const LossBreakdown& l) const {
    return l.smoothness + cfg_.alpha * l.relaxation - cfg_.beta / derived_.two_e * l.modularity -
           cfg_.gamma * l.logdet + cfg_.lambda * l.sparsity;
  }

  Matrix gradient(const Matrix& c) const {
    const Matrix theta_times_c = derived_.laplacian * c;
    Matrix g(c.rows(), c.cols());
    g.noalias() = 2.0 * theta_times_c * gram_;
    if (cfg_.alpha != 0.0) {
      g.noalias() += cfg_.alpha * (c * gram_);
      g.noalias() -= cfg_.alpha * cross_;
    }
    if (cfg_.beta != 0.0) {
      g.noalias() -= (2.0 * cfg_.beta / derived_.two_e) * modularity_product(derived_, c);
    }
    if (cfg_.gamma != 0.0) {
      Matrix theta_c(c.cols(), c.cols());
      theta_c.noalias() = c.transpose() * theta_times_c;
      theta_c = 0.5 * (theta_c + theta_c.transpose()).eval();
      const CoarseFactor f = factor_coarse(theta_c);
      const Matrix inv = f.llt.solve(Matrix::Identity(c.cols(), c.cols()));
      g.noalias() -= 2.0 * cfg_.gamma * theta_times_c * inv;
    }
    if (cfg_.lambda != 0.0) {
      const Vector row_sums = c.rowwise().sum();
      g.colwise() += cfg_.lambda * row_sums;
    }
    return g;
  }

  double lipschitz(const Matrix& c) const {
    const double gram_norm =
        gram_.size() == 0
            ? 0.0
            : std::max(0.0, Eigen::SelfAdjointEigenSolver<Matrix>(gram_, Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .maxCoeff());
    double bound = 2.0 * derived_.laplacian_norm * gram_norm + cfg_.alpha * gram_norm +
                   2.0 * cfg_.beta / derived_.two_e * derived_.modularity_norm +
                   cfg_.lambda * static_cast<double>(c.cols());
    if (cfg_.gamma != 0.0) bound += cfg_.gamma * logdet_curvature(c);
    if (!std::isfinite(bound) || bound <= 0.0) bound = 1.0;
    return bound;
  }

 private:
  // Bound on the second directional derivative of -log det(C^T Theta C + J) at C:
  // 4 |Theta C|^2 / mu^2 + 2 |Theta| / mu with mu the smallest eigenvalue.
  double logdet_curvature(const Matrix& c) const {
    constexpr double kDegenerate = 1e12;
    const Matrix theta_times_c = derived_.laplacian * c;
    Matrix theta_c = c.transpose() * theta_times_c;
    theta_c = 0.5 * (theta_c + theta_c.transpose()).eval();
    theta_c.array() += 1.0 / static_cast<double>(c.cols());
    const double mu = Eigen::SelfAdjointEigenSolver<Matrix>(theta_c, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
    if (!(mu > 0.0)) return kDegenerate;
    const Matrix tc_gram = theta_times_c.transpose() * theta_times_c;
    const double tc_norm_sq =
        Eigen::SelfAdjointEigenSolver<Matrix>(tc_gram, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff();
    const double curvature = 4.0 * std::max(0.0, tc_norm_sq) / (mu * mu) +
                             2.0 * derived_.laplacian_norm / mu;
    return std::isfinite(curvature) ? std::min(curvature, kDegenerate) : kDegenerate;
  }

  const DerivedMatrices& derived_;
  const Matrix& x_;
  const SolverConfig& cfg_;
  double x_sq_norm_;
  Matrix xc_;
  Matrix gram_;
  Matrix cross_;
};

std::optional<LossBreakdown> try_loss(const Evaluator& ev, const Matrix& c) {
  try {
    return ev.loss(c);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SingularCoarseLaplacian) return std::nullopt;
    throw;
  }
}

CUpdate step_c(const Evaluator& ev, const Matrix& c, const LossBreakdown& current,
               const SolverConfig& cfg) {
  const Matrix g = ev.gradient(c);
  const double bound = ev.lipschitz(c);
  CUpdate out;
  if (cfg.step_policy == StepPolicy::AnalyticBound) {
    out.c = project_feasible(c - g / bound, cfg.projection);
    out.step_L = bound;
    out.evaluations = 1;
    auto l = try_loss(ev, out.c);
    if (!l) throw Error(ErrorKind::SingularCoarseLaplacian, kModule, "step left the PD region");
    out.loss = *l;
    return out;
  }

  constexpr int kMaxTrials = 60;
  double lip = bound / 16.0;
  for (int trial = 0; trial < kMaxTrials; ++trial) {
    Matrix candidate = project_feasible(c - g / lip, cfg.projection);
    ++out.evaluations;
    if (auto l = try_loss(ev, candidate)) {
      const Matrix delta = candidate - c;
      const double surrogate =
          current.total + g.cwiseProduct(delta).sum() + 0.5 * lip * delta.squaredNorm();
      if (l->total <= surrogate && l->total <= current.total) {
        out.c = std::move(candidate);
        out.step_L = lip;
        out.loss = *l;
        return out;
      }
    }
    lip /= cfg.backtracking_shrink;
  }
  // No acceptable step at any tested curvature: C is numerically stationary.
  out.c = c;
  out.step_L = lip;
  out.loss = current;
  return out;
}

// Columns of C that carry no mass make the X_C system singular.
std::vector<Index> empty_columns(const Matrix& c) {
  std::vector<Index> cols;
  for (Index j = 0; j < c.cols(); ++j) {
    if (c.col(j).cwiseAbs().maxCoeff() <= 1e-12) cols.push_back(j);
  }
  return cols;
}

// Moves each empty column onto the node with the worst reconstruction residual.
int reseed_empty_columns(Matrix& c, const Matrix& xc, const Matrix& x) {
  const std::vector<Index> cols = empty_columns(c);
  if (cols.empty()) return 0;
  Vector residual;
  if (x.cols() > 0 && xc.rows() == c.cols() && xc.cols() == x.cols()) {
    residual = (x - c * xc).rowwise().squaredNorm();
  } else {
    residual = (Vector::Ones(c.rows()) - c.rowwise().squaredNorm()).cwiseMax(0.0);
  }
  std::vector<bool> used(static_cast<std::size_t>(c.rows()), false);
  for (Index j : cols) {
    Index best = -1;
    for (Index i = 0; i < c.rows(); ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || residual(i) > residual(best)) best = i;
    }
    if (best < 0) break;
    used[static_cast<std::size_t>(best)] = true;
    c.row(best).setZero();
    c(best, j) = 1.0;
  }
  return static_cast<int>(cols.size());
}

void require_finite(const Matrix& m, std::string_view what, int iteration) {
  if (!m.allFinite()) {
    std::ostringstream msg;
    msg << what << " contains NaN/Inf at iteration " << iteration;
    throw Error(ErrorKind::NonFinite, kModule, msg.str());
  }
}

}  // namespace

std::string_view to_string(StepPolicy policy) noexcept {
  return policy == StepPolicy::AnalyticBound ? "analytic-bound" : "backtracking";
}

std::string_view to_string(InitPolicy policy) noexcept {
  return policy == InitPolicy::RandomUniform ? "random-uniform" : "degree-seeded";
}

std::string_view to_string(ProjectionMode mode) noexcept {
  return mode == ProjectionMode::PerRow ? "per-row" : "global-normalization";
}

StepPolicy parse_step_policy(std::string_view text) {
  if (text == "analytic-bound" || text == "analytic") return StepPolicy::AnalyticBound;
  if (text == "backtracking") return StepPolicy::Backtracking;
  throw Error(ErrorKind::InvalidConfig, kModule, "unknown step policy '" + std::string(text) + "'");
}

InitPolicy parse_init_policy(std::string_view text) {
  if (text == "random-uniform" || text == "random") return InitPolicy::RandomUniform;
  if (text == "degree-seeded" || text == "degree") return InitPolicy::DegreeSeeded;
  throw Error(ErrorKind::InvalidConfig, kModule, "unknown init policy '" + std::string(text) + "'");
}

ProjectionMode parse_projection_mode(std::string_view text) {
  if (text == "per-row") return ProjectionMode::PerRow;
  if (text == "global-normalization") return ProjectionMode::GlobalNormalization;
  throw Error(ErrorKind::InvalidConfig, kModule, "unknown projection '" + std::string(text) + "'");
}

void SolverConfig::validate(Index node_count) const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, kModule, what);
  };
  for (auto [name, value] : {std::pair{"alpha", alpha}, std::pair{"beta", beta},
                             std::pair{"gamma", gamma}, std::pair{"lambda", lambda}}) {
    if (!std::isfinite(value) || value < 0.0) {
      fail(std::string(name) + " must be finite and >= 0");
    }
  }
  if (k < 1) fail("k must be >= 1");
  if (k > node_count) fail("k must not exceed the node count");
  if (max_iters < 1) fail("max_iters must be positive");
  if (!(rel_tol > 0.0)) fail("rel_tol must be > 0");
  if (!(backtracking_shrink > 0.0 && backtracking_shrink < 1.0)) {
    fail("backtracking_shrink must lie in (0, 1)");
  }
}

LossBreakdown loss(const Matrix& c, const Matrix& xc, const DerivedMatrices& derived,
                   const Matrix& x, const SolverConfig& cfg) {
  check_dims(c, xc, derived, x);
  Evaluator ev(derived, x, cfg);
  ev.set_xc(xc);
  return ev.loss(c);
}

Matrix gradient_C(const Matrix& c, const Matrix& xc, const DerivedMatrices& derived,
                  const Matrix& x, const SolverConfig& cfg) {
  check_dims(c, xc, derived, x);
  Evaluator ev(derived, x, cfg);
  ev.set_xc(xc);
  return ev.gradient(c);
}

double lipschitz_bound(const Matrix& c, const Matrix& xc, const DerivedMatrices& derived,
                       const Matrix& x, const SolverConfig& cfg) {
  check_dims(c, xc, derived, x);
  Evaluator ev(derived, x, cfg);
  ev.set_xc(xc);
  return ev.lipschitz(c);
}

Matrix project_feasible(const Matrix& m, ProjectionMode mode) {
  Matrix out = m.cwiseMax(0.0);
  if (mode == ProjectionMode::GlobalNormalization) {
    const double total = out.rowwise().norm().sum();
    if (total > 0.0) out /= total;
    return out;
  }
  for (Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 1.0) out.row(i) /= norm;
  }
  return out;
}

CUpdate update_C(const SolverState& state, const DerivedMatrices& derived, const Matrix& x,
                 const SolverConfig& cfg) {
  check_dims(state.c, state.xc, derived, x);
  Evaluator ev(derived, x, cfg);
  ev.set_xc(state.xc);
  return step_c(ev, state.c, ev.loss(state.c), cfg);
}

Matrix update_XC(const Matrix& c, const DerivedMatrices& derived, const Matrix& x,
                 const SolverConfig& cfg) {
  if (c.rows() != derived.node_count() || x.rows() != c.rows()) {
    throw Error(ErrorKind::DimensionMismatch, kModule, "update_XC: row counts differ");
  }
  const Index k = c.cols();
  if (cfg.alpha == 0.0) return Matrix::Zero(k, x.cols());
  if (!empty_columns(c).empty()) {
    throw Error(ErrorKind::SingularSystem, kModule, "empty cluster (zero column in C)");
  }
  Matrix system = (2.0 / cfg.alpha) * coarsened_laplacian(c, derived.laplacian);
  system.noalias() += c.transpose() * c;
  Eigen::LDLT<Matrix> ldlt(system);
  const double max_pivot = ldlt.vectorD().cwiseAbs().maxCoeff();
  const double min_pivot = ldlt.vectorD().minCoeff();
  if (ldlt.info() != Eigen::Success || !(min_pivot > 1e-13 * max_pivot)) {
    throw Error(ErrorKind::SingularSystem, kModule, "X_C system is numerically singular");
  }
  Matrix rhs(k, x.cols());
  rhs.noalias() = c.transpose() * x;
  return ldlt.solve(rhs);
}

double xc_stationarity(const Matrix& c, const Matrix& xc, const DerivedMatrices& derived,
                       const Matrix& x, double alpha) {
  const Matrix ctx = c.transpose() * x;
  if (alpha == 0.0) return 0.0;
  const Matrix grad = 2.0 * coarsened_laplacian(c, derived.laplacian) * xc +
                      alpha * ((c.transpose() * c) * xc - ctx);
  return grad.norm() / (1.0 + ctx.norm());
}

Matrix initial_assignment(const DerivedMatrices& derived, const SolverConfig& cfg) {
  const Index p = derived.node_count();
  const Index k = cfg.k;
  Matrix c(p, k);
  if (cfg.init == InitPolicy::RandomUniform) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < k; ++j) c(i, j) = unif(rng);
    }
    for (Index i = 0; i < p; ++i) {
      const double norm = c.row(i).norm();
      if (norm > 0.0) c.row(i) /= norm;
    }
    return c;
  }

  // Degree-seeded: anchors in descending degree order, skipping neighbours of
  // existing anchors while enough candidates remain.
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return derived.degree(a) > derived.degree(b); });
  std::vector<bool> blocked(static_cast<std::size_t>(p), false);
  std::vector<bool> chosen(static_cast<std::size_t>(p), false);
  std::vector<Index> anchors;
  for (Index node : order) {
    if (static_cast<Index>(anchors.size()) == k) break;
    if (blocked[static_cast<std::size_t>(node)]) continue;
    anchors.push_back(node);
    chosen[static_cast<std::size_t>(node)] = true;
    blocked[static_cast<std::size_t>(node)] = true;
    for (SparseMatrix::InnerIterator it(derived.adjacency, node); it; ++it) {
      blocked[static_cast<std::size_t>(it.row())] = true;
    }
  }
  for (Index node : order) {
    if (static_cast<Index>(anchors.size()) == k) break;
    if (!chosen[static_cast<std::size_t>(node)]) {
      anchors.push_back(node);
      chosen[static_cast<std::size_t>(node)] = true;
    }
  }

  constexpr double kFloor = 1e-3;
  c.setConstant(kFloor);
  std::vector<int> hops(static_cast<std::size_t>(p));
  for (Index j = 0; j < k; ++j) {
    std::fill(hops.begin(), hops.end(), -1);
    std::deque<Index> queue{anchors[static_cast<std::size_t>(j)]};
    hops[static_cast<std::size_t>(queue.front())] = 0;
    while (!queue.empty()) {
      const Index u = queue.front();
      queue.pop_front();
      for (SparseMatrix::InnerIterator it(derived.adjacency, u); it; ++it) {
        auto& h = hops[static_cast<std::size_t>(it.row())];
        if (h < 0) {
          h = hops[static_cast<std::size_t>(u)] + 1;
          queue.push_back(it.row());
        }
      }
    }
    for (Index i = 0; i < p; ++i) {
      const int h = hops[static_cast<std::size_t>(i)];
      if (h >= 0) c(i, j) += 1.0 / (1.0 + h);
    }
  }
  for (Index j = 0; j < k; ++j) {
    const Index a = anchors[static_cast<std::size_t>(j)];
    c.row(a).setZero();
    c(a, j) = 1.0;
  }
  for (Index i = 0; i < p; ++i) c.row(i) /= c.row(i).norm();
  return c;
}

Labels hard_assignments(const Matrix& c) {
  Labels labels(static_cast<std::size_t>(c.rows()), 0);
  for (Index i = 0; i < c.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < c.cols(); ++j) {
      if (c(i, j) > c(i, best)) best = j;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

double kkt_residual(const SolverState& state, const DerivedMatrices& derived, const Matrix& x,
                    const SolverConfig& cfg) {
  check_dims(state.c, state.xc, derived, x);
  Evaluator ev(derived, x, cfg);
  ev.set_xc(state.xc);
  const double lip = state.step_L > 0.0 ? state.step_L : ev.lipschitz(state.c);
  const Matrix g = ev.gradient(state.c);
  const double denom = state.c.norm();
  if (denom == 0.0) return 0.0;
  return (state.c - project_feasible(state.c - g / lip, cfg.projection)).norm() / denom;
}

SolveResult solve(const AttributedGraph& graph, const SolverConfig& cfg,
                  const SolveOptions& options) {
  return solve(graph, build_derived(graph, options.derived), cfg, options);
}

SolveResult solve(const AttributedGraph& graph, const DerivedMatrices& derived,
                  const SolverConfig& cfg, const SolveOptions& options) {
  const Index p = graph.node_count();
  cfg.validate(p);
  if (!graph.has_features()) {
    throw Error(ErrorKind::InvalidConfig, kModule,
                "graph has no features; supply substitute features (e.g. degree one-hot)");
  }
  const Matrix& x = graph.features();

  SolverState state;
  if (options.initial_c) {
    if (options.initial_c->rows() != p || options.initial_c->cols() != cfg.k) {
      throw Error(ErrorKind::DimensionMismatch, kModule, "initial C has the wrong shape");
    }
    state.c = project_feasible(*options.initial_c, cfg.projection);
  } else {
    state.c = initial_assignment(derived, cfg);
  }

  Evaluator ev(derived, x, cfg);
  auto refresh_xc = [&](const Matrix& previous_xc) {
    try {
      return update_XC(state.c, derived, x, cfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SingularSystem) throw;
      state.reseeded_columns += reseed_empty_columns(state.c, previous_xc, x);
      return update_XC(state.c, derived, x, cfg);
    }
  };

  state.xc = refresh_xc(Matrix());
  ev.set_xc(state.xc);
  LossBreakdown current = ev.loss(state.c);
  state.step_L = ev.lipschitz(state.c);
  state.loss_trace.push_back(
      {0, current, state.step_L, xc_stationarity(state.c, state.xc, derived, x, cfg.alpha)});

  SolveResult result;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    CUpdate cu = step_c(ev, state.c, current, cfg);
    state.c = std::move(cu.c);
    state.step_L = cu.step_L;
    require_finite(state.c, "C", t);

    const int reseeded_before = state.reseeded_columns;
    Matrix xc_new = refresh_xc(state.xc);
    require_finite(xc_new, "X_C", t);
    ev.set_xc(xc_new);
    LossBreakdown next = ev.loss(state.c);
    if (state.reseeded_columns == reseeded_before && next.total > cu.loss.total) {
      // The closed-form step cannot increase the loss; an increase here is rounding.
      ev.set_xc(state.xc);
      next = cu.loss;
    } else {
      state.xc = std::move(xc_new);
    }
    state.t = t;
    state.loss_trace.push_back(
        {t, next, state.step_L, xc_stationarity(state.c, state.xc, derived, x, cfg.alpha)});

    const double change =
        std::abs(next.total - current.total) / std::max(1.0, std::abs(current.total));
    current = next;
    if (!std::isfinite(current.total)) {
      throw Error(ErrorKind::NonFinite, kModule, "loss became non-finite");
    }
    if (change < cfg.rel_tol) {
      result.converged = true;
      break;
    }
  }

  result.labels = hard_assignments(state.c);
  result.kkt_residual = kkt_residual(state, derived, x, cfg);
  result.state = std::move(state);
  return result;
}

}  // namespace magc
