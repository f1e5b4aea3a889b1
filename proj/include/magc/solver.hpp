#pragma once

#include "magc/graph.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace magc {

enum class StepPolicy { AnalyticBound, Backtracking };
enum class InitPolicy { RandomUniform, DegreeSeeded };
/// PerRow is the exact Euclidean projection onto {C >= 0, |row_i(C)|_2 <= 1}.
/// GlobalNormalization clips negatives and divides by the sum of row norms.
enum class ProjectionMode { PerRow, GlobalNormalization };

std::string_view to_string(StepPolicy policy) noexcept;
std::string_view to_string(InitPolicy policy) noexcept;
std::string_view to_string(ProjectionMode mode) noexcept;
StepPolicy parse_step_policy(std::string_view text);
InitPolicy parse_init_policy(std::string_view text);
ProjectionMode parse_projection_mode(std::string_view text);

struct SolverConfig {
  double alpha = 1.0;   ///< feature reconstruction weight
  double beta = 1.0;    ///< modularity weight
  double gamma = 1.0;   ///< log-det weight
  double lambda = 0.0;  ///< row-sparsity weight
  int k = 2;
  int max_iters = 1000;
  double rel_tol = 1e-7;
  StepPolicy step_policy = StepPolicy::Backtracking;
  double backtracking_shrink = 0.5;
  InitPolicy init = InitPolicy::RandomUniform;
  ProjectionMode projection = ProjectionMode::PerRow;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig when a field is out of range for a graph with `node_count` nodes.
  void validate(Index node_count) const;
};

/// Raw term values; `total` applies the weights:
/// smoothness + alpha*relaxation - beta/(2e)*modularity - gamma*logdet + lambda*sparsity.
struct LossBreakdown {
  double smoothness = 0.0;  ///< tr(X_C^T C^T Theta C X_C)
  double modularity = 0.0;  ///< tr(C^T B C)
  double logdet = 0.0;      ///< log det(C^T Theta C + J)
  double relaxation = 0.0;  ///< 0.5 |X - C X_C|_F^2
  double sparsity = 0.0;    ///< 0.5 sum_i (sum_j C_ij)^2
  double total = 0.0;
};

struct TraceEntry {
  int iteration = 0;
  LossBreakdown loss;
  double step_L = 0.0;
  /// |2 C^T Theta C X_C + alpha C^T (C X_C - X)|_F / (1 + |C^T X|_F) after the X_C update.
  double xc_stationarity = 0.0;
};

struct SolverState {
  Matrix c;
  Matrix xc;
  int t = 0;
  std::vector<TraceEntry> loss_trace;
  double step_L = 0.0;
  int reseeded_columns = 0;
};

struct SolveResult {
  SolverState state;
  Labels labels;
  bool converged = false;
  double kkt_residual = 0.0;
};

LossBreakdown loss(const Matrix& c, const Matrix& xc, const DerivedMatrices& derived,
                   const Matrix& x, const SolverConfig& cfg);

Matrix gradient_C(const Matrix& c, const Matrix& xc, const DerivedMatrices& derived,
                  const Matrix& x, const SolverConfig& cfg);

/// Local upper bound on the Lipschitz constant of the C-gradient at `c`:
/// the sum of per-term curvature bounds (smoothness, relaxation, modularity,
/// log-det, sparsity).
double lipschitz_bound(const Matrix& c, const Matrix& xc, const DerivedMatrices& derived,
                       const Matrix& x, const SolverConfig& cfg);

Matrix project_feasible(const Matrix& m, ProjectionMode mode = ProjectionMode::PerRow);

struct CUpdate {
  Matrix c;
  double step_L = 0.0;
  int evaluations = 0;
  LossBreakdown loss;  ///< loss at the returned C with the input X_C
};

CUpdate update_C(const SolverState& state, const DerivedMatrices& derived, const Matrix& x,
                 const SolverConfig& cfg);

/// Closed-form minimizer ((2/alpha) C^T Theta C + C^T C)^{-1} C^T X. With alpha == 0 the
/// reconstruction term is absent and the minimum-norm minimizer X_C = 0 is returned.
Matrix update_XC(const Matrix& c, const DerivedMatrices& derived, const Matrix& x,
                 const SolverConfig& cfg);

/// Norm of the X_C sub-problem gradient, scaled by 1 / (1 + |C^T X|_F).
double xc_stationarity(const Matrix& c, const Matrix& xc, const DerivedMatrices& derived,
                       const Matrix& x, double alpha);

Matrix initial_assignment(const DerivedMatrices& derived, const SolverConfig& cfg);

/// Row-wise argmax, ties toward the lowest column.
Labels hard_assignments(const Matrix& c);

/// |C - P(C - grad/L)|_F / |C|_F with L = state.step_L (or the analytic bound if unset).
double kkt_residual(const SolverState& state, const DerivedMatrices& derived, const Matrix& x,
                    const SolverConfig& cfg);

struct SolveOptions {
  std::optional<Matrix> initial_c;
  DerivedOptions derived;
};

SolveResult solve(const AttributedGraph& graph, const SolverConfig& cfg,
                  const SolveOptions& options = {});

/// Same as above with precomputed derived matrices (used by grid search).
SolveResult solve(const AttributedGraph& graph, const DerivedMatrices& derived,
                  const SolverConfig& cfg, const SolveOptions& options = {});

}  // namespace magc
