#pragma once

#include "magc/report.hpp"
#include "magc/solver.hpp"

#include <string_view>
#include <vector>

namespace magc {

struct GridPoint {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double lambda = 0.0;
};

/// Cartesian product of per-weight value lists. Expansion order is alpha
/// outermost, lambda innermost; this order is also the tie-break order.
struct GridSpec {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<double> lambda;

  std::vector<GridPoint> points() const;
};

/// alpha in {1, 0.01}, beta in {1e5, 1e6}, gamma = 1, lambda = 0.
GridSpec default_grid();

/// "default", or ';'-separated "name=v1,v2,..." entries for alpha, beta, gamma,
/// lambda. Names left out take the value from `base`.
GridSpec parse_grid(std::string_view text, const SolverConfig& base);

enum class GridSelection {
  /// Newman modularity of the hardened partition (label-free, comparable across weights).
  Modularity,
  /// Final weighted objective of each run; only comparable when weights share a scale.
  Objective,
};

std::string_view to_string(GridSelection selection) noexcept;
GridSelection parse_grid_selection(std::string_view text);

struct GridOutcome {
  GridRecord record;
  SolverConfig chosen_config;
  SolveResult chosen;
};

/// Worker count from MAGC_THREADS (default: hardware concurrency, at least 1).
int grid_workers_from_env();

/// Runs one independent solve per grid point on up to `workers` threads and
/// picks the best score; ties go to the earliest point. Results do not depend
/// on the worker count. Throws the first error when every point fails.
GridOutcome grid_search(const AttributedGraph& graph, const DerivedMatrices& derived,
                        const SolverConfig& base, const GridSpec& grid,
                        GridSelection selection = GridSelection::Objective, int workers = 1);

}  // namespace magc
