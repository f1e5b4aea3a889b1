#pragma once

#include "magc/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace magc {

/// Entry point of the `magc` tool. Subcommands: cluster, gen-sbm, eval, bench.
/// Returns 0 on success (cluster: converged), 2 when cluster stops at max_iters,
/// 1 on any error. Errors are written to `err` as "magc: module: Kind: detail".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct BenchOptions {
  std::vector<Index> p_grid{500, 1000, 2000};
  int k = 4;
  Index feature_dim = 64;
  int iterations = 60;
  int repeats = 7;
  std::uint64_t seed = 0;
};

struct BenchRow {
  Index p = 0;
  double seconds_per_iteration = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  /// Least-squares slope of log(time per iteration) against log(p).
  double exponent = 0.0;
};

/// Times solve() with the analytic step on SBM instances across the p grid.
/// Per-iteration time is (T(iterations) - T(1)) / (iterations - 1), the best
/// of `repeats`, so setup and the final diagnostics cancel out.
BenchResult run_bench(const BenchOptions& options);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace magc
