#pragma once

#include "magc/metrics.hpp"
#include "magc/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace magc {

/// One evaluated point of a hyperparameter grid.
struct GridCandidateRecord {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double score = 0.0;  ///< selection score (higher is better)
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string error;  ///< empty when the run succeeded
};

struct GridRecord {
  std::string selection;
  std::size_t chosen = 0;
  std::vector<GridCandidateRecord> candidates;
};

/// Everything needed to audit and reproduce a clustering run.
struct RunReport {
  SolverConfig config;
  /// Input description (file paths, feature source); echoed verbatim.
  std::map<std::string, std::string> inputs;
  Index node_count = 0;
  Index feature_dim = 0;
  int iterations = 0;
  bool converged = false;
  LossBreakdown final_loss;
  double kkt_residual = 0.0;
  double step_L = 0.0;
  int reseeded_columns = 0;
  double wall_time_seconds = 0.0;
  std::optional<Evaluation> evaluation;
  std::optional<GridRecord> grid;
  std::vector<TraceEntry> loss_trace;
};

RunReport make_report(const SolveResult& result, const SolverConfig& cfg, Index node_count,
                      Index feature_dim, double wall_time_seconds);

nlohmann::json to_json(const SolverConfig& cfg);
/// Inverse of to_json(SolverConfig); missing keys keep their defaults.
SolverConfig solver_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LossBreakdown& loss);
nlohmann::json to_json(const Evaluation& evaluation);
nlohmann::json to_json(const RunReport& report);

/// JSON Schema (draft-07) describing to_json(RunReport).
const nlohmann::json& run_report_schema();

}  // namespace magc
