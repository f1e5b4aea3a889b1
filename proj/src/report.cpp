#include "magc/report.hpp"

namespace magc {

using nlohmann::json;

RunReport make_report(const SolveResult& result, const SolverConfig& cfg, Index node_count,
                      Index feature_dim, double wall_time_seconds) {
  RunReport r;
  r.config = cfg;
  r.node_count = node_count;
  r.feature_dim = feature_dim;
  r.iterations = result.state.t;
  r.converged = result.converged;
  if (!result.state.loss_trace.empty()) r.final_loss = result.state.loss_trace.back().loss;
  r.kkt_residual = result.kkt_residual;
  r.step_L = result.state.step_L;
  r.reseeded_columns = result.state.reseeded_columns;
  r.wall_time_seconds = wall_time_seconds;
  r.loss_trace = result.state.loss_trace;
  return r;
}

json to_json(const SolverConfig& cfg) {
  return json{{"alpha", cfg.alpha},
              {"beta", cfg.beta},
              {"gamma", cfg.gamma},
              {"lambda", cfg.lambda},
              {"k", cfg.k},
              {"max_iters", cfg.max_iters},
              {"rel_tol", cfg.rel_tol},
              {"step_policy", std::string(to_string(cfg.step_policy))},
              {"backtracking_shrink", cfg.backtracking_shrink},
              {"init", std::string(to_string(cfg.init))},
              {"projection", std::string(to_string(cfg.projection))},
              {"seed", cfg.seed}};
}

SolverConfig solver_config_from_json(const json& j) {
  SolverConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("alpha", cfg.alpha);
  get("beta", cfg.beta);
  get("gamma", cfg.gamma);
  get("lambda", cfg.lambda);
  get("k", cfg.k);
  get("max_iters", cfg.max_iters);
  get("rel_tol", cfg.rel_tol);
  get("backtracking_shrink", cfg.backtracking_shrink);
  get("seed", cfg.seed);
  if (j.contains("step_policy")) cfg.step_policy = parse_step_policy(j.at("step_policy").get<std::string>());
  if (j.contains("init")) cfg.init = parse_init_policy(j.at("init").get<std::string>());
  if (j.contains("projection")) cfg.projection = parse_projection_mode(j.at("projection").get<std::string>());
  return cfg;
}

json to_json(const LossBreakdown& loss) {
  return json{{"smoothness", loss.smoothness}, {"modularity", loss.modularity},
              {"logdet", loss.logdet},         {"relaxation", loss.relaxation},
              {"sparsity", loss.sparsity},     {"total", loss.total}};
}

json to_json(const Evaluation& evaluation) {
  json table = json::array();
  for (Index i = 0; i < evaluation.contingency.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < evaluation.contingency.cols(); ++j) row.push_back(evaluation.contingency(i, j));
    table.push_back(std::move(row));
  }
  json out{{"nmi", evaluation.nmi}, {"ari", evaluation.ari}, {"acc", evaluation.acc},
           {"modularity", nullptr}, {"conductance", nullptr}, {"contingency", std::move(table)}};
  if (evaluation.modularity) out["modularity"] = *evaluation.modularity;
  if (evaluation.conductance) out["conductance"] = *evaluation.conductance;
  return out;
}

namespace {

json to_json(const GridRecord& grid) {
  json candidates = json::array();
  for (const GridCandidateRecord& c : grid.candidates) {
    json entry{{"alpha", c.alpha},           {"beta", c.beta},
               {"gamma", c.gamma},           {"lambda", c.lambda},
               {"score", nullptr},           {"objective", nullptr},
               {"iterations", c.iterations}, {"converged", c.converged}};
    if (c.error.empty()) {
      entry["score"] = c.score;
      entry["objective"] = c.objective;
    } else {
      entry["error"] = c.error;
    }
    candidates.push_back(std::move(entry));
  }
  return json{{"selection", grid.selection}, {"chosen", grid.chosen}, {"candidates", std::move(candidates)}};
}

}  // namespace

json to_json(const RunReport& report) {
  json trace = json::array();
  for (const TraceEntry& e : report.loss_trace) {
    json entry = to_json(e.loss);
    entry["iteration"] = e.iteration;
    entry["step_L"] = e.step_L;
    entry["xc_stationarity"] = e.xc_stationarity;
    trace.push_back(std::move(entry));
  }
  json out{{"config", to_json(report.config)},
           {"seed", report.config.seed},
           {"inputs", report.inputs},
           {"node_count", report.node_count},
           {"feature_dim", report.feature_dim},
           {"iterations", report.iterations},
           {"converged", report.converged},
           {"final_loss", to_json(report.final_loss)},
           {"kkt_residual", report.kkt_residual},
           {"step_L", report.step_L},
           {"reseeded_columns", report.reseeded_columns},
           {"wall_time_seconds", report.wall_time_seconds},
           {"evaluation", nullptr},
           {"grid", nullptr},
           {"loss_trace", std::move(trace)}};
  if (report.evaluation) out["evaluation"] = to_json(*report.evaluation);
  if (report.grid) out["grid"] = to_json(*report.grid);
  return out;
}

const json& run_report_schema() {
  static const json schema = [] {
    const json number{{"type", "number"}};
    const json nullable_number{{"type", json::array({"number", "null"})}};
    const json loss{{"type", "object"},
                    {"required", {"smoothness", "modularity", "logdet", "relaxation", "sparsity", "total"}},
                    {"properties",
                     {{"smoothness", number},
                      {"modularity", number},
                      {"logdet", number},
                      {"relaxation", number},
                      {"sparsity", {{"type", "number"}, {"minimum", 0}}},
                      {"total", number}}}};
    json trace_entry = loss;
    trace_entry["required"].push_back("iteration");
    trace_entry["required"].push_back("step_L");
    trace_entry["required"].push_back("xc_stationarity");
    trace_entry["properties"]["iteration"] = {{"type", "integer"}, {"minimum", 0}};
    trace_entry["properties"]["step_L"] = {{"type", "number"}, {"minimum", 0}};
    trace_entry["properties"]["xc_stationarity"] = {{"type", "number"}, {"minimum", 0}};
    const json config{
        {"type", "object"},
        {"required",
         {"alpha", "beta", "gamma", "lambda", "k", "max_iters", "rel_tol", "step_policy",
          "backtracking_shrink", "init", "projection", "seed"}},
        {"properties",
         {{"alpha", {{"type", "number"}, {"minimum", 0}}},
          {"beta", {{"type", "number"}, {"minimum", 0}}},
          {"gamma", {{"type", "number"}, {"minimum", 0}}},
          {"lambda", {{"type", "number"}, {"minimum", 0}}},
          {"k", {{"type", "integer"}, {"minimum", 1}}},
          {"max_iters", {{"type", "integer"}, {"minimum", 1}}},
          {"rel_tol", {{"type", "number"}, {"exclusiveMinimum", 0}}},
          {"step_policy", {{"enum", {"analytic-bound", "backtracking"}}}},
          {"backtracking_shrink", {{"type", "number"}, {"exclusiveMinimum", 0}, {"exclusiveMaximum", 1}}},
          {"init", {{"enum", {"random-uniform", "degree-seeded"}}}},
          {"projection", {{"enum", {"per-row", "global-normalization"}}}},
          {"seed", {{"type", "integer"}, {"minimum", 0}}}}}};
    const json evaluation{
        {"type", json::array({"object", "null"})},
        {"required", {"nmi", "ari", "acc", "modularity", "conductance", "contingency"}},
        {"properties",
         {{"nmi", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
          {"ari", {{"type", "number"}, {"minimum", -1}, {"maximum", 1}}},
          {"acc", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
          {"modularity", nullable_number},
          {"conductance", nullable_number},
          {"contingency",
           {{"type", "array"},
            {"items", {{"type", "array"}, {"items", {{"type", "integer"}, {"minimum", 0}}}}}}}}}};
    const json grid{
        {"type", json::array({"object", "null"})},
        {"required", {"selection", "chosen", "candidates"}},
        {"properties",
         {{"selection", {{"enum", {"modularity", "objective"}}}},
          {"chosen", {{"type", "integer"}, {"minimum", 0}}},
          {"candidates",
           {{"type", "array"},
            {"minItems", 1},
            {"items",
             {{"type", "object"},
              {"required", {"alpha", "beta", "gamma", "lambda", "score", "objective", "iterations", "converged"}},
              {"properties",
               {{"alpha", number},
                {"beta", number},
                {"gamma", number},
                {"lambda", number},
                {"score", nullable_number},
                {"objective", nullable_number},
                {"iterations", {{"type", "integer"}, {"minimum", 0}}},
                {"converged", {{"type", "boolean"}}},
                {"error", {{"type", "string"}}}}}}}}}}}};
    return json{
        {"$schema", "http://json-schema.org/draft-07/schema#"},
        {"title", "magc run report"},
        {"type", "object"},
        {"required",
         {"config", "seed", "inputs", "node_count", "feature_dim", "iterations", "converged", "final_loss",
          "kkt_residual", "step_L", "reseeded_columns", "wall_time_seconds", "evaluation", "grid",
          "loss_trace"}},
        {"properties",
         {{"config", config},
          {"seed", {{"type", "integer"}, {"minimum", 0}}},
          {"inputs", {{"type", "object"}, {"additionalProperties", {{"type", "string"}}}}},
          {"node_count", {{"type", "integer"}, {"minimum", 1}}},
          {"feature_dim", {{"type", "integer"}, {"minimum", 0}}},
          {"iterations", {{"type", "integer"}, {"minimum", 0}}},
          {"converged", {{"type", "boolean"}}},
          {"final_loss", loss},
          {"kkt_residual", {{"type", "number"}, {"minimum", 0}}},
          {"step_L", {{"type", "number"}, {"minimum", 0}}},
          {"reseeded_columns", {{"type", "integer"}, {"minimum", 0}}},
          {"wall_time_seconds", {{"type", "number"}, {"minimum", 0}}},
          {"evaluation", evaluation},
          {"grid", grid},
          {"loss_trace", {{"type", "array"}, {"minItems", 1}, {"items", trace_entry}}}}}};
  }();
  return schema;
}

}  // namespace magc
