#include "magc/cli.hpp"

#include "magc/error.hpp"
#include "magc/grid.hpp"
#include "magc/io.hpp"
#include "magc/metrics.hpp"
#include "magc/report.hpp"
#include "magc/sbm.hpp"
#include "magc/solver.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace magc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kModule = "cli";

constexpr const char* kLabelsFile = "labels.txt";
constexpr const char* kReportFile = "report.json";
constexpr const char* kRunConfigFile = "run.ini";
constexpr const char* kNodeIdsFile = "node_ids.txt";

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Exact decimal form so a config echo reproduces the run bit-for-bit.
std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Flat "key = value" file; every key is a long flag of the subcommand.
std::vector<std::string> read_config_tokens(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, kModule, "cannot open config " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ParseError, kModule,
                  path.string() + ": line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

// Splices config-file entries in front of the command-line flags of the
// subcommand so that explicit flags (parsed later, last value wins) override them.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::size_t sub = 0;
  while (sub < args.size() && args[sub].rfind("-", 0) == 0) ++sub;
  std::vector<std::string> inserted;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    if (path.empty()) continue;
    const auto tokens = read_config_tokens(path);
    inserted.insert(inserted.end(), tokens.begin(), tokens.end());
  }
  if (!inserted.empty()) args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub + 1), inserted.begin(), inserted.end());
  return args;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, kModule, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, kModule, "cannot create " + dir.string() + ": " + ec.message());
}

NodeIdMode parse_id_mode(const std::string& text) {
  if (text == "auto") return NodeIdMode::Auto;
  if (text == "integer") return NodeIdMode::Integer;
  if (text == "string") return NodeIdMode::String;
  throw Error(ErrorKind::InvalidConfig, kModule, "unknown id mode '" + text + "'");
}

struct SolverFlags {
  double alpha = 1.0, beta = 1.0, gamma = 1.0, lambda = 0.0;
  int k = 2;
  int max_iters = 1000;
  double rel_tol = 1e-7;
  std::string step_policy = "backtracking";
  double backtracking_shrink = 0.5;
  std::string init = "random-uniform";
  std::string projection = "per-row";
  std::uint64_t seed = 0;

  void add_to(CLI::App& app) {
    app.add_option("--k", k, "number of clusters")->capture_default_str();
    app.add_option("--alpha", alpha, "feature reconstruction weight")->capture_default_str();
    app.add_option("--beta", beta, "modularity weight")->capture_default_str();
    app.add_option("--gamma", gamma, "log-det weight")->capture_default_str();
    app.add_option("--lambda", lambda, "row-sparsity weight")->capture_default_str();
    app.add_option("--max-iters", max_iters)->capture_default_str();
    app.add_option("--rel-tol", rel_tol, "relative loss-change stopping threshold")->capture_default_str();
    app.add_option("--step-policy", step_policy, "backtracking | analytic-bound")->capture_default_str();
    app.add_option("--backtracking-shrink", backtracking_shrink)->capture_default_str();
    app.add_option("--init", init, "random-uniform | degree-seeded")->capture_default_str();
    app.add_option("--projection", projection, "per-row | global-normalization")->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
  }

  SolverConfig config() const {
    SolverConfig cfg;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.gamma = gamma;
    cfg.lambda = lambda;
    cfg.k = k;
    cfg.max_iters = max_iters;
    cfg.rel_tol = rel_tol;
    cfg.step_policy = parse_step_policy(step_policy);
    cfg.backtracking_shrink = backtracking_shrink;
    cfg.init = parse_init_policy(init);
    cfg.projection = parse_projection_mode(projection);
    cfg.seed = seed;
    return cfg;
  }
};

void write_solver_echo(std::ostream& out, const SolverConfig& cfg) {
  out << "k = " << cfg.k << '\n'
      << "alpha = " << exact(cfg.alpha) << '\n'
      << "beta = " << exact(cfg.beta) << '\n'
      << "gamma = " << exact(cfg.gamma) << '\n'
      << "lambda = " << exact(cfg.lambda) << '\n'
      << "max-iters = " << cfg.max_iters << '\n'
      << "rel-tol = " << exact(cfg.rel_tol) << '\n'
      << "step-policy = " << to_string(cfg.step_policy) << '\n'
      << "backtracking-shrink = " << exact(cfg.backtracking_shrink) << '\n'
      << "init = " << to_string(cfg.init) << '\n'
      << "projection = " << to_string(cfg.projection) << '\n'
      << "seed = " << cfg.seed << '\n';
}

struct ClusterArgs {
  std::string edges, features, labels, out_dir = ".", grid, grid_select = "objective", id_mode = "auto";
  std::string config;
  SolverFlags solver;
};

int cmd_cluster(const ClusterArgs& a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  SolverConfig cfg = a.solver.config();

  DatasetPaths paths{a.edges, std::nullopt, std::nullopt};
  if (!a.features.empty()) paths.features = a.features;
  if (!a.labels.empty()) paths.labels = a.labels;
  EdgeListOptions edge_options;
  edge_options.id_mode = parse_id_mode(a.id_mode);
  DatasetBundle bundle = load_bundle(paths, fs::path(a.edges).stem().string(), edge_options);

  std::map<std::string, std::string> inputs{{"edges", fs::absolute(a.edges).string()}};
  AttributedGraph graph = bundle.graph;
  if (graph.has_features()) {
    inputs["features"] = fs::absolute(a.features).string();
  } else {
    graph = graph.with_features(degree_onehot(graph));
    inputs["features"] = "degree-onehot";
    spdlog::info("no features given; using the degree one-hot encoding ({} columns)", graph.features().cols());
  }
  if (!a.labels.empty()) inputs["labels"] = fs::absolute(a.labels).string();
  inputs["id_mode"] = a.id_mode;

  const DerivedMatrices derived = build_derived(graph);
  std::optional<GridRecord> grid_record;
  SolveResult result;
  if (!a.grid.empty()) {
    const GridSpec spec = parse_grid(a.grid, cfg);
    const int workers = grid_workers_from_env();
    spdlog::info("grid search over {} points with {} worker(s)", spec.points().size(), workers);
    GridOutcome outcome = grid_search(graph, derived, cfg, spec, parse_grid_selection(a.grid_select), workers);
    grid_record = std::move(outcome.record);
    cfg = outcome.chosen_config;
    result = std::move(outcome.chosen);
    inputs["grid"] = a.grid;
  } else {
    result = solve(graph, derived, cfg);
  }

  RunReport report = make_report(result, cfg, graph.node_count(), graph.features().cols(), 0.0);
  report.inputs = inputs;
  report.grid = std::move(grid_record);
  if (graph.has_labels()) report.evaluation = evaluate(graph.labels(), result.labels, &graph);

  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  save_labels(dir / kLabelsFile, result.labels);
  if (bundle.node_names.size() > 0) {
    std::ofstream ids(dir / kNodeIdsFile);
    if (!ids) throw Error(ErrorKind::IoError, kModule, "cannot write " + (dir / kNodeIdsFile).string());
    for (const std::string& name : bundle.node_names) ids << name << '\n';
  }
  {
    std::ofstream echo(dir / kRunConfigFile);
    if (!echo) throw Error(ErrorKind::IoError, kModule, "cannot write " + (dir / kRunConfigFile).string());
    echo << "# effective configuration of this run; rerun with: magc cluster --config " << kRunConfigFile << '\n'
         << "edges = " << inputs["edges"] << '\n';
    if (!a.features.empty()) echo << "features = " << inputs["features"] << '\n';
    if (!a.labels.empty()) echo << "labels = " << inputs["labels"] << '\n';
    echo << "id-mode = " << a.id_mode << '\n';
    write_solver_echo(echo, cfg);
  }
  report.wall_time_seconds = seconds_since(start);
  write_json(dir / kReportFile, to_json(report));

  out << "iterations " << report.iterations << (report.converged ? " (converged)" : " (max_iters reached)")
      << "  loss " << report.final_loss.total << "  kkt " << report.kkt_residual << '\n';
  if (report.evaluation) {
    const Evaluation& e = *report.evaluation;
    out << "NMI " << e.nmi << "  ARI " << e.ari << "  ACC " << e.acc;
    if (e.modularity) out << "  Q " << *e.modularity;
    if (e.conductance) out << "  conductance " << *e.conductance;
    out << '\n';
  }
  return result.converged ? 0 : 2;
}

struct GenArgs {
  SbmConfig sbm;
  std::string out_dir = ".";
  std::string config;
};

int cmd_gen_sbm(const GenArgs& a, std::ostream& out) {
  const SbmInstance inst = generate(a.sbm);
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  save_edge_list(dir / "edges.txt", inst.graph.adjacency());
  save_features_csv(dir / "features.csv", inst.graph.features());
  save_labels(dir / "labels.txt", inst.graph.labels());
  std::ofstream echo(dir / "sbm.ini");
  if (!echo) throw Error(ErrorKind::IoError, kModule, "cannot write " + (dir / "sbm.ini").string());
  const SbmConfig& c = a.sbm;
  echo << "# generator configuration; regenerate with: magc gen-sbm --config sbm.ini\n"
       << "p = " << c.p << '\n'
       << "k = " << c.k << '\n'
       << "degree = " << exact(c.expected_degree) << '\n'
       << "sub-degree = " << exact(c.expected_sub_degree) << '\n'
       << "powerlaw-exponent = " << exact(c.powerlaw_exponent) << '\n'
       << "theta-min = " << exact(c.theta_min) << '\n'
       << "theta-max = " << exact(c.theta_max) << '\n'
       << "feature-dim = " << c.feature_dim << '\n'
       << "feature-groups = " << c.feature_groups << '\n'
       << "class-sep = " << exact(c.class_sep) << '\n'
       << "seed = " << c.seed << '\n'
       << "# realized mean degree " << inst.realized_mean_degree << ", probability scale "
       << inst.probability_scale << ", clipped pairs " << inst.clipped_pairs << '\n';
  out << "nodes " << inst.graph.node_count() << "  edges " << inst.graph.adjacency().nonZeros() / 2
      << "  mean degree " << inst.realized_mean_degree << '\n';
  return 0;
}

struct EvalArgs {
  std::string labels, pred, edges, out, id_mode = "auto";
  std::string config;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Labels truth = load_labels(a.labels);
  const Labels pred = load_labels(a.pred);
  std::optional<AttributedGraph> graph;
  if (!a.edges.empty()) {
    EdgeListOptions options;
    options.id_mode = parse_id_mode(a.id_mode);
    options.min_nodes = static_cast<Index>(truth.size());
    EdgeList edges = load_edge_list(a.edges, options);
    graph.emplace(std::move(edges.adjacency));
  }
  const Evaluation e = evaluate(truth, pred, graph ? &*graph : nullptr);
  const json j = to_json(e);
  if (!a.out.empty()) write_json(a.out, j);
  out << j.dump(2) << '\n';
  return 0;
}

struct BenchArgs {
  BenchOptions options;
  std::string out;
  std::string config;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const BenchResult r = run_bench(a.options);
  out << std::setw(8) << "p" << std::setw(18) << "ms/iteration" << '\n';
  json rows = json::array();
  for (const BenchRow& row : r.rows) {
    out << std::setw(8) << row.p << std::setw(18) << std::fixed << std::setprecision(4)
        << row.seconds_per_iteration * 1e3 << '\n';
    rows.push_back({{"p", row.p}, {"seconds_per_iteration", row.seconds_per_iteration}});
  }
  out.unsetf(std::ios::floatfield);
  out << "fitted exponent " << std::setprecision(4) << r.exponent << '\n';
  if (!a.out.empty()) {
    write_json(a.out, json{{"k", a.options.k},
                           {"feature_dim", a.options.feature_dim},
                           {"iterations", a.options.iterations},
                           {"repeats", a.options.repeats},
                           {"rows", rows},
                           {"exponent", r.exponent}});
  }
  return 0;
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::InvalidConfig, kModule, "slope fit needs at least two points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

BenchResult run_bench(const BenchOptions& options) {
  if (options.iterations < 2 || options.repeats < 1 || options.p_grid.size() < 2) {
    throw Error(ErrorKind::InvalidConfig, kModule, "bench needs >= 2 iterations, >= 1 repeat and >= 2 sizes");
  }
  struct Case {
    SbmInstance inst;
    DerivedMatrices derived;
    double best_long = std::numeric_limits<double>::infinity();
    double best_short = std::numeric_limits<double>::infinity();
  };
  std::vector<Case> cases;
  for (Index p : options.p_grid) {
    SbmConfig sbm;
    sbm.p = p;
    sbm.k = options.k;
    sbm.feature_groups = options.k;
    sbm.feature_dim = options.feature_dim;
    sbm.seed = options.seed;
    SbmInstance inst = generate(sbm);
    DerivedMatrices derived = build_derived(inst.graph);
    cases.push_back({std::move(inst), std::move(derived)});
  }

  SolverConfig cfg;
  cfg.k = options.k;
  cfg.step_policy = StepPolicy::AnalyticBound;
  cfg.rel_tol = std::numeric_limits<double>::min();
  cfg.seed = options.seed;
  auto timed = [&](const Case& c, int iters) {
    cfg.max_iters = iters;
    const auto start = std::chrono::steady_clock::now();
    const SolveResult res = solve(c.inst.graph, c.derived, cfg);
    const double secs = seconds_since(start);
    if (res.state.t != iters) {
      throw Error(ErrorKind::InvalidConfig, kModule, "solver stopped before the requested iteration count");
    }
    return secs;
  };
  // Sizes are interleaved within every round so a slow stretch on the host
  // affects all of them rather than biasing one.
  for (int r = 0; r < options.repeats; ++r) {
    for (Case& c : cases) {
      c.best_long = std::min(c.best_long, timed(c, options.iterations));
      c.best_short = std::min(c.best_short, timed(c, 1));
    }
  }

  BenchResult result;
  std::vector<double> xs, ys;
  for (const Case& c : cases) {
    const double per_iter =
        std::max(1e-12, (c.best_long - c.best_short) / static_cast<double>(options.iterations - 1));
    result.rows.push_back({c.inst.graph.node_count(), per_iter});
    xs.push_back(static_cast<double>(c.inst.graph.node_count()));
    ys.push_back(per_iter);
  }
  result.exponent = loglog_slope(xs, ys);
  return result;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attributed graph clustering by coarsening and modularity maximization", "magc"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");

  ClusterArgs cluster;
  CLI::App* c = app.add_subcommand("cluster", "cluster a graph and write labels.txt, report.json, run.ini");
  c->add_option("--edges", cluster.edges, "edge list (u v [w] per line)")->required();
  c->add_option("--features", cluster.features, "node features CSV (default: degree one-hot)");
  c->add_option("--labels", cluster.labels, "ground-truth labels for evaluation");
  c->add_option("--out-dir", cluster.out_dir)->capture_default_str();
  c->add_option("--grid", cluster.grid, "'default' or 'alpha=..;beta=..;gamma=..;lambda=..'");
  c->add_option("--grid-select", cluster.grid_select, "objective | modularity")->capture_default_str();
  c->add_option("--id-mode", cluster.id_mode, "auto | integer | string")->capture_default_str();
  c->add_option("--config", cluster.config, "flat key = value file; flags override it");
  cluster.solver.add_to(*c);

  GenArgs gen;
  CLI::App* g = app.add_subcommand("gen-sbm", "generate a degree-corrected SBM with features");
  g->add_option("--p", gen.sbm.p)->capture_default_str();
  g->add_option("--k", gen.sbm.k)->capture_default_str();
  g->add_option("--degree", gen.sbm.expected_degree, "expected mean degree")->capture_default_str();
  g->add_option("--sub-degree", gen.sbm.expected_sub_degree, "inter-block rate")->capture_default_str();
  g->add_option("--powerlaw-exponent", gen.sbm.powerlaw_exponent)->capture_default_str();
  g->add_option("--theta-min", gen.sbm.theta_min)->capture_default_str();
  g->add_option("--theta-max", gen.sbm.theta_max)->capture_default_str();
  g->add_option("--feature-dim", gen.sbm.feature_dim)->capture_default_str();
  g->add_option("--feature-groups", gen.sbm.feature_groups)->capture_default_str();
  g->add_option("--class-sep", gen.sbm.class_sep)->capture_default_str();
  g->add_option("--seed", gen.sbm.seed)->capture_default_str();
  g->add_option("--out-dir", gen.out_dir)->capture_default_str();
  g->add_option("--config", gen.config, "flat key = value file; flags override it");

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "compare predicted labels with ground truth");
  e->add_option("--labels", ev.labels, "ground-truth labels")->required();
  e->add_option("--pred", ev.pred, "predicted labels")->required();
  e->add_option("--edges", ev.edges, "edge list for modularity and conductance");
  e->add_option("--id-mode", ev.id_mode)->capture_default_str();
  e->add_option("--out", ev.out, "also write the JSON here");
  e->add_option("--config", ev.config, "flat key = value file; flags override it");

  BenchArgs bench;
  CLI::App* b = app.add_subcommand("bench", "per-iteration time across node counts");
  b->add_option("--p-grid", bench.options.p_grid)->delimiter(',')->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  b->add_option("--k", bench.options.k)->capture_default_str();
  b->add_option("--n", bench.options.feature_dim, "feature dimension")->capture_default_str();
  b->add_option("--iters", bench.options.iterations)->capture_default_str();
  b->add_option("--repeats", bench.options.repeats)->capture_default_str();
  b->add_option("--seed", bench.options.seed)->capture_default_str();
  b->add_option("--out", bench.out, "write the table as JSON");
  b->add_option("--config", bench.config, "flat key = value file; flags override it");

  try {
    std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& pe) {
      const int code = app.exit(pe, out, err);
      return code == 0 ? 0 : 1;
    }
    spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);
    if (c->parsed()) return cmd_cluster(cluster, out);
    if (g->parsed()) return cmd_gen_sbm(gen, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (b->parsed()) return cmd_bench(bench, out);
  } catch (const Error& ex) {
    err << "magc: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    err << "magc: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace magc
