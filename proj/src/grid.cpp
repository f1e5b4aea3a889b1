#include "magc/grid.hpp"

#include "magc/error.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>

namespace magc {

namespace {

constexpr std::string_view kModule = "grid";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<double> parse_values(std::string_view name, std::string_view list) {
  std::vector<double> values;
  while (true) {
    const auto comma = list.find(',');
    const std::string_view token = trim(list.substr(0, comma));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || !(v >= 0.0)) {
      throw Error(ErrorKind::InvalidConfig, kModule,
                  "bad value '" + std::string(token) + "' for " + std::string(name));
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return values;
}

struct Slot {
  std::optional<SolveResult> result;
  double score = 0.0;
  std::exception_ptr error;
  std::string message;
};

}  // namespace

std::vector<GridPoint> GridSpec::points() const {
  std::vector<GridPoint> out;
  for (double a : alpha)
    for (double b : beta)
      for (double g : gamma)
        for (double l : lambda) out.push_back({a, b, g, l});
  return out;
}

GridSpec default_grid() { return GridSpec{{1.0, 0.01}, {1e5, 1e6}, {1.0}, {0.0}}; }

GridSpec parse_grid(std::string_view text, const SolverConfig& base) {
  text = trim(text);
  if (text == "default") return default_grid();
  GridSpec spec{{base.alpha}, {base.beta}, {base.gamma}, {base.lambda}};
  bool any = false;
  while (!text.empty()) {
    const auto semi = text.find(';');
    const std::string_view entry = trim(text.substr(0, semi));
    text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::InvalidConfig, kModule, "expected name=values in '" + std::string(entry) + "'");
    }
    const std::string_view name = trim(entry.substr(0, eq));
    std::vector<double> values = parse_values(name, entry.substr(eq + 1));
    if (name == "alpha") spec.alpha = std::move(values);
    else if (name == "beta") spec.beta = std::move(values);
    else if (name == "gamma") spec.gamma = std::move(values);
    else if (name == "lambda") spec.lambda = std::move(values);
    else throw Error(ErrorKind::InvalidConfig, kModule, "unknown grid parameter '" + std::string(name) + "'");
    any = true;
  }
  if (!any) throw Error(ErrorKind::InvalidConfig, kModule, "empty grid specification");
  return spec;
}

std::string_view to_string(GridSelection selection) noexcept {
  return selection == GridSelection::Modularity ? "modularity" : "objective";
}

GridSelection parse_grid_selection(std::string_view text) {
  if (text == "modularity") return GridSelection::Modularity;
  if (text == "objective") return GridSelection::Objective;
  throw Error(ErrorKind::InvalidConfig, kModule, "unknown grid selection '" + std::string(text) + "'");
}

int grid_workers_from_env() {
  if (const char* env = std::getenv("MAGC_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

GridOutcome grid_search(const AttributedGraph& graph, const DerivedMatrices& derived,
                        const SolverConfig& base, const GridSpec& grid, GridSelection selection,
                        int workers) {
  const std::vector<GridPoint> points = grid.points();
  if (points.empty()) throw Error(ErrorKind::InvalidConfig, kModule, "grid has no points");
  auto config_at = [&](std::size_t i) {
    SolverConfig cfg = base;
    cfg.alpha = points[i].alpha;
    cfg.beta = points[i].beta;
    cfg.gamma = points[i].gamma;
    cfg.lambda = points[i].lambda;
    return cfg;
  };

  std::vector<Slot> slots(points.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      Slot& slot = slots[i];
      try {
        slot.result = solve(graph, derived, config_at(i));
        slot.score = selection == GridSelection::Modularity
                         ? modularity_score(graph, slot.result->labels)
                         : -slot.result->state.loss_trace.back().loss.total;
      } catch (const std::exception& e) {
        slot.result.reset();
        slot.error = std::current_exception();
        slot.message = e.what();
      }
    }
  };
  const int threads = std::clamp<int>(workers, 1, static_cast<int>(points.size()));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  GridOutcome out;
  out.record.selection = std::string(to_string(selection));
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Slot& s = slots[i];
    GridCandidateRecord rec;
    rec.alpha = points[i].alpha;
    rec.beta = points[i].beta;
    rec.gamma = points[i].gamma;
    rec.lambda = points[i].lambda;
    if (s.result) {
      rec.score = s.score;
      rec.objective = s.result->state.loss_trace.back().loss.total;
      rec.iterations = s.result->state.t;
      rec.converged = s.result->converged;
      if (!best || s.score > slots[*best].score) best = i;
    } else {
      rec.error = s.message;
    }
    out.record.candidates.push_back(std::move(rec));
  }
  if (!best) std::rethrow_exception(slots.front().error);
  out.record.chosen = *best;
  out.chosen_config = config_at(*best);
  out.chosen = std::move(*slots[*best].result);
  return out;
}

}  // namespace magc
