#include "magc/metrics.hpp"

#include "magc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace magc {

namespace {

constexpr std::string_view kModule = "metrics";

void require_same_length(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << "label vectors have lengths " << a.size() << " and " << b.size();
    throw Error(ErrorKind::LengthMismatch, kModule, msg.str());
  }
}

// Maps arbitrary label values to 0..m-1 in ascending value order.
std::vector<int> compact(const Labels& labels, int& count) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [value, id] : ids) id = next++;
  count = next;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  return out;
}

double entropy(const Eigen::VectorXd& counts, double n) {
  double h = 0.0;
  for (Index i = 0; i < counts.size(); ++i) {
    if (counts(i) > 0) h -= counts(i) / n * std::log(counts(i) / n);
  }
  return h;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

// True when every row and column of the table has exactly one nonzero cell.
bool is_bijective(const Eigen::MatrixXi& table) {
  if (table.rows() != table.cols()) return false;
  for (Index r = 0; r < table.rows(); ++r) {
    if ((table.row(r).array() != 0).count() != 1) return false;
  }
  for (Index c = 0; c < table.cols(); ++c) {
    if ((table.col(c).array() != 0).count() != 1) return false;
  }
  return true;
}

}  // namespace

Eigen::MatrixXi contingency_table(const Labels& y_true, const Labels& y_pred) {
  require_same_length(y_true, y_pred);
  int rows = 0;
  int cols = 0;
  const auto t = compact(y_true, rows);
  const auto p = compact(y_pred, cols);
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) ++table(t[i], p[i]);
  return table;
}

double nmi(const Labels& y_true, const Labels& y_pred) {
  const Eigen::MatrixXi table = contingency_table(y_true, y_pred);
  if (y_true.empty() || is_bijective(table)) return 1.0;
  const double n = static_cast<double>(y_true.size());
  const Eigen::VectorXd rows = table.cast<double>().rowwise().sum();
  const Eigen::VectorXd cols = table.cast<double>().colwise().sum().transpose();
  const double h_true = entropy(rows, n);
  const double h_pred = entropy(cols, n);
  if (h_true == 0.0 || h_pred == 0.0) return 0.0;
  double mi = 0.0;
  for (Index i = 0; i < table.rows(); ++i) {
    for (Index j = 0; j < table.cols(); ++j) {
      const double nij = table(i, j);
      if (nij > 0) mi += nij / n * std::log(n * nij / (rows(i) * cols(j)));
    }
  }
  return std::clamp(mi / (0.5 * (h_true + h_pred)), 0.0, 1.0);
}

double ari(const Labels& y_true, const Labels& y_pred) {
  const Eigen::MatrixXi table = contingency_table(y_true, y_pred);
  const double n = static_cast<double>(y_true.size());
  double sum_cells = 0.0;
  for (Index i = 0; i < table.rows(); ++i) {
    for (Index j = 0; j < table.cols(); ++j) sum_cells += choose2(table(i, j));
  }
  double sum_rows = 0.0;
  for (Index i = 0; i < table.rows(); ++i) sum_rows += choose2(table.row(i).sum());
  double sum_cols = 0.0;
  for (Index j = 0; j < table.cols(); ++j) sum_cols += choose2(table.col(j).sum());
  const double pairs = choose2(n);
  if (pairs == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / pairs;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return is_bijective(table) ? 1.0 : 0.0;
  return (sum_cells - expected) / (max_index - expected);
}

std::vector<int> max_weight_assignment(const Matrix& weights) {
  const Index rows = weights.rows();
  const Index cols = weights.cols();
  const Index n = std::max(rows, cols);
  if (n == 0) return {};
  // Square cost matrix, 1-based, minimising -weight (Kuhn-Munkres with potentials).
  Matrix cost = Matrix::Zero(n + 1, n + 1);
  cost.block(1, 1, rows, cols) = -weights;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> match(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const Index i0 = match[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(rows), -1);
  for (Index j = 1; j <= n; ++j) {
    const Index i = match[j];
    if (i >= 1 && i <= rows && j <= cols) assignment[static_cast<std::size_t>(i - 1)] = static_cast<int>(j - 1);
  }
  return assignment;
}

double accuracy(const Labels& y_true, const Labels& y_pred) {
  const Eigen::MatrixXi table = contingency_table(y_true, y_pred);
  if (y_true.empty()) return 1.0;
  const auto assignment = max_weight_assignment(table.cast<double>());
  double matched = 0.0;
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    if (assignment[r] >= 0) matched += table(static_cast<Index>(r), assignment[r]);
  }
  return matched / static_cast<double>(y_true.size());
}

namespace {

struct ClusterVolumes {
  std::vector<double> internal;  // sum of A_ij over ordered pairs inside the cluster
  std::vector<double> volume;
  double two_e = 0.0;
};

ClusterVolumes cluster_volumes(const AttributedGraph& graph, const Labels& labels, int& count) {
  if (static_cast<Index>(labels.size()) != graph.node_count()) {
    throw Error(ErrorKind::LengthMismatch, kModule, "labels must cover every node");
  }
  const auto ids = compact(labels, count);
  ClusterVolumes out;
  out.internal.assign(static_cast<std::size_t>(count), 0.0);
  out.volume.assign(static_cast<std::size_t>(count), 0.0);
  const SparseMatrix& a = graph.adjacency();
  for (Index col = 0; col < a.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      const auto ci = static_cast<std::size_t>(ids[static_cast<std::size_t>(it.row())]);
      const auto cj = static_cast<std::size_t>(ids[static_cast<std::size_t>(it.col())]);
      out.volume[cj] += it.value();
      out.two_e += it.value();
      if (ci == cj) out.internal[ci] += it.value();
    }
  }
  return out;
}

}  // namespace

double modularity_score(const AttributedGraph& graph, const Labels& labels) {
  int count = 0;
  const ClusterVolumes v = cluster_volumes(graph, labels, count);
  if (!(v.two_e > 0.0)) throw Error(ErrorKind::EmptyGraph, kModule, "graph has no edges");
  double q = 0.0;
  for (int c = 0; c < count; ++c) {
    const double share = v.volume[static_cast<std::size_t>(c)] / v.two_e;
    q += v.internal[static_cast<std::size_t>(c)] / v.two_e - share * share;
  }
  return q;
}

double modularity_trace_form(const DerivedMatrices& derived, const Labels& labels) {
  if (static_cast<Index>(labels.size()) != derived.node_count()) {
    throw Error(ErrorKind::LengthMismatch, kModule, "labels must cover every node");
  }
  int count = 0;
  const auto ids = compact(labels, count);
  const Matrix c = one_hot(ids, count);
  Matrix bc = modularity_product(derived, c);
  return c.cwiseProduct(bc).sum() / derived.two_e;
}

double conductance(const AttributedGraph& graph, const Labels& labels) {
  int count = 0;
  const ClusterVolumes v = cluster_volumes(graph, labels, count);
  double total = 0.0;
  for (int c = 0; c < count; ++c) {
    const double vol = v.volume[static_cast<std::size_t>(c)];
    const double denom = std::min(vol, v.two_e - vol);
    if (!(denom > 0.0)) {
      std::ostringstream msg;
      msg << "cluster " << c << (vol > 0.0 ? " has an empty-volume complement" : " has zero volume");
      throw Error(ErrorKind::ZeroVolumeCluster, kModule, msg.str());
    }
    total += (vol - v.internal[static_cast<std::size_t>(c)]) / denom;
  }
  return total / count;
}

Evaluation evaluate(const Labels& y_true, const Labels& y_pred, const AttributedGraph* graph) {
  Evaluation out;
  out.contingency = contingency_table(y_true, y_pred);
  out.nmi = nmi(y_true, y_pred);
  out.ari = ari(y_true, y_pred);
  out.acc = accuracy(y_true, y_pred);
  if (graph != nullptr) {
    try {
      out.modularity = modularity_score(*graph, y_pred);
      out.conductance = conductance(*graph, y_pred);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroVolumeCluster && e.kind() != ErrorKind::EmptyGraph) throw;
    }
  }
  return out;
}

}  // namespace magc
