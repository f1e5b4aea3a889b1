#pragma once

#include "magc/graph.hpp"

#include <optional>
#include <vector>

namespace magc {

/// Contingency table: rows are true classes, columns predicted clusters.
/// Label values are compacted to dense ids in ascending order first.
Eigen::MatrixXi contingency_table(const Labels& y_true, const Labels& y_pred);

/// Mutual information normalized by the arithmetic mean of the two entropies.
double nmi(const Labels& y_true, const Labels& y_pred);

double ari(const Labels& y_true, const Labels& y_pred);

/// Fraction of nodes matched under the best one-to-one cluster/class mapping.
double accuracy(const Labels& y_true, const Labels& y_pred);

/// Maximum-weight assignment on a rectangular weight matrix (padded with
/// zero-weight dummies). Returns, for each row, the matched column or -1.
std::vector<int> max_weight_assignment(const Matrix& weights);

/// Newman modularity of a hard partition, computed cluster-wise in O(nnz + p).
double modularity_score(const AttributedGraph& graph, const Labels& labels);

/// The same quantity as (1 / 2e) tr(C^T B C) for the one-hot C of `labels`.
double modularity_trace_form(const DerivedMatrices& derived, const Labels& labels);

/// Mean over clusters of cut(S, V\S) / min(vol(S), vol(V\S)).
double conductance(const AttributedGraph& graph, const Labels& labels);

struct Evaluation {
  double nmi = 0.0;
  double ari = 0.0;
  double acc = 0.0;
  std::optional<double> modularity;
  std::optional<double> conductance;
  Eigen::MatrixXi contingency;
};

/// Label metrics always; graph metrics when `graph` is given and well defined.
Evaluation evaluate(const Labels& y_true, const Labels& y_pred,
                    const AttributedGraph* graph = nullptr);

}  // namespace magc
