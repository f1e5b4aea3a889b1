#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace magc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Labels = std::vector<int>;

struct Edge {
  Index u = 0;
  Index v = 0;
  double weight = 1.0;
};

/// Undirected graph with optional node features (p x n) and ground-truth labels.
///
/// The constructor enforces the structural invariants: square symmetric
/// adjacency (absolute tolerance 1e-12), nonnegative entries, empty diagonal,
/// feature rows and label length matching the node count, labels >= 0.
class AttributedGraph {
 public:
  AttributedGraph(SparseMatrix adjacency, std::optional<Matrix> features = std::nullopt,
                  std::optional<Labels> labels = std::nullopt);

  /// Builds the adjacency from an edge list; repeated pairs have their weights summed.
  static AttributedGraph from_edges(Index node_count, const std::vector<Edge>& edges,
                                    std::optional<Matrix> features = std::nullopt,
                                    std::optional<Labels> labels = std::nullopt);

  Index node_count() const noexcept { return adjacency_.rows(); }
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }
  bool has_features() const noexcept { return features_.has_value(); }
  const Matrix& features() const;
  bool has_labels() const noexcept { return labels_.has_value(); }
  const Labels& labels() const;
  /// Number of distinct ground-truth classes (max label + 1), 0 without labels.
  int label_class_count() const;

  AttributedGraph with_features(Matrix features) const;
  AttributedGraph with_labels(Labels labels) const;

 private:
  SparseMatrix adjacency_;
  std::optional<Matrix> features_;
  std::optional<Labels> labels_;
};

struct DerivedOptions {
  /// Above this node count the modularity matrix is never materialized and
  /// products with it go through A*C - d (d^T C) / 2e.
  Index dense_modularity_limit = 20000;
};

/// Degree vector, Laplacian, modularity matrix and their spectral norms.
struct DerivedMatrices {
  SparseMatrix adjacency;
  Vector degree;
  SparseMatrix laplacian;
  /// Dense B = A - d d^T / 2e; empty when the node count exceeds the dense limit.
  Matrix modularity_matrix;
  double two_e = 0.0;
  double laplacian_norm = 0.0;
  double modularity_norm = 0.0;

  Index node_count() const noexcept { return degree.size(); }
  bool has_dense_modularity() const noexcept { return modularity_matrix.size() > 0; }
};

DerivedMatrices build_derived(const AttributedGraph& graph, const DerivedOptions& options = {});

/// Theta * C.
Matrix laplacian_product(const DerivedMatrices& derived, const Matrix& c);

/// B * C, dense when B is materialized, low-rank-plus-sparse otherwise.
Matrix modularity_product(const DerivedMatrices& derived, const Matrix& c);

/// tr(C^T B C) through the sparse identity tr(C^T A C) - |d^T C|^2 / 2e.
double modularity_trace(const DerivedMatrices& derived, const Matrix& c);

/// C^T Theta C.
Matrix coarsened_laplacian(const Matrix& c, const SparseMatrix& laplacian);

/// Largest-magnitude eigenvalue estimate of a symmetric operator by power
/// iteration from a fixed pseudo-random start vector.
double spectral_norm_estimate(const std::function<Vector(const Vector&)>& apply, Index dim,
                              int max_iters = 50, double tol = 1e-6);

/// One-hot p x k matrix for labels in [0, k).
Matrix one_hot(const Labels& labels, int k);

}  // namespace magc
