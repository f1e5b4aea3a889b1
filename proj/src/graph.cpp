#include "magc/graph.hpp"

#include "magc/error.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace magc {

namespace {

constexpr std::string_view kModule = "graph";

void validate_adjacency(const SparseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::DimensionMismatch, kModule, "adjacency must be square");
  }
  if (a.rows() == 0) {
    throw Error(ErrorKind::InvalidGraph, kModule, "graph has no nodes");
  }
  SparseMatrix at = a.transpose();
  for (Index col = 0; col < a.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      if (!std::isfinite(it.value()) || it.value() < 0.0) {
        std::ostringstream msg;
        msg << "adjacency entry (" << it.row() << ", " << it.col() << ") = " << it.value()
            << " is negative or not finite";
        throw Error(ErrorKind::InvalidGraph, kModule, msg.str());
      }
      if (it.row() == it.col() && it.value() != 0.0) {
        std::ostringstream msg;
        msg << "self-loop on node " << it.row();
        throw Error(ErrorKind::SelfLoop, kModule, msg.str());
      }
    }
  }
  SparseMatrix diff = a - at;
  for (Index col = 0; col < diff.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(diff, col); it; ++it) {
      if (std::abs(it.value()) > 1e-12) {
        std::ostringstream msg;
        msg << "A(" << it.row() << ", " << it.col() << ") != A(" << it.col() << ", " << it.row()
            << ")";
        throw Error(ErrorKind::AsymmetricAdjacency, kModule, msg.str());
      }
    }
  }
}

}  // namespace

AttributedGraph::AttributedGraph(SparseMatrix adjacency, std::optional<Matrix> features,
                                 std::optional<Labels> labels)
    : adjacency_(std::move(adjacency)), features_(std::move(features)), labels_(std::move(labels)) {
  adjacency_.prune(0.0);
  adjacency_.makeCompressed();
  validate_adjacency(adjacency_);
  const Index p = adjacency_.rows();
  if (features_ && features_->rows() != p) {
    std::ostringstream msg;
    msg << "feature matrix has " << features_->rows() << " rows for " << p << " nodes";
    throw Error(ErrorKind::DimensionMismatch, kModule, msg.str());
  }
  if (features_ && !features_->allFinite()) {
    throw Error(ErrorKind::NonFinite, kModule, "feature matrix contains NaN or Inf");
  }
  if (labels_) {
    if (static_cast<Index>(labels_->size()) != p) {
      std::ostringstream msg;
      msg << "label vector has " << labels_->size() << " entries for " << p << " nodes";
      throw Error(ErrorKind::DimensionMismatch, kModule, msg.str());
    }
    for (int label : *labels_) {
      if (label < 0) {
        throw Error(ErrorKind::InvalidGraph, kModule, "labels must be nonnegative");
      }
    }
  }
}

AttributedGraph AttributedGraph::from_edges(Index node_count, const std::vector<Edge>& edges,
                                            std::optional<Matrix> features,
                                            std::optional<Labels> labels) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= node_count || e.v >= node_count) {
      std::ostringstream msg;
      msg << "edge (" << e.u << ", " << e.v << ") out of range for " << node_count << " nodes";
      throw Error(ErrorKind::InvalidGraph, kModule, msg.str());
    }
    if (e.u == e.v) {
      std::ostringstream msg;
      msg << "self-loop on node " << e.u;
      throw Error(ErrorKind::SelfLoop, kModule, msg.str());
    }
    triplets.emplace_back(e.u, e.v, e.weight);
    triplets.emplace_back(e.v, e.u, e.weight);
  }
  SparseMatrix a(node_count, node_count);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return AttributedGraph(std::move(a), std::move(features), std::move(labels));
}

const Matrix& AttributedGraph::features() const {
  if (!features_) throw Error(ErrorKind::InvalidGraph, kModule, "graph has no features");
  return *features_;
}

const Labels& AttributedGraph::labels() const {
  if (!labels_) throw Error(ErrorKind::InvalidGraph, kModule, "graph has no labels");
  return *labels_;
}

int AttributedGraph::label_class_count() const {
  if (!labels_ || labels_->empty()) return 0;
  int max_label = 0;
  for (int l : *labels_) max_label = std::max(max_label, l);
  return max_label + 1;
}

AttributedGraph AttributedGraph::with_features(Matrix features) const {
  return AttributedGraph(adjacency_, std::move(features), labels_);
}

AttributedGraph AttributedGraph::with_labels(Labels labels) const {
  return AttributedGraph(adjacency_, features_, std::move(labels));
}

DerivedMatrices build_derived(const AttributedGraph& graph, const DerivedOptions& options) {
  DerivedMatrices out;
  out.adjacency = graph.adjacency();
  const Index p = graph.node_count();

  SparseMatrix diff = out.adjacency - SparseMatrix(out.adjacency.transpose());
  for (Index col = 0; col < diff.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(diff, col); it; ++it) {
      if (std::abs(it.value()) > 1e-12) {
        throw Error(ErrorKind::AsymmetricAdjacency, kModule, "adjacency is not symmetric");
      }
    }
  }

  out.degree = out.adjacency * Vector::Ones(p);
  out.two_e = out.degree.sum();
  if (!(out.two_e > 0.0)) {
    throw Error(ErrorKind::EmptyGraph, kModule, "graph has no edges; modularity is undefined");
  }

  SparseMatrix diag(p, p);
  diag.reserve(Eigen::VectorXi::Constant(p, 1));
  for (Index i = 0; i < p; ++i) diag.insert(i, i) = out.degree(i);
  out.laplacian = diag - out.adjacency;
  out.laplacian.makeCompressed();

  if (p <= options.dense_modularity_limit) {
    out.modularity_matrix = Matrix(out.adjacency);
    out.modularity_matrix.noalias() -= out.degree * out.degree.transpose() / out.two_e;
  }

  out.laplacian_norm = spectral_norm_estimate(
      [&](const Vector& v) -> Vector { return out.laplacian * v; }, p);
  out.modularity_norm = spectral_norm_estimate(
      [&](const Vector& v) -> Vector {
        Vector r = out.adjacency * v;
        r -= out.degree * (out.degree.dot(v) / out.two_e);
        return r;
      },
      p);
  return out;
}

Matrix laplacian_product(const DerivedMatrices& derived, const Matrix& c) {
  return derived.laplacian * c;
}

Matrix modularity_product(const DerivedMatrices& derived, const Matrix& c) {
  if (derived.has_dense_modularity()) {
    Matrix out(c.rows(), c.cols());
    out.noalias() = derived.modularity_matrix * c;
    return out;
  }
  Matrix out = derived.adjacency * c;
  const Eigen::RowVectorXd dc = derived.degree.transpose() * c;
  out.noalias() -= derived.degree * dc / derived.two_e;
  return out;
}

double modularity_trace(const DerivedMatrices& derived, const Matrix& c) {
  const Matrix ac = derived.adjacency * c;
  const Eigen::RowVectorXd dc = derived.degree.transpose() * c;
  return c.cwiseProduct(ac).sum() - dc.squaredNorm() / derived.two_e;
}

Matrix coarsened_laplacian(const Matrix& c, const SparseMatrix& laplacian) {
  if (c.rows() != laplacian.rows() || c.cols() < 1) {
    std::ostringstream msg;
    msg << "assignment matrix is " << c.rows() << "x" << c.cols() << " but the Laplacian is "
        << laplacian.rows() << "x" << laplacian.cols();
    throw Error(ErrorKind::DimensionMismatch, kModule, msg.str());
  }
  const Matrix tc = laplacian * c;
  Matrix out(c.cols(), c.cols());
  out.noalias() = c.transpose() * tc;
  return 0.5 * (out + out.transpose());
}

double spectral_norm_estimate(const std::function<Vector(const Vector&)>& apply, Index dim,
                              int max_iters, double tol) {
  if (dim == 0) return 0.0;
  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = normal(rng);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = apply(v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const bool done = it > 0 && std::abs(norm - estimate) <= tol * norm;
    estimate = norm;
    v = w / norm;
    if (done) break;
  }
  return estimate;
}

Matrix one_hot(const Labels& labels, int k) {
  Matrix c = Matrix::Zero(static_cast<Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw Error(ErrorKind::DimensionMismatch, kModule, "label outside [0, k)");
    }
    c(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return c;
}

}  // namespace magc
