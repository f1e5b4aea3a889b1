#pragma once

#include "magc/graph.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace magc {

enum class NodeIdMode {
  Auto,     ///< integers when every id token is a nonnegative integer, strings otherwise
  Integer,  ///< ids are 0-based node indices
  String,   ///< ids are names mapped to dense indices in first-seen order
};

struct EdgeListOptions {
  NodeIdMode id_mode = NodeIdMode::Auto;
  /// Lower bound on the node count (isolated trailing nodes in integer mode).
  Index min_nodes = 0;
};

struct EdgeList {
  SparseMatrix adjacency;
  /// Original id of every node; filled in string mode only.
  std::vector<std::string> node_names;
  bool string_ids = false;
};

/// "u v" or "u v w" per line, whitespace or comma separated, '#' comments.
/// Every line adds weight w to both A(u,v) and A(v,u); repeated pairs accumulate.
EdgeList parse_edge_list(std::istream& in, const EdgeListOptions& options = {});
EdgeList load_edge_list(const std::filesystem::path& path, const EdgeListOptions& options = {});

/// Numeric CSV; a first row that does not parse as numbers is treated as a header.
Matrix parse_features_csv(std::istream& in);
Matrix load_features_csv(const std::filesystem::path& path);

/// One nonnegative integer per line.
Labels parse_labels(std::istream& in);
Labels load_labels(const std::filesystem::path& path);

struct DatasetPaths {
  std::filesystem::path edges;
  std::optional<std::filesystem::path> features;
  std::optional<std::filesystem::path> labels;
};

struct DatasetBundle {
  AttributedGraph graph;
  std::string name;
  DatasetPaths source_paths;
  std::vector<std::string> node_names;
};

/// Loads and cross-validates edges, features and labels. In integer-id mode a
/// feature file with more rows than the largest node id adds isolated nodes.
DatasetBundle load_bundle(const DatasetPaths& paths, std::string name,
                          const EdgeListOptions& options = {});

/// One-hot encoding of the (rounded) degree; columns in ascending degree order.
Matrix degree_onehot(const AttributedGraph& graph);

/// Canonical forms: "u v w" with u < v in sorted order and weights as %.12g,
/// CSV rows with %.12g entries, one label per line.
void write_edge_list(std::ostream& out, const SparseMatrix& adjacency);
void write_features_csv(std::ostream& out, const Matrix& features);
void write_labels(std::ostream& out, const Labels& labels);

void save_edge_list(const std::filesystem::path& path, const SparseMatrix& adjacency);
void save_features_csv(const std::filesystem::path& path, const Matrix& features);
void save_labels(const std::filesystem::path& path, const Labels& labels);

/// printf("%.12g").
std::string format_number(double value);

}  // namespace magc
