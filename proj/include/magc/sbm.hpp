#pragma once

#include "magc/graph.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace magc {

/// Block matrix with `d - d_out` on the diagonal and `d_out` elsewhere.
Matrix block_matrix_from_degrees(int k, double expected_degree, double expected_sub_degree);

/// Degree-corrected SBM with Gaussian hypercube features.
struct SbmConfig {
  Index p = 1000;
  int k = 4;
  /// Empty means equal sizes (the first p mod k blocks get one extra node).
  std::vector<Index> block_sizes;
  /// Explicit k x k rate matrix. When absent it is built from the degree pair.
  std::optional<Matrix> block_matrix;
  double expected_degree = 20.0;
  double expected_sub_degree = 2.0;
  /// Rescale edge probabilities so the expected mean degree equals
  /// `expected_degree`. Without it the block matrix holds raw probabilities.
  bool calibrate_degree = true;

  double powerlaw_exponent = 2.0;
  double theta_min = 2.0;
  double theta_max = 4.0;
  /// Fixed degree parameters (length p); when set no theta is sampled.
  std::optional<Vector> theta;

  Index feature_dim = 128;
  int feature_groups = 4;
  double class_sep = 1.0;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig on inconsistent fields.
  void validate() const;
  std::vector<Index> resolved_block_sizes() const;
  Matrix resolved_block_matrix() const;
};

struct SbmInstance {
  AttributedGraph graph;
  /// Raw degree parameters, each in [theta_min, theta_max].
  Vector theta;
  /// theta divided by its block mean (mean 1 within every block).
  Vector theta_normalized;
  Matrix block_matrix;
  /// Multiplier applied to theta_i theta_j B_ab before clipping at 1.
  double probability_scale = 1.0;
  Index clipped_pairs = 0;
  double realized_mean_degree = 0.0;
  std::vector<int> feature_group;

  /// min(1, scale * theta_i theta_j B[y_i, y_j]) for i != j.
  double edge_probability(Index i, Index j) const;
};

/// Planted block labels in index order (block 0 first).
Labels planted_labels(const SbmConfig& cfg);

/// Feature group of every node: matched (k_f == k), nested (k_f a multiple of k)
/// or grouped (k a multiple of k_f).
std::vector<int> feature_groups_for(const Labels& labels, int k, int feature_groups);

/// +-1 vertex of the n-dimensional hypercube assigned to a feature group.
Vector hypercube_vertex(int group, Index dim);

Matrix generate_features(const Labels& labels, const SbmConfig& cfg);

SbmInstance generate(const SbmConfig& cfg);

}  // namespace magc
