#include "magc/sbm.hpp"

#include "magc/error.hpp"

#include <spdlog/spdlog.h>

#include <bit>
#include <cmath>
#include <random>
#include <sstream>

namespace magc {

namespace {

constexpr std::string_view kModule = "sbm";

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::InvalidConfig, kModule, what);
}

double sample_truncated_powerlaw(std::mt19937_64& rng, double exponent, double lo, double hi) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (lo == hi) return lo;
  if (std::abs(exponent - 1.0) < 1e-12) return lo * std::pow(hi / lo, u);
  const double e = 1.0 - exponent;
  const double a = std::pow(lo, e);
  const double b = std::pow(hi, e);
  return std::pow(a + u * (b - a), 1.0 / e);
}

}  // namespace

Matrix block_matrix_from_degrees(int k, double expected_degree, double expected_sub_degree) {
  if (k < 1) invalid("block count must be >= 1");
  if (!(expected_sub_degree >= 0.0) || !(expected_degree > expected_sub_degree)) {
    std::ostringstream msg;
    msg << "need d > d_out >= 0, got d = " << expected_degree << ", d_out = " << expected_sub_degree;
    throw Error(ErrorKind::InvalidDegrees, kModule, msg.str());
  }
  Matrix b = Matrix::Constant(k, k, expected_sub_degree);
  b.diagonal().setConstant(expected_degree - expected_sub_degree);
  return b;
}

void SbmConfig::validate() const {
  if (p < 1) invalid("p must be positive");
  if (k < 1 || k > p) invalid("k must lie in [1, p]");
  if (!block_sizes.empty()) {
    if (static_cast<int>(block_sizes.size()) != k) invalid("block_sizes must have k entries");
    Index total = 0;
    for (Index s : block_sizes) {
      if (s < 1) invalid("block sizes must be positive");
      total += s;
    }
    if (total != p) invalid("block sizes must sum to p");
  }
  if (block_matrix) {
    const Matrix& b = *block_matrix;
    if (b.rows() != k || b.cols() != k) invalid("block_matrix must be k x k");
    if (!b.allFinite() || (b.array() < 0.0).any()) invalid("block_matrix entries must be >= 0");
    if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      invalid("block_matrix must be symmetric");
    }
  }
  if (calibrate_degree && !(expected_degree > 0.0)) invalid("expected_degree must be > 0");
  if (theta) {
    if (theta->size() != p) invalid("theta must have p entries");
    if ((theta->array() <= 0.0).any() || !theta->allFinite()) invalid("theta must be positive");
  } else {
    if (!(theta_min > 0.0) || !(theta_max >= theta_min)) {
      invalid("theta clamps must satisfy 0 < theta_min <= theta_max");
    }
    if (!std::isfinite(powerlaw_exponent)) invalid("powerlaw_exponent must be finite");
  }
  if (feature_dim < 0) invalid("feature_dim must be >= 0");
  if (feature_groups < 1) invalid("feature_groups must be >= 1");
  if (feature_dim > 0 && feature_groups > feature_dim) {
    invalid("feature_groups must not exceed feature_dim");
  }
  if (!(class_sep >= 0.0)) invalid("class_sep must be >= 0");
}

std::vector<Index> SbmConfig::resolved_block_sizes() const {
  if (!block_sizes.empty()) return block_sizes;
  std::vector<Index> sizes(static_cast<std::size_t>(k), p / k);
  for (Index b = 0; b < p % k; ++b) ++sizes[static_cast<std::size_t>(b)];
  return sizes;
}

Matrix SbmConfig::resolved_block_matrix() const {
  if (block_matrix) return *block_matrix;
  return block_matrix_from_degrees(k, expected_degree, expected_sub_degree);
}

Labels planted_labels(const SbmConfig& cfg) {
  Labels labels;
  labels.reserve(static_cast<std::size_t>(cfg.p));
  const auto sizes = cfg.resolved_block_sizes();
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    labels.insert(labels.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b));
  }
  return labels;
}

std::vector<int> feature_groups_for(const Labels& labels, int k, int feature_groups) {
  std::vector<int> groups(labels.size());
  if (feature_groups == k) {
    groups.assign(labels.begin(), labels.end());
    return groups;
  }
  if (feature_groups > k && feature_groups % k == 0) {
    const int split = feature_groups / k;
    std::vector<Index> block_size(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++block_size[static_cast<std::size_t>(l)];
    std::vector<Index> rank(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto b = static_cast<std::size_t>(labels[i]);
      const Index sub = rank[b]++ * split / block_size[b];
      groups[i] = labels[i] * split + static_cast<int>(sub);
    }
    return groups;
  }
  if (feature_groups < k && k % feature_groups == 0) {
    const int merge = k / feature_groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[i] = labels[i] / merge;
    return groups;
  }
  std::ostringstream msg;
  msg << "feature_groups = " << feature_groups << " must divide or be a multiple of k = " << k;
  throw Error(ErrorKind::GroupMismatch, kModule, msg.str());
}

Vector hypercube_vertex(int group, Index dim) {
  Vector v(dim);
  for (Index j = 0; j < dim; ++j) {
    const auto bits = static_cast<unsigned>(group) & static_cast<unsigned>(j);
    v(j) = (std::popcount(bits) % 2 == 0) ? 1.0 : -1.0;
  }
  return v;
}

Matrix generate_features(const Labels& labels, const SbmConfig& cfg) {
  for (int l : labels) {
    if (l < 0 || l >= cfg.k) invalid("labels must lie in [0, k)");
  }
  if (cfg.feature_groups < 1) invalid("feature_groups must be >= 1");
  const std::vector<int> groups = feature_groups_for(labels, cfg.k, cfg.feature_groups);
  const Index n = cfg.feature_dim;
  std::vector<Vector> centers;
  for (int g = 0; g < cfg.feature_groups; ++g) {
    centers.push_back(cfg.class_sep * hypercube_vertex(g, n));
  }
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    0xfea7u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(static_cast<Index>(labels.size()), n);
  for (Index i = 0; i < x.rows(); ++i) {
    const Vector& center = centers[static_cast<std::size_t>(groups[static_cast<std::size_t>(i)])];
    for (Index j = 0; j < n; ++j) x(i, j) = center(j) + normal(rng);
  }
  return x;
}

double SbmInstance::edge_probability(Index i, Index j) const {
  if (i == j) return 0.0;
  const auto& y = graph.labels();
  const double rate = probability_scale * theta_normalized(i) * theta_normalized(j) *
                      block_matrix(y[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(j)]);
  return std::min(1.0, rate);
}

SbmInstance generate(const SbmConfig& cfg) {
  cfg.validate();
  const Index p = cfg.p;
  const Labels labels = planted_labels(cfg);
  const Matrix block = cfg.resolved_block_matrix();
  const auto sizes = cfg.resolved_block_sizes();

  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    0x5b3u};
  std::mt19937_64 rng(seq);

  Vector theta(p);
  if (cfg.theta) {
    theta = *cfg.theta;
  } else {
    for (Index i = 0; i < p; ++i) {
      const double t =
          sample_truncated_powerlaw(rng, cfg.powerlaw_exponent, cfg.theta_min, cfg.theta_max);
      theta(i) = std::clamp(t, cfg.theta_min, cfg.theta_max);
    }
  }

  Vector block_mean = Vector::Zero(cfg.k);
  for (Index i = 0; i < p; ++i) block_mean(labels[static_cast<std::size_t>(i)]) += theta(i);
  for (int b = 0; b < cfg.k; ++b) block_mean(b) /= static_cast<double>(sizes[static_cast<std::size_t>(b)]);
  Vector theta_norm(p);
  for (Index i = 0; i < p; ++i) theta_norm(i) = theta(i) / block_mean(labels[static_cast<std::size_t>(i)]);

  double scale = 1.0;
  if (cfg.calibrate_degree) {
    Vector mass = Vector::Zero(cfg.k);
    double self = 0.0;
    for (Index i = 0; i < p; ++i) {
      const int y = labels[static_cast<std::size_t>(i)];
      mass(y) += theta_norm(i);
      self += theta_norm(i) * theta_norm(i) * block(y, y);
    }
    const double expected_degree_sum = mass.dot(block * mass) - self;
    if (!(expected_degree_sum > 0.0)) invalid("block matrix yields no edges");
    scale = cfg.expected_degree * static_cast<double>(p) / expected_degree_sum;
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Eigen::Triplet<double>> triplets;
  Index clipped = 0;
  for (Index i = 0; i < p; ++i) {
    const int yi = labels[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < p; ++j) {
      const int yj = labels[static_cast<std::size_t>(j)];
      double prob = scale * theta_norm(i) * theta_norm(j) * block(yi, yj);
      if (prob > 1.0) {
        prob = 1.0;
        ++clipped;
      }
      if (prob > 0.0 && unif(rng) < prob) {
        triplets.emplace_back(i, j, 1.0);
        triplets.emplace_back(j, i, 1.0);
      }
    }
  }
  if (clipped > 0) {
    spdlog::warn("sbm: {} node pairs had edge probability > 1 and were clipped", clipped);
  }
  SparseMatrix adjacency(p, p);
  adjacency.setFromTriplets(triplets.begin(), triplets.end());

  std::optional<Matrix> features;
  if (cfg.feature_dim > 0) features = generate_features(labels, cfg);

  SbmInstance out{AttributedGraph(std::move(adjacency), std::move(features), labels),
                  theta,
                  theta_norm,
                  block,
                  scale,
                  clipped,
                  static_cast<double>(triplets.size()) / static_cast<double>(p),
                  feature_groups_for(labels, cfg.k, cfg.feature_groups)};
  spdlog::debug("sbm: probability scale {:.6g}, realized mean degree {:.4f}", scale,
                out.realized_mean_degree);
  return out;
}

}  // namespace magc
