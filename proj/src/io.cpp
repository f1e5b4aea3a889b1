#include "magc/io.hpp"

#include "magc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <unordered_map>

namespace magc {

namespace {

constexpr std::string_view kModule = "io";

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ": " << what;
  throw Error(ErrorKind::ParseError, kModule, msg.str());
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_sep(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view strip_comment(std::string_view line) {
  const auto pos = line.find('#');
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

std::optional<double> to_double(std::string_view token) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<long long> to_index(std::string_view token) {
  long long value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || value < 0) return std::nullopt;
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, kModule, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, kModule, "cannot write " + path.string());
  return out;
}

struct RawEdge {
  std::string u;
  std::string v;
  double weight;
  std::size_t line;
};

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

EdgeList parse_edge_list(std::istream& in, const EdgeListOptions& options) {
  std::vector<RawEdge> raw;
  std::string line;
  std::size_t line_no = 0;
  bool all_integer = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(strip_comment(line));
    if (fields.empty()) continue;
    if (fields.size() != 2 && fields.size() != 3) {
      parse_error(line_no, "expected 'u v' or 'u v w', got " + std::to_string(fields.size()) +
                               " fields");
    }
    double weight = 1.0;
    if (fields.size() == 3) {
      const auto w = to_double(fields[2]);
      if (!w || !std::isfinite(*w)) parse_error(line_no, "invalid weight '" + std::string(fields[2]) + "'");
      if (*w < 0.0) {
        std::ostringstream msg;
        msg << "line " << line_no << ": negative weight " << *w;
        throw Error(ErrorKind::NegativeWeight, kModule, msg.str());
      }
      weight = *w;
    }
    if (!to_index(fields[0]) || !to_index(fields[1])) all_integer = false;
    raw.push_back({std::string(fields[0]), std::string(fields[1]), weight, line_no});
  }

  const bool integer_ids = options.id_mode == NodeIdMode::Integer ||
                           (options.id_mode == NodeIdMode::Auto && all_integer);
  EdgeList out;
  out.string_ids = !integer_ids;
  std::vector<std::pair<Index, Index>> ends;
  ends.reserve(raw.size());
  Index node_count = options.min_nodes;
  if (integer_ids) {
    for (const RawEdge& e : raw) {
      const auto u = to_index(e.u);
      const auto v = to_index(e.v);
      if (!u || !v) parse_error(e.line, "node ids must be nonnegative integers");
      ends.emplace_back(static_cast<Index>(*u), static_cast<Index>(*v));
      node_count = std::max<Index>(node_count, std::max(*u, *v) + 1);
    }
  } else {
    std::unordered_map<std::string, Index> ids;
    auto intern = [&](const std::string& name) {
      auto [it, inserted] = ids.emplace(name, static_cast<Index>(out.node_names.size()));
      if (inserted) out.node_names.push_back(name);
      return it->second;
    };
    for (const RawEdge& e : raw) {
      const Index u = intern(e.u);
      const Index v = intern(e.v);
      ends.emplace_back(u, v);
    }
    node_count = std::max<Index>(node_count, static_cast<Index>(out.node_names.size()));
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(raw.size() * 2);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto [u, v] = ends[i];
    if (u == v) {
      std::ostringstream msg;
      msg << "line " << raw[i].line << ": self-loop on node '" << raw[i].u << "'";
      throw Error(ErrorKind::SelfLoop, kModule, msg.str());
    }
    triplets.emplace_back(u, v, raw[i].weight);
    triplets.emplace_back(v, u, raw[i].weight);
  }
  out.adjacency.resize(node_count, node_count);
  out.adjacency.setFromTriplets(triplets.begin(), triplets.end());
  out.adjacency.prune(0.0);
  out.adjacency.makeCompressed();
  return out;
}

EdgeList load_edge_list(const std::filesystem::path& path, const EdgeListOptions& options) {
  auto in = open_input(path);
  try {
    return parse_edge_list(in, options);
  } catch (const Error& e) {
    throw Error(e.kind(), kModule, path.string() + ": " + e.detail());
  }
}

Matrix parse_features_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (auto f : fields) {
      const auto value = to_double(f);
      if (!value) {
        numeric = false;
        break;
      }
      row.push_back(*value);
    }
    if (!numeric) {
      if (rows.empty() && width == 0) {
        width = fields.size();  // header
        continue;
      }
      parse_error(line_no, "non-numeric feature value");
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      parse_error(line_no, "expected " + std::to_string(width) + " columns, got " +
                               std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  Matrix x(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return x;
}

Matrix load_features_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_features_csv(in);
  } catch (const Error& e) {
    throw Error(e.kind(), kModule, path.string() + ": " + e.detail());
  }
}

Labels parse_labels(std::istream& in) {
  Labels labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(strip_comment(line));
    if (fields.empty()) continue;
    if (fields.size() != 1) parse_error(line_no, "expected one label per line");
    const auto value = to_index(fields[0]);
    if (!value || *value > std::numeric_limits<int>::max()) {
      parse_error(line_no, "invalid label '" + std::string(fields[0]) + "'");
    }
    labels.push_back(static_cast<int>(*value));
  }
  return labels;
}

Labels load_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_labels(in);
  } catch (const Error& e) {
    throw Error(e.kind(), kModule, path.string() + ": " + e.detail());
  }
}

DatasetBundle load_bundle(const DatasetPaths& paths, std::string name,
                          const EdgeListOptions& options) {
  std::optional<Matrix> features;
  if (paths.features) features = load_features_csv(*paths.features);
  std::optional<Labels> labels;
  if (paths.labels) labels = load_labels(*paths.labels);

  EdgeListOptions edge_options = options;
  EdgeList edges = load_edge_list(paths.edges, edge_options);
  if (!edges.string_ids && features && features->rows() > edges.adjacency.rows()) {
    edge_options.min_nodes = features->rows();
    edges = load_edge_list(paths.edges, edge_options);
  }
  const Index p = edges.adjacency.rows();
  if (features && features->rows() != p) {
    std::ostringstream msg;
    msg << "features have " << features->rows() << " rows but the graph has " << p << " nodes";
    throw Error(ErrorKind::DimensionMismatch, kModule, msg.str());
  }
  if (labels && static_cast<Index>(labels->size()) != p) {
    std::ostringstream msg;
    msg << "labels have " << labels->size() << " entries but the graph has " << p << " nodes";
    throw Error(ErrorKind::DimensionMismatch, kModule, msg.str());
  }
  return DatasetBundle{AttributedGraph(std::move(edges.adjacency), std::move(features), std::move(labels)),
                       std::move(name), paths, std::move(edges.node_names)};
}

Matrix degree_onehot(const AttributedGraph& graph) {
  const Vector degree = graph.adjacency() * Vector::Ones(graph.node_count());
  std::map<long long, Index> columns;
  std::vector<long long> rounded(static_cast<std::size_t>(degree.size()));
  for (Index i = 0; i < degree.size(); ++i) {
    rounded[static_cast<std::size_t>(i)] = std::llround(degree(i));
    columns.emplace(rounded[static_cast<std::size_t>(i)], 0);
  }
  Index next = 0;
  for (auto& [deg, col] : columns) col = next++;
  Matrix x = Matrix::Zero(degree.size(), next);
  for (Index i = 0; i < degree.size(); ++i) x(i, columns[rounded[static_cast<std::size_t>(i)]]) = 1.0;
  return x;
}

void write_edge_list(std::ostream& out, const SparseMatrix& adjacency) {
  std::vector<std::tuple<Index, Index, double>> edges;
  for (Index col = 0; col < adjacency.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(adjacency, col); it; ++it) {
      if (it.row() < it.col()) edges.emplace_back(it.row(), it.col(), it.value());
    }
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& [u, v, w] : edges) out << u << ' ' << v << ' ' << format_number(w) << '\n';
}

void write_features_csv(std::ostream& out, const Matrix& features) {
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index j = 0; j < features.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_number(features(i, j));
    }
    out << '\n';
  }
}

void write_labels(std::ostream& out, const Labels& labels) {
  for (int l : labels) out << l << '\n';
}

void save_edge_list(const std::filesystem::path& path, const SparseMatrix& adjacency) {
  auto out = open_output(path);
  write_edge_list(out, adjacency);
}

void save_features_csv(const std::filesystem::path& path, const Matrix& features) {
  auto out = open_output(path);
  write_features_csv(out, features);
}

void save_labels(const std::filesystem::path& path, const Labels& labels) {
  auto out = open_output(path);
  write_labels(out, labels);
}

}  // namespace magc
