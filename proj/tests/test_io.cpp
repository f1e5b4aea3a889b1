#include "fixtures.hpp"

#include "magc/error.hpp"
#include "magc/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace magc;
namespace fs = std::filesystem;

namespace {

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no magc::Error thrown";
  return Error(ErrorKind::IoError, "test", "none");
}

EdgeList parse(const std::string& text, NodeIdMode mode = NodeIdMode::Auto) {
  std::istringstream in(text);
  return parse_edge_list(in, EdgeListOptions{mode, 0});
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("magc_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name, const std::string& contents) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << contents;
    return p;
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

TEST(EdgeList, ParsesPath) {
  const EdgeList e = parse("# path\n0 1\n1,2\n\n");
  ASSERT_EQ(e.adjacency.rows(), 3);
  EXPECT_FALSE(e.string_ids);
  Matrix expected(3, 3);
  expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  EXPECT_TRUE(Matrix(e.adjacency).isApprox(expected, 0.0));
}

TEST(EdgeList, RepeatedPairsAccumulate) {
  const EdgeList e = parse("0 1 2\n1 0 3\n");
  EXPECT_DOUBLE_EQ(e.adjacency.coeff(0, 1), 5.0);
  EXPECT_DOUBLE_EQ(e.adjacency.coeff(1, 0), 5.0);
}

TEST(EdgeList, Errors) {
  EXPECT_EQ(error_of([] { parse("0 1\n2 2\n"); }).kind(), ErrorKind::SelfLoop);
  EXPECT_EQ(error_of([] { parse("0 1 -1\n"); }).kind(), ErrorKind::NegativeWeight);
  const Error bad = error_of([] { parse("0 1\n0 1 x\n"); });
  EXPECT_EQ(bad.kind(), ErrorKind::ParseError);
  EXPECT_NE(bad.detail().find("line 2"), std::string::npos) << bad.detail();
  EXPECT_EQ(error_of([] { parse("0\n"); }).kind(), ErrorKind::ParseError);
  EXPECT_EQ(error_of([] { parse("a b\n", NodeIdMode::Integer); }).kind(), ErrorKind::ParseError);
}

TEST(EdgeList, StringIdsInFirstSeenOrder) {
  const EdgeList e = parse("bob alice\nalice carol 2\n");
  ASSERT_TRUE(e.string_ids);
  EXPECT_EQ(e.node_names, (std::vector<std::string>{"bob", "alice", "carol"}));
  EXPECT_DOUBLE_EQ(e.adjacency.coeff(1, 2), 2.0);
  EXPECT_DOUBLE_EQ(e.adjacency.coeff(0, 1), 1.0);

  // Forced string mode keeps numeric tokens as names.
  const EdgeList s = parse("10 20\n", NodeIdMode::String);
  EXPECT_EQ(s.adjacency.rows(), 2);
  EXPECT_EQ(s.node_names, (std::vector<std::string>{"10", "20"}));
}

TEST(Features, CsvWithHeader) {
  std::istringstream in("a,b\n1,2\n3.5,-4\n");
  const Matrix x = parse_features_csv(in);
  Matrix expected(2, 2);
  expected << 1, 2, 3.5, -4;
  EXPECT_TRUE(x.isApprox(expected, 0.0));

  std::istringstream ragged("1,2\n3\n");
  EXPECT_EQ(error_of([&] { parse_features_csv(ragged); }).kind(), ErrorKind::ParseError);
}

TEST(Labels, ParseAndReject) {
  std::istringstream in("0\n2\n1\n");
  EXPECT_EQ(parse_labels(in), (Labels{0, 2, 1}));
  std::istringstream bad("0\n-1\n");
  EXPECT_EQ(error_of([&] { parse_labels(bad); }).kind(), ErrorKind::ParseError);
}

TEST(Bundle, CrossValidatesSizes) {
  TempDir dir;
  const auto edges = dir.file("edges.txt", "0 1\n1 2\n");
  const auto labels = dir.file("labels.txt", "0\n1\n");
  const Error e = error_of([&] { load_bundle({edges, std::nullopt, labels}, "p3"); });
  EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);

  // Trailing isolated nodes come from a taller feature file.
  const auto features = dir.file("features.csv", "1\n2\n3\n4\n");
  const DatasetBundle b = load_bundle({edges, features, std::nullopt}, "p3");
  EXPECT_EQ(b.graph.node_count(), 4);
  EXPECT_EQ(b.name, "p3");

  EXPECT_EQ(error_of([&] { load_bundle({dir.path() / "missing.txt", std::nullopt, std::nullopt}, "x"); })
                .kind(),
            ErrorKind::IoError);
}

TEST(DegreeOnehot, Examples) {
  Matrix path(3, 2);
  path << 1, 0, 0, 1, 1, 0;
  EXPECT_TRUE(degree_onehot(fixture::path3()).isApprox(path, 0.0));
  EXPECT_TRUE(degree_onehot(fixture::cycle4()).isApprox(Matrix::Ones(4, 1), 0.0));
  const Matrix star = degree_onehot(fixture::star5());
  ASSERT_EQ(star.cols(), 2);
  EXPECT_DOUBLE_EQ(star(0, 1), 1.0);
  for (Index i = 1; i < 5; ++i) EXPECT_DOUBLE_EQ(star(i, 0), 1.0);
}

TEST(RoundTrip, WriteThenParseIsIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Index p = 5 + trial;
    std::vector<Edge> edges;
    for (Index i = 0; i + 1 < p; ++i) edges.push_back({i, i + 1, 0.25 + u(rng)});
    const AttributedGraph g = AttributedGraph::from_edges(p, edges);
    std::ostringstream out;
    write_edge_list(out, g.adjacency());
    std::istringstream in(out.str());
    const EdgeList back = parse_edge_list(in);
    EXPECT_TRUE(Matrix(back.adjacency).isApprox(Matrix(g.adjacency()), 1e-11));

    Matrix x(p, 3);
    for (Index i = 0; i < x.size(); ++i) x(i) = u(rng) - 0.5;
    std::ostringstream xo;
    write_features_csv(xo, x);
    std::istringstream xi(xo.str());
    EXPECT_TRUE(parse_features_csv(xi).isApprox(x, 1e-11));

    Labels l{0, 3, 1};
    std::ostringstream lo;
    write_labels(lo, l);
    std::istringstream li(lo.str());
    EXPECT_EQ(parse_labels(li), l);
  }
}

TEST(FormatNumber, UsesTwelveSignificantDigits) {
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
}
