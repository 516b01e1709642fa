// Copyright 2026 The Vulnspace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "vulnspace/theory.hpp"

#include "graphml_check.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <random>
#include <sstream>

namespace th = vulnspace::theory;
using vulnspace::Index;
using vulnspace::MatrixXr;
using vulnspace::VectorXr;
using th::Formula;
using th::Term;

namespace {

// exists(x) = x[0]; co(x, y) looks up a table by the row numbers stored in x[0], y[0].
struct TableModel : th::Interpretation {
  MatrixXr table;
  VectorXr exists(const MatrixXr& x) const override { return x.col(0); }
  VectorXr co(const MatrixXr& x, const MatrixXr& y) const override {
    VectorXr out(x.rows());
    for (Index i = 0; i < x.rows(); ++i)
      out(i) = table(static_cast<Index>(x(i, 0)), static_cast<Index>(y(i, 0)));
    return out;
  }
};

th::Instantiation unary(std::vector<double> values) {
  th::Instantiation at;
  at.u = Eigen::Map<VectorXr>(values.data(), static_cast<Index>(values.size()));
  return at;
}

TableModel five_node_model() {
  TableModel m;
  m.table = MatrixXr::Constant(5, 5, 0.1);
  const auto set = [&](Index a, Index b, double p) { m.table(a, b) = m.table(b, a) = p; };
  set(0, 1, 0.9);
  set(0, 2, 0.8);
  set(0, 3, 0.75);
  set(1, 2, 0.95);
  set(3, 4, 0.72);
  return m;
}

MatrixXr row_numbers(Index n) {
  MatrixXr x(n, 1);
  for (Index i = 0; i < n; ++i) x(i, 0) = static_cast<double>(i);
  return x;
}

th::TheoryModel random_model(Index dim, std::uint64_t seed) {
  th::TheoryModel m;
  const std::vector<vulnspace::nn::LayerSpec> specs{{5, vulnspace::nn::Activation::relu},
                                                    {1, vulnspace::nn::Activation::sigmoid}};
  m.exists_net = vulnspace::nn::DenseNet<double>::build(dim, specs, seed);
  m.relation = th::CoRelation::init(dim, 3, seed + 1);
  std::mt19937_64 rng(seed + 2);
  std::normal_distribution<double> n(0.0, 0.3);
  for (Index i = 0; i < dim; ++i) {
    m.relation.wa(i) = n(rng);
    m.relation.wb(i) = n(rng);
  }
  m.relation.b = 0.2;
  return m;
}

}  // namespace

TEST(Connectives, HandValues) {
  TableModel m;
  const auto p = Formula::exists(Term::u);
  EXPECT_DOUBLE_EQ(th::soft_satisfaction(Formula::conjunction(p, p), m, unary({0.5})), 0.25);
  EXPECT_DOUBLE_EQ(th::soft_satisfaction(p, m, unary({0.8, 0.8, 0.8})), 0.8);
  EXPECT_DOUBLE_EQ(th::soft_satisfaction(Formula::implication(p, Formula::constant(0.3)), m, unary({0.0})), 1.0);
  EXPECT_DOUBLE_EQ(th::soft_satisfaction(Formula::negation(p), m, unary({0.25})), 0.75);
  EXPECT_NEAR(th::soft_satisfaction(Formula::implication(p, Formula::constant(0.3)), m, unary({0.6})), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(th::t_iff(0.5, 0.5), 1.0);
}

TEST(Connectives, TautologyHoldsOnGrid) {
  TableModel m;
  const auto p = Formula::exists(Term::u);
  const auto taut = Formula::disjunction(p, Formula::negation(p));
  for (int i = 0; i <= 100; ++i) {
    const double v = i / 100.0;
    EXPECT_GE(th::soft_satisfaction(taut, m, unary({v})), 0.75 - 1e-12) << v;
  }
}

TEST(CoRelation, SymmetricBitForBit) {
  auto r = th::CoRelation::init(6, 3, 4);
  r.wa.setRandom();
  r.wb.setRandom();
  const MatrixXr x = MatrixXr::Random(20, 6), y = MatrixXr::Random(20, 6);
  const VectorXr a = r(x, y), b = r(y, x);
  for (Index i = 0; i < a.size(); ++i) EXPECT_EQ(a(i), b(i));
  EXPECT_EQ(r.rank(), 3);
  EXPECT_EQ(r.dim(), 6);
}

TEST(Axioms, LibraryAndBounds) {
  const auto lib = th::axiom_library();
  ASSERT_EQ(lib.size(), 5u);
  EXPECT_EQ(lib[0].id, "A1");
  EXPECT_DOUBLE_EQ(lib[4].bound, 0.7);
  const auto custom = th::axiom_library({{"A3", 0.5}});
  EXPECT_DOUBLE_EQ(custom[2].bound, 0.5);
  EXPECT_THROW(th::axiom_library({{"A9", 0.5}}), vulnspace::InvalidArgument);
  EXPECT_EQ(th::bounds_from_json(th::bounds_to_json(custom)).at("A3"), 0.5);
}

TEST(Graph, FiveNodeHandCount) {
  const auto m = five_node_model();
  const std::vector<std::string> ids{"CVE-2020-0000", "CVE-2020-0001", "CVE-2020-0002", "CVE-2020-0003",
                                     "CVE-2020-0004"};
  const auto g = th::extract_graph(m, row_numbers(5), ids, {}, 0.7, 10);
  ASSERT_EQ(g.edges.size(), 5u);
  ASSERT_EQ(g.nodes.size(), 5u);
  const std::vector<std::pair<Index, int>> expected{{0, 3}, {1, 2}, {2, 2}, {3, 2}, {4, 1}};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(g.nodes[i].row, expected[i].first);
    EXPECT_EQ(g.nodes[i].degree, expected[i].second);
  }
  EXPECT_EQ(g.nodes[0].cve_id, "CVE-2020-0000");
  EXPECT_EQ(g.edges[0].a, 0);
  EXPECT_EQ(g.edges[0].b, 1);
  EXPECT_DOUBLE_EQ(g.edges[0].probability, 0.9);

  const auto high = th::filter_graph(g, 0.85);
  EXPECT_EQ(high.edges.size(), 2u);
  EXPECT_EQ(high.nodes.size(), 3u);
  EXPECT_EQ(high.nodes[0].row, 1);
  EXPECT_EQ(high.nodes[0].cve_id, "CVE-2020-0001");
  EXPECT_THROW(th::filter_graph(g, 0.5), vulnspace::InvalidArgument);
}

TEST(Graph, MaxNodesKeepsTopDegree) {
  const auto g = th::extract_graph(five_node_model(), row_numbers(5), {}, {}, 0.7, 2);
  ASSERT_EQ(g.nodes.size(), 2u);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.nodes[0].row, 0);
  EXPECT_EQ(g.nodes[1].row, 1);
  EXPECT_EQ(g.nodes[0].degree, 1);
}

TEST(Graph, EmptyCarriesAdvisoryAndThresholdChecked) {
  const auto g = th::extract_graph(five_node_model(), row_numbers(5), {}, {}, 0.99, 10);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_FALSE(g.advisory.empty());
  EXPECT_THROW(th::extract_graph(five_node_model(), row_numbers(5), {}, {}, 0.0, 10), vulnspace::InvalidArgument);
  EXPECT_THROW(th::extract_graph(five_node_model(), row_numbers(5), {}, {}, 1.5, 10), vulnspace::InvalidArgument);
}

TEST(Graph, GraphmlValidates) {
  const std::vector<std::string> descs{"a <b> & \"c\"", "d", "e", "f", "g"};
  const auto g = th::extract_graph(five_node_model(), row_numbers(5), {}, descs, 0.7, 10);
  std::ostringstream out;
  th::write_graphml(out, g);
  EXPECT_EQ(vulnspace::testing::validate_graphml(out.str()), "");
  EXPECT_NE(out.str().find("&lt;b&gt;"), std::string::npos);
  const auto j = th::to_json(g);
  EXPECT_EQ(j["edges"].size(), 5u);
}

TEST(Excerpt, Utf8Safe) {
  EXPECT_EQ(th::excerpt("short"), "short");
  const std::string accented(60, 'a');
  const std::string text = accented + "\xC3\xA9\xC3\xA9\xC3\xA9" + std::string(100, 'b');
  const auto e = th::excerpt(text, 61);
  EXPECT_LE(e.size(), 64u);
  // No dangling continuation byte at the cut.
  EXPECT_NE(static_cast<unsigned char>(e[60]) & 0xC0, 0x80);
}

TEST(SatisfactionGradient, MatchesFiniteDifferences) {
  const Index dim = 4;
  const auto m = random_model(dim, 3);
  std::mt19937_64 rng(5);
  const MatrixXr x = MatrixXr::Random(12, dim);
  const double h = 1e-6;
  for (const auto& ax : th::axiom_library()) {
    const auto at = th::instantiate(ax.domain, x, 16, 0.05, rng);
    auto g = th::ModelGradient::zeros_like(m);
    const double sat = th::satisfaction_gradient(ax.formula, m, at, 1.0, g);
    EXPECT_NEAR(sat, th::soft_satisfaction(ax.formula, m, at), 1e-12) << ax.id;
    ASSERT_TRUE(g.all_finite());

    const auto numeric = [&](auto&& poke) {
      auto plus = m, minus = m;
      poke(plus, h);
      poke(minus, -h);
      return (th::soft_satisfaction(ax.formula, plus, at) - th::soft_satisfaction(ax.formula, minus, at)) / (2 * h);
    };
    const auto close = [&](double analytic, double fd, const std::string& what) {
      EXPECT_NEAR(analytic, fd, 1e-6 + 1e-4 * std::abs(fd)) << ax.id << " " << what;
    };
    for (Index r = 0; r < dim; ++r) {
      for (Index c = 0; c < m.relation.rank(); ++c) {
        close(g.w1(r, c), numeric([&](th::TheoryModel& t, double d) { t.relation.w1(r, c) += d; }), "w1");
        close(g.w2(r, c), numeric([&](th::TheoryModel& t, double d) { t.relation.w2(r, c) += d; }), "w2");
      }
      close(g.wa(r), numeric([&](th::TheoryModel& t, double d) { t.relation.wa(r) += d; }), "wa");
      close(g.wb(r), numeric([&](th::TheoryModel& t, double d) { t.relation.wb(r) += d; }), "wb");
      for (Index c = 0; c < 5; ++c)
        close(g.exists.weight[0](r, c),
              numeric([&](th::TheoryModel& t, double d) { t.exists_net.layer(0).weight(r, c) += d; }), "exists w0");
    }
    close(g.b, numeric([&](th::TheoryModel& t, double d) { t.relation.b += d; }), "b");
    close(g.exists.bias[1](0), numeric([&](th::TheoryModel& t, double d) { t.exists_net.layer(1).bias(0) += d; }),
          "exists b1");
  }
}

TEST(Synthesis, ImprovesAndRoundTrips) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.3);
  MatrixXr x(60, 4);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index c = 0; c < 4; ++c) x(i, c) = n(rng) + (c == i % 2 ? 1.0 : 0.0);
    x.row(i).normalize();
  }
  th::SynthesisConfig cfg;
  cfg.epochs = 80;
  cfg.eval_samples = 256;
  cfg.seeds = {0};
  cfg.rank = 0;
  const auto models = th::synthesize(x, th::axiom_library(), cfg);
  ASSERT_EQ(models.size(), 1u);
  const auto& m = models[0];
  EXPECT_EQ(m.relation.rank(), 4);
  ASSERT_EQ(m.results.size(), 5u);
  EXPECT_DOUBLE_EQ(m.result("A2")->satisfaction, 1.0);
  EXPECT_GT(m.result("A3")->satisfaction, 0.9);
  EXPECT_LT(m.objective_trace.front(), m.objective_trace.back());

  const auto path = std::filesystem::temp_directory_path() / "vulnspace_theory_test.vthy";
  th::save_model(path, m);
  const auto back = th::load_model(path);
  EXPECT_EQ(back.results, m.results);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_TRUE(back.relation.w1.isApprox(m.relation.w1, 1e-12));
  const MatrixXr probe = x.topRows(5);
  EXPECT_TRUE(back.exists(probe).isApprox(m.exists(probe), 1e-12));
  std::filesystem::remove(path);
}
