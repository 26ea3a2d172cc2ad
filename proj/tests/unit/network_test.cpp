#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "generators.hpp"
#include "ttlnet/errors.hpp"
#include "ttlnet/network.hpp"
#include "ttlnet/topology.hpp"

namespace ttlnet {
namespace {

std::string data(const char* name) { return std::string(TTLNET_TEST_DATA_DIR) + "/" + name; }

std::string binary_tree(unsigned height) {
  // Complete binary tree; leaves carry Poisson(1) arrivals, every TTL exp(1).
  std::string nodes;
  std::string arrivals;
  unsigned next = 0;
  std::function<std::string(unsigned)> build = [&](unsigned level) -> std::string {
    const std::string id = "v" + std::to_string(next++);
    std::string children;
    if (level + 1 < height) {
      const auto a = build(level + 1);
      const auto b = build(level + 1);
      children = R"(, "children": [")" + a + R"(", ")" + b + R"("])";
    } else {
      arrivals += std::string(arrivals.empty() ? "" : ", ") + "\"" + id + R"(": {"poisson": 1})";
    }
    nodes += std::string(nodes.empty() ? "" : ", ") + R"({"id": ")" + id +
             R"(", "policy": "R", "ttl": {"exp": 1})" + children + "}";
    return id;
  };
  build(0);
  return R"({"nodes": [)" + nodes + R"(], "arrivals": {)" + arrivals + "}}";
}

TEST(ParseTopology, LineOfTwoCaches) {
  const auto t = load_topology(data("line2.json"));
  ASSERT_EQ(t.nodes().size(), 2u);
  EXPECT_TRUE(t.is_leaf(t.index_of("C1")));
  EXPECT_FALSE(t.is_leaf(t.index_of("C2")));
  EXPECT_EQ(t.nodes()[t.index_of("C2")].policy, Policy::Sigma);
  EXPECT_EQ(t.order(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(t.objects().size(), 1u);
  EXPECT_EQ(t.objects()[0].id, "default");
}

TEST(ParseTopology, TreeOfThreeCaches) {
  const auto t = load_topology(data("tree3.json"));
  EXPECT_EQ(t.nodes().size(), 3u);
  const auto root = t.index_of("C3");
  EXPECT_EQ(t.children_of(root).size(), 2u);
  EXPECT_EQ(t.parents(t.index_of("C1")), std::vector<std::size_t>{root});
}

TEST(ParseTopology, SplitNotStochastic) {
  try {
    load_topology(data("bad_split.json"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "nodes[0].split");
    EXPECT_NE(std::string(e.what()).find("split not stochastic"), std::string::npos);
  }
}

TEST(ParseTopology, StructuralErrors) {
  const auto expect_error = [](const std::string& doc, const std::string& fragment) {
    try {
      parse_topology(doc);
      ADD_FAILURE() << "accepted: " << doc;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error(R"({"nodes": [{"id": "a", "policy": "R", "ttl": {"exp": 1}, "children": ["a"]}]})", "cycle");
  expect_error(R"({"nodes": [{"id": "a", "policy": "R", "ttl": {"exp": 1}, "children": ["b"]},
                              {"id": "b", "policy": "R", "ttl": {"exp": 1}, "children": ["a"]}]})",
               "cycle");
  expect_error(R"({"nodes": [{"id": "a", "policy": "R", "ttl": {"exp": 1}, "children": ["zz"]}]})", "zz");
  expect_error(R"({"nodes": [{"id": "a", "policy": "R", "ttl": {"exp": 1}, "ttl_r": {"exp": 1}}],
                   "arrivals": {"a": {"poisson": 1}}})",
               "ttl_r");
  expect_error(R"({"nodes": [{"id": "a", "policy": "MinSigmaR", "ttl": {"exp": 1}}],
                   "arrivals": {"a": {"poisson": 1}}})",
               "ttl_r");
  expect_error(R"({"nodes": [{"id": "a", "policy": "LRU", "ttl": {"exp": 1}}], "arrivals": {"a": {"poisson": 1}}})",
               "policy");
  expect_error(R"({"nodes": [{"id": "a", "policy": "R", "ttl": {"exp": -1}}], "arrivals": {"a": {"poisson": 1}}})",
               "ttl");
  expect_error(R"({"nodes": [{"id": "a", "policy": "R", "ttl": {"exp": 1}}]})", "arrivals");
  expect_error(R"({"nodes": [{"id": "a", "policy": "R", "ttl": {"exp": 1}, "colour": 1}],
                   "arrivals": {"a": {"poisson": 1}}})",
               "colour");
  expect_error(R"({"nodes": [{"id": "a", "policy": "R", "ttl": {"exp": 1}},
                              {"id": "a", "policy": "R", "ttl": {"exp": 1}}],
                   "arrivals": {"a": {"poisson": 1}}})",
               "duplicate");
  expect_error("not json", "");
}

TEST(ParseTopology, ShorthandDistributionsExpand) {
  const auto t = parse_topology(R"({
    "nodes": [{"id": "a", "policy": "MinSigmaR", "ttl": {"erlang": {"stages": 3, "rate": 2}},
               "ttl_r": {"ph": {"s": [[-2, 1], [0, -1]], "pi": [0.5, 0.5]}}}],
    "arrivals": {"a": {"map": {"d0": [[-2, 1], [0, -1]], "d1": [[1, 0], [0.5, 0.5]]}}}})");
  EXPECT_EQ(t.ttl(0, "default").ph.order(), 3u);
  EXPECT_EQ(t.ttl_r(0, "default").ph.order(), 2u);
  EXPECT_EQ(t.arrival(0, "default").map.states(), 2u);
}

TEST(ParseTopology, PerObjectOverrides) {
  const auto t = load_topology(data("mixed.json"));
  ASSERT_EQ(t.objects().size(), 2u);
  const auto leaf = t.index_of("edge2");
  EXPECT_NEAR(fundamental_rate(t.arrival(leaf, "default").map), 0.7, 1e-15);
  EXPECT_NEAR(fundamental_rate(t.arrival(leaf, "hot").map), 3.0, 1e-15);
  EXPECT_THROW(t.object("cold"), Error);
}

TEST(Analyze, LineOfTwoSigmaCaches) {
  const auto t = load_topology(data("line2.json"));
  const auto r = analyze(t, "default");
  const auto& c1 = r.node("C1");
  const auto& c2 = r.node("C2");
  EXPECT_NEAR(c1.metrics.hit_probability, 0.5, 1e-15);
  const auto m2 = output_sigma(MarkovArrivalProcess::poisson(1.0), PhaseTypeDistribution::exponential(1.0));
  ASSERT_TRUE(c2.input.has_value());
  EXPECT_EQ(c2.input->d0(), m2.map.d0());
  EXPECT_EQ(c2.input->d1(), m2.map.d1());
  EXPECT_EQ(c2.output->map.d0(), RateMatrix::from_dense({{-1, 0, 0, 0}, {1, -1, 0, 0}, {1, 0, -2, 1}, {0, 1, 1, -2}}));
  EXPECT_EQ(c2.output->map.d1(), RateMatrix(4, 4, {{0, 3, 1.0}}));
  EXPECT_NEAR(r.origin_miss_rate, c2.metrics.miss_rate, 1e-15);
}

TEST(Analyze, TreeRootSuperposesChildren) {
  const auto t = load_topology(data("tree3.json"));
  const auto r = analyze(t, "default");
  const auto& root = r.node("C3");
  EXPECT_EQ(root.input_dimension, 4u);
  EXPECT_EQ(root.output_dimension, 8u);
  const auto leaf = output_r(MarkovArrivalProcess::poisson(1.0), PhaseTypeDistribution::exponential(1.0)).map;
  const std::vector<MarkovArrivalProcess> both{leaf, leaf};
  EXPECT_EQ(root.input->d0(), superpose(both).d0());
  EXPECT_EQ(root.input->d1(), superpose(both).d1());
  EXPECT_NEAR(root.metrics.input_rate, 1.0, 1e-14);
}

TEST(Analyze, BudgetExceededAtRootOutput) {
  const auto t = load_topology(data("tree3.json"));
  try {
    analyze(t, "default", 4);
    FAIL() << "expected BudgetExceeded";
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.node(), "C3");
    EXPECT_EQ(e.dimension(), 8u);
    EXPECT_EQ(e.budget(), 4u);
    EXPECT_EQ(e.stage(), "output construction");
  }
  EXPECT_NO_THROW(analyze(t, "default", 8));
}

TEST(StateSpaceSize, Examples) {
  const auto single = load_topology(data("mm_r.json"));
  EXPECT_EQ(state_space_size(single, "default")[0].output_dimension, 2u);

  const auto h2 = parse_topology(binary_tree(2));
  const auto rows2 = state_space_size(h2, "default");
  EXPECT_EQ(rows2.back().output_dimension, 8u);

  const auto h3 = parse_topology(binary_tree(3));
  for (const auto& row : state_space_size(h3, "default")) {
    const auto v = h3.index_of(row.id);
    if (h3.is_leaf(v)) {
      EXPECT_EQ(row.output_dimension, 2u);
    } else if (h3.parents(v).empty()) {
      EXPECT_EQ(row.input_dimension, 64u);
      EXPECT_EQ(row.output_dimension, 128u);
    } else {
      EXPECT_EQ(row.input_dimension, 4u);
      EXPECT_EQ(row.output_dimension, 8u);
    }
  }
  EXPECT_EQ(analyze(h3, "default").nodes.back().output_dimension, 128u);
}

TEST(StateSpaceSize, ScalingExpressionIsOnlyAsymptotic) {
  EXPECT_EQ(binary_tree_scaling(1, 1, 2), 1.0);
  EXPECT_EQ(binary_tree_scaling(2, 3, 1), 4.0 * 9.0);
}

TEST(Analyze, DeterministicTtlUsesErlangStages) {
  const auto t = load_topology(data("md_r.json"));
  const auto r = analyze(t, "default");
  EXPECT_EQ(r.nodes[0].output_dimension, 21u);
  // Erlang-20 approximates 1 - e^{-1} only roughly.
  EXPECT_NEAR(r.nodes[0].metrics.hit_probability, 1.0 - std::exp(-1.0), 0.02);
}

// Invariants over randomized topologies.

TEST(NetworkProperties, DimensionsConservationWald) {
  Rng rng(600);
  int checked = 0;
  while (checked < 100) {
    const auto t = testing::random_topology(rng, 5);
    if (testing::peak_dimension(t) > 3000) {
      continue;
    }
    ++checked;
    const auto predicted = state_space_size(t, "default");
    const auto r = analyze(t, "default");
    ASSERT_EQ(predicted.size(), r.nodes.size());
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      const auto& n = r.nodes[i];
      EXPECT_EQ(predicted[i].id, n.id);
      EXPECT_EQ(predicted[i].input_dimension, n.input_dimension);
      EXPECT_EQ(predicted[i].output_dimension, n.output_dimension);
      EXPECT_EQ(n.input->states(), n.input_dimension);
      EXPECT_EQ(n.output->map.states(), n.output_dimension);
      EXPECT_TRUE(validate_map(n.output->map).ok());
      EXPECT_LE(n.metrics.miss_rate, n.metrics.input_rate * (1 + 1e-12));
      EXPECT_NEAR(n.metrics.expected_inter_miss * n.metrics.input_rate, 1.0 / n.metrics.miss_probability,
                  1e-9 / n.metrics.miss_probability);

      // Conservation at joins: input rate is the split share of the children's misses.
      const auto v = t.index_of(n.id);
      if (!t.is_leaf(v)) {
        double expected = 0.0;
        for (auto c : t.children_of(v)) {
          const auto& ps = t.parents(c);
          const auto share = t.split_of(c);
          const auto k = static_cast<std::size_t>(std::find(ps.begin(), ps.end(), v) - ps.begin());
          expected += r.node(t.nodes()[c].id).metrics.miss_rate * share[k];
        }
        EXPECT_NEAR(n.metrics.input_rate, expected, 1e-9 * std::max(1.0, expected));
      }
    }
  }
}

TEST(NetworkProperties, MissRateNonincreasingAlongLine) {
  Rng rng(601);
  for (int c = 0; c < 100; ++c) {
    const std::size_t k = testing::pick(rng, 2, 4);
    std::vector<CacheNode> nodes;
    for (std::size_t i = 0; i < k; ++i) {
      const auto policy = testing::random_policy(rng);
      std::optional<TtlLaw> ttl_r;
      if (policy == Policy::MinSigmaR) {
        ttl_r = TtlLaw::from_phase_type(testing::random_ttl(rng, 2));
      }
      std::vector<std::string> children;
      if (i > 0) {
        children.push_back("n" + std::to_string(i - 1));
      }
      nodes.push_back(CacheNode{"n" + std::to_string(i), policy, TtlLaw::from_phase_type(testing::random_ttl(rng, 2)),
                                std::move(ttl_r), children, std::nullopt});
    }
    std::map<std::string, ArrivalSpec> arrivals{{"n0", ArrivalSpec{testing::random_arrivals(rng, 2), "random"}}};
    const Topology t(std::move(nodes), std::move(arrivals), {});
    const auto r = analyze(t, "default");
    for (std::size_t i = 1; i < r.nodes.size(); ++i) {
      EXPECT_LE(r.nodes[i].metrics.miss_rate, r.nodes[i - 1].metrics.miss_rate * (1 + 1e-12));
      EXPECT_NEAR(r.nodes[i].metrics.input_rate, r.nodes[i - 1].metrics.miss_rate,
                  1e-9 * std::max(1.0, r.nodes[i - 1].metrics.miss_rate));
    }
  }
}

}  // namespace
}  // namespace ttlnet
