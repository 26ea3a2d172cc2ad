#include "ttlnet/network.hpp"

#include <cmath>
#include <limits>

#include "ttlnet/errors.hpp"

namespace ttlnet {
namespace {

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    return std::numeric_limits<std::size_t>::max();
  }
  return a * b;
}

std::size_t ttl_factor(const Topology& t, std::size_t node, std::string_view object) {
  const std::size_t m = t.ttl(node, object).ph.order();
  if (t.nodes()[node].policy == Policy::MinSigmaR) {
    return saturating_mul(m, t.ttl_r(node, object).ph.order()) + 1;
  }
  return m + 1;
}

std::size_t position_among_parents(const Topology& t, std::size_t child, std::size_t parent) {
  const auto& ps = t.parents(child);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    if (ps[k] == parent) {
      return k;
    }
  }
  throw ValidationError("internal: node is not a parent of its child");
}

}  // namespace

const NodeAnalysis& AnalysisResult::node(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) {
      return n;
    }
  }
  throw ValidationError("analysis has no node '" + std::string(id) + "'");
}

AnalysisResult analyze(const Topology& t, std::string_view object, std::size_t budget) {
  if (budget == 0) {
    throw ValidationError("state budget must be positive");
  }
  t.object(object);
  const std::size_t n = t.nodes().size();
  std::vector<std::optional<CacheOutput>> outputs(n);
  AnalysisResult result;
  result.object = std::string(object);

  for (auto v : t.order()) {
    const auto& node = t.nodes()[v];
    std::optional<MarkovArrivalProcess> input;
    if (t.is_leaf(v)) {
      input = t.arrival(v, object).map;
    } else {
      std::vector<MarkovArrivalProcess> parts;
      std::size_t dim = 1;
      for (auto c : t.children_of(v)) {
        dim = saturating_mul(dim, outputs[c]->map.states());
      }
      if (dim > budget) {
        throw BudgetExceeded(node.id, "input superposition", dim, budget);
      }
      for (auto c : t.children_of(v)) {
        const auto& out = outputs[c]->map;
        const auto split = t.split_of(c);
        const auto k = position_among_parents(t, c, v);
        if (split.size() == 1) {
          parts.push_back(out);
        } else {
          parts.push_back(std::move(ttlnet::split(out, split)[k]));
        }
      }
      input = parts.size() == 1 ? std::move(parts.front()) : superpose(parts);
    }

    const std::size_t out_dim = saturating_mul(input->states(), ttl_factor(t, v, object));
    if (out_dim > budget) {
      throw BudgetExceeded(node.id, "output construction", out_dim, budget);
    }
    const auto& ttl = t.ttl(v, object).ph;
    CacheOutput out = [&] {
      switch (node.policy) {
        case Policy::R:
          return output_r(*input, ttl);
        case Policy::Sigma:
          return output_sigma(*input, ttl);
        case Policy::MinSigmaR:
          return output_min(*input, ttl, t.ttl_r(v, object).ph);
      }
      throw ValidationError("unknown policy");
    }();

    NodeAnalysis na;
    na.id = node.id;
    na.metrics = metrics_from_maps(*input, out);
    na.input_dimension = input->states();
    na.output_dimension = out.map.states();
    if (t.parents(v).empty()) {
      result.origin_miss_rate += na.metrics.miss_rate;
    }
    na.input = std::move(input);
    na.output = out;
    outputs[v] = std::move(out);
    result.nodes.push_back(std::move(na));
  }
  return result;
}

std::vector<DimensionRow> state_space_size(const Topology& t, std::string_view object) {
  t.object(object);
  const std::size_t n = t.nodes().size();
  std::vector<std::size_t> out_dim(n, 0);
  std::vector<DimensionRow> rows;
  for (auto v : t.order()) {
    std::size_t in = 1;
    if (t.is_leaf(v)) {
      in = t.arrival(v, object).map.states();
    } else {
      for (auto c : t.children_of(v)) {
        in = saturating_mul(in, out_dim[c]);
      }
    }
    out_dim[v] = saturating_mul(in, ttl_factor(t, v, object));
    rows.push_back({t.nodes()[v].id, in, out_dim[v]});
  }
  return rows;
}

double binary_tree_scaling(double n, double m, unsigned h) {
  const double leaves = std::pow(2.0, static_cast<double>(h));
  return std::pow(n, leaves) * std::pow(m, 2.0 * (leaves - 1.0));
}

}  // namespace ttlnet
