#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ttlnet/map.hpp"
#include "ttlnet/phase_type.hpp"
#include "ttlnet/policy.hpp"
#include "ttlnet/renewal.hpp"

namespace ttlnet {

/// A TTL law as configured. The MAP engine uses `ph`; the simulator samples
/// `exact` when present (deterministic TTLs), otherwise `ph`.
struct TtlLaw {
  PhaseTypeDistribution ph;
  std::optional<RenewalSpec> exact;
  std::string description;

  static TtlLaw from_renewal(const RenewalSpec& r, std::size_t deterministic_stages = 20);
  static TtlLaw from_phase_type(PhaseTypeDistribution ph);
};

struct ArrivalSpec {
  MarkovArrivalProcess map;
  std::string description;
};

struct CacheNode {
  std::string id;
  Policy policy = Policy::R;
  TtlLaw ttl;
  std::optional<TtlLaw> ttl_r;
  std::vector<std::string> children;
  std::optional<std::vector<double>> split;
};

/// Per-object parameter overrides, keyed by node id.
struct ObjectSpec {
  std::string id;
  std::map<std::string, ArrivalSpec> arrivals;
  std::map<std::string, TtlLaw> ttl;
  std::map<std::string, TtlLaw> ttl_r;
};

/// Feedforward DAG of caches. Requests enter at leaves (nodes without
/// children); a miss at a node is forwarded to one of its parents, chosen by
/// the node's split vector. Nodes without parents forward to the origin.
class Topology {
 public:
  Topology(std::vector<CacheNode> nodes, std::map<std::string, ArrivalSpec> arrivals,
           std::vector<ObjectSpec> objects, std::size_t deterministic_stages = 20);

  const std::vector<CacheNode>& nodes() const noexcept { return nodes_; }
  const std::vector<ObjectSpec>& objects() const noexcept { return objects_; }
  std::size_t index_of(std::string_view id) const;
  bool is_leaf(std::size_t node) const { return nodes_[node].children.empty(); }

  /// Parents in document order.
  const std::vector<std::size_t>& parents(std::size_t node) const { return parents_[node]; }
  const std::vector<std::size_t>& children_of(std::size_t node) const { return children_[node]; }
  /// Children before parents; ties by document order.
  const std::vector<std::size_t>& order() const noexcept { return order_; }

  /// Probability of forwarding a miss at `node` to each of its parents.
  std::vector<double> split_of(std::size_t node) const;

  const ObjectSpec& object(std::string_view id) const;
  const TtlLaw& ttl(std::size_t node, std::string_view object) const;
  const TtlLaw& ttl_r(std::size_t node, std::string_view object) const;
  const ArrivalSpec& arrival(std::size_t leaf, std::string_view object) const;

  std::size_t deterministic_stages() const noexcept { return deterministic_stages_; }

 private:
  std::vector<CacheNode> nodes_;
  std::map<std::string, ArrivalSpec> arrivals_;
  std::vector<ObjectSpec> objects_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> order_;
  std::size_t deterministic_stages_;
};

/// Parses a JSON topology document. Errors are ConfigError with a path such as
/// "nodes[2].split".
Topology parse_topology(std::string_view document);
Topology load_topology(const std::filesystem::path& path);

}  // namespace ttlnet
