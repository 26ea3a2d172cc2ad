#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ttlnet/network.hpp"
#include "ttlnet/topology.hpp"

namespace ttlnet {

struct SimConfig {
  std::string object = "default";
  /// Number of exogenous requests (leaf arrivals) to generate.
  std::size_t event_cap = 1000000;
  /// Leading requests discarded; defaults to 10% of event_cap.
  std::optional<std::size_t> warmup;
  std::uint64_t seed = 1;
  std::size_t max_batches = 50;
};

struct Measured {
  double value = 0.0;
  /// NaN when fewer than two batches are available.
  double standard_error = 0.0;
};

struct NodeEstimate {
  std::string id;
  Measured hit;
  Measured miss;
  Measured occupancy;
  Measured miss_rate;
  Measured inter_miss_mean;
  Measured inter_miss_second_moment;
  std::size_t requests = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
};

struct SimEstimate {
  std::string object;
  std::size_t events = 0;
  std::size_t warmup = 0;
  std::size_t batches = 0;
  double duration = 0.0;
  /// False when too few events were measured to estimate standard errors.
  bool standard_errors_defined = false;
  /// In topological order.
  std::vector<NodeEstimate> nodes;

  const NodeEstimate& node(std::string_view id) const;
};

/// Event-driven simulation of the literal cache semantics. Deterministic for
/// a fixed seed.
SimEstimate simulate(const Topology& t, const SimConfig& cfg);

struct Discrepancy {
  std::string node;
  std::string metric;
  double analytic = 0.0;
  double empirical = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
  bool flagged = false;
};

struct DiscrepancyReport {
  double k_sigma = 0.0;
  std::vector<Discrepancy> entries;
  std::size_t flagged() const;
};

/// |analytic - empirical| / SE per node and metric (hit, miss, occupancy,
/// miss_rate); entries with z >= k_sigma are flagged. Throws ValidationError
/// when the node sets differ.
DiscrepancyReport compare(const AnalysisResult& analytic, const SimEstimate& empirical, double k_sigma);

}  // namespace ttlnet
