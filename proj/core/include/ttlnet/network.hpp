#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ttlnet/map_metrics.hpp"
#include "ttlnet/topology.hpp"
#include "ttlnet/ttl_io.hpp"

namespace ttlnet {

inline constexpr std::size_t kDefaultStateBudget = 100000;

struct NodeAnalysis {
  std::string id;
  CacheMetrics metrics;
  std::size_t input_dimension = 0;
  std::size_t output_dimension = 0;
  /// Present when produced by analyze(); absent when loaded from a report.
  std::optional<MarkovArrivalProcess> input;
  std::optional<CacheOutput> output;
};

struct AnalysisResult {
  std::string object;
  /// In topological order (children before parents).
  std::vector<NodeAnalysis> nodes;
  /// Total rate of misses leaving parentless nodes.
  double origin_miss_rate = 0.0;

  const NodeAnalysis& node(std::string_view id) const;
};

/// Exact per-object analysis: leaf MAPs, per-node miss MAPs, splits on fan-out
/// edges, superposition at joins. Throws BudgetExceeded before building any
/// matrix larger than `budget` states.
AnalysisResult analyze(const Topology& t, std::string_view object,
                       std::size_t budget = kDefaultStateBudget);

struct DimensionRow {
  std::string id;
  std::size_t input_dimension = 0;
  std::size_t output_dimension = 0;
};

/// Dimensions from the size recurrence alone; builds no matrices. Saturates at
/// SIZE_MAX instead of overflowing.
std::vector<DimensionRow> state_space_size(const Topology& t, std::string_view object);

/// Scaling expression n^(2^h) * m^(2(2^h - 1)) for a complete binary tree of
/// height h with n-state leaves and m-phase TTLs. Asymptotic only; it omits
/// the absorbing TTL phase.
double binary_tree_scaling(double n, double m, unsigned h);

}  // namespace ttlnet
