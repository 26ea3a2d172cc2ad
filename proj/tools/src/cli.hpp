#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlnet/network.hpp"
#include "ttlnet/simulator.hpp"

namespace ttlnet::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalid = 2,
  kBudget = 3,
};

/// Runs the tool; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

nlohmann::json to_json(const AnalysisResult& r);
AnalysisResult analysis_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimEstimate& e);
nlohmann::json to_json(const DiscrepancyReport& r);

struct Table1Row {
  std::string model;
  double lambda = 0.0;
  double mu = 0.0;
  double nu = 0.0;
  double omega = 0.0;
  double transform_closed = 0.0;
  double transform_engine = 0.0;
  double stopped_sum_closed = 0.0;
  double stopped_sum_engine = 0.0;
  double occupancy_closed = 0.0;
  double occupancy_engine = 0.0;

  double max_relative_difference() const;
};

/// Closed-form reference values next to the renewal engine's recomputation,
/// for every combination of the given parameters. Deterministic TTLs use the
/// value 1/mu.
std::vector<Table1Row> table1(const std::vector<double>& lambdas, const std::vector<double>& mus,
                              const std::vector<double>& nus, const std::vector<double>& omegas);

}  // namespace ttlnet::cli
