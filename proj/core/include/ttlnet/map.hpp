#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ttlnet/phase_type.hpp"
#include "ttlnet/rate_matrix.hpp"

namespace ttlnet {

/// Markov arrival process (D0, D1).
///
/// D0 holds hidden transitions, D1 active (event-emitting) transitions, and
/// Q = D0 + D1 generates the background chain. Construction only checks
/// shapes; use validate_map() for the full invariant report.
class MarkovArrivalProcess {
 public:
  MarkovArrivalProcess(RateMatrix d0, RateMatrix d1,
                       std::optional<std::vector<std::string>> state_labels = std::nullopt);

  static MarkovArrivalProcess poisson(double rate);
  /// Markov-modulated Poisson process: background generator q, arrival rate per state.
  static MarkovArrivalProcess mmpp(const RateMatrix& q, std::span<const double> rates);
  /// Renewal process with PH inter-arrival times: D0 = S, D1 = S0 * pi.
  static MarkovArrivalProcess renewal(const PhaseTypeDistribution& interarrival);

  std::size_t states() const noexcept { return d0_.rows(); }
  const RateMatrix& d0() const noexcept { return d0_; }
  const RateMatrix& d1() const noexcept { return d1_; }
  const std::optional<std::vector<std::string>>& state_labels() const noexcept { return labels_; }

  /// Background generator Q = D0 + D1.
  RateMatrix generator() const { return d0_ + d1_; }

  friend bool operator==(const MarkovArrivalProcess&, const MarkovArrivalProcess&) = default;

 private:
  RateMatrix d0_;
  RateMatrix d1_;
  std::optional<std::vector<std::string>> labels_;
};

struct Violation {
  std::string what;
  std::optional<std::size_t> row;
  std::optional<std::size_t> col;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool contains(std::string_view what) const;
  std::string summary() const;
};

ValidationReport validate_map(const MarkovArrivalProcess& m);

/// Throws ValidationError carrying the report summary if m is invalid.
void require_valid(const MarkovArrivalProcess& m);

/// Long-run event rate p * D1 * 1 with p stationary for D0 + D1.
double fundamental_rate(const MarkovArrivalProcess& m);

/// Superposition by Kronecker sums; states ordered lexicographically with the
/// first process outermost.
MarkovArrivalProcess superpose(std::span<const MarkovArrivalProcess> ms);

/// Probabilistic thinning: output i has D0 + (1 - p_i) D1 and p_i D1.
std::vector<MarkovArrivalProcess> split(const MarkovArrivalProcess& m, const ProbabilityVector& p);
std::vector<MarkovArrivalProcess> split(const MarkovArrivalProcess& m, std::span<const double> p);

/// Event-by-event simulator of the joint chain (J(t), N(t)).
class MapSampler {
 public:
  /// Starts the background chain from its stationary distribution.
  explicit MapSampler(const MarkovArrivalProcess& m);
  MapSampler(const MarkovArrivalProcess& m, const ProbabilityVector& initial);

  /// Draws the initial state. Must be called once before next_interval().
  void reset(Rng& rng);

  /// Time until the next active transition.
  double next_interval(Rng& rng);

  std::size_t state() const noexcept { return state_; }

 private:
  struct Move {
    std::size_t target = 0;
    bool active = false;
  };
  struct State {
    double exit_rate = 0.0;
    std::vector<Move> moves;
    std::discrete_distribution<std::size_t> choose;
  };
  void build(const MarkovArrivalProcess& m, const ProbabilityVector& initial);

  std::vector<State> states_;
  std::discrete_distribution<std::size_t> start_;
  std::size_t state_ = 0;
  bool started_ = false;
};

/// Absolute times of the first `horizon` events, starting at time 0 from the
/// stationary background state.
std::vector<double> sample_map(const MarkovArrivalProcess& m, std::size_t horizon, Rng& rng);

}  // namespace ttlnet
