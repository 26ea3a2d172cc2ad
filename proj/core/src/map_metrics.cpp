#include "ttlnet/map_metrics.hpp"

#include <numeric>

#include "ttlnet/errors.hpp"

namespace ttlnet {

CacheMetrics metrics_from_maps(const MarkovArrivalProcess& input, const CacheOutput& output) {
  require_valid(input);
  require_valid(output.map);
  const std::size_t n = input.states();
  if (output.map.states() % n != 0 || output.out_states.size() != n) {
    throw DimensionError("cache output does not match the input MAP dimension");
  }
  const auto p = steady_state(input.generator());
  const auto p_out = steady_state(output.map.generator());

  const auto in_sums = input.d1().row_sums();
  const auto out_sums = output.map.d1().row_sums();
  const double lambda = std::inner_product(p.begin(), p.end(), in_sums.begin(), 0.0);
  const double miss_rate = std::inner_product(p_out.begin(), p_out.end(), out_sums.begin(), 0.0);

  double out_mass = 0.0;
  for (auto i : output.out_states) {
    out_mass += p_out[i];
  }

  CacheMetrics r;
  r.input_rate = lambda;
  r.miss_rate = miss_rate;
  r.miss_probability = miss_rate / lambda;
  r.hit_probability = 1.0 - r.miss_probability;
  r.occupancy = 1.0 - out_mass;
  r.expected_inter_miss = 1.0 / miss_rate;
  return r;
}

InterEventMoments inter_event_moments(const MarkovArrivalProcess& m) {
  require_valid(m);
  const auto p = steady_state(m.generator());
  auto phi = m.d1().left_multiply(p.values());
  const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
  if (!(total > 0.0)) {
    throw DivergenceError("MAP has no events; inter-event time is infinite");
  }
  for (auto& x : phi) {
    x /= total;
  }
  const RateMatrix neg = m.d0().scaled(-1.0);
  const std::vector<double> ones(m.states(), 1.0);
  const auto x = solve(neg, ones);
  const auto y = solve(neg, x);
  return {std::inner_product(phi.begin(), phi.end(), x.begin(), 0.0),
          2.0 * std::inner_product(phi.begin(), phi.end(), y.begin(), 0.0)};
}

}  // namespace ttlnet
