#pragma once

#include "ttlnet/map.hpp"
#include "ttlnet/ttl_io.hpp"

namespace ttlnet {

struct CacheMetrics {
  double hit_probability = 0.0;
  double miss_probability = 0.0;
  double occupancy = 0.0;
  double input_rate = 0.0;
  double miss_rate = 0.0;
  double expected_inter_miss = 0.0;
};

/// Hit/miss probabilities and occupancy of a cache from its input MAP and
/// the constructed miss process. Throws NoStationaryDistribution when either
/// background chain is reducible.
CacheMetrics metrics_from_maps(const MarkovArrivalProcess& input, const CacheOutput& output);

struct InterEventMoments {
  double mean = 0.0;
  double second_moment = 0.0;
};

/// Stationary inter-event time moments: phi = p D1 / (p D1 1),
/// E[X] = phi (-D0)^{-1} 1, E[X^2] = 2 phi (-D0)^{-2} 1.
InterEventMoments inter_event_moments(const MarkovArrivalProcess& m);

}  // namespace ttlnet
