#pragma once

#include <cstddef>
#include <vector>

#include "ttlnet/map.hpp"
#include "ttlnet/phase_type.hpp"

namespace ttlnet {

/// Miss process of a TTL cache fed by a MAP.
///
/// States are laid out in blocks of n = input dimension; block 0 is the TTL's
/// absorbing phase (object not cached), blocks 1.. are the TTL's transient
/// phases. Inside a block the input MAP's state order is kept.
struct CacheOutput {
  MarkovArrivalProcess map;
  std::vector<std::size_t> in_states;
  std::vector<std::size_t> out_states;
};

CacheOutput output_sigma(const MarkovArrivalProcess& m, const PhaseTypeDistribution& t);
CacheOutput output_r(const MarkovArrivalProcess& m, const PhaseTypeDistribution& t);
/// t_sigma is the outer TTL factor, t_r the inner one.
CacheOutput output_min(const MarkovArrivalProcess& m, const PhaseTypeDistribution& t_sigma,
                       const PhaseTypeDistribution& t_r);

}  // namespace ttlnet
