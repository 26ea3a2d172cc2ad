#include "ttlnet/ttl_io.hpp"

#include <string>

namespace ttlnet {
namespace {

enum class HitRule { KeepPhase, ResetAll, ResetInner };

std::vector<std::string> output_labels(const MarkovArrivalProcess& m,
                                       const std::vector<std::string>& phase_names) {
  std::vector<std::string> labels;
  labels.reserve(phase_names.size() * m.states());
  for (const auto& phase : phase_names) {
    for (std::size_t s = 0; s < m.states(); ++s) {
      labels.push_back(phase + "/" +
                       (m.state_labels() ? (*m.state_labels())[s] : std::to_string(s)));
    }
  }
  return labels;
}

// t is the (possibly product) TTL; inner is the number of R phases sharing a
// Sigma phase when rule == ResetInner.
CacheOutput build(const MarkovArrivalProcess& m, const PhaseTypeDistribution& t, HitRule rule,
                  const ProbabilityVector* inner_pi, std::vector<std::string> phase_names) {
  require_valid(m);
  const std::size_t n = m.states();
  const std::size_t k = t.order();
  const std::size_t dim = n * (k + 1);
  const auto& d1 = m.d1();
  const auto& pi = t.initial();

  std::vector<Entry> d0;
  append_block(d0, kron_sum(t.generator(), m.d0()), 0, 0);
  for (std::size_t a = 1; a <= k; ++a) {
    switch (rule) {
      case HitRule::KeepPhase:
        append_block(d0, d1, a * n, a * n);
        break;
      case HitRule::ResetAll:
        for (std::size_t b = 1; b <= k; ++b) {
          if (pi[b - 1] != 0.0) {
            append_block(d0, d1, a * n, b * n, pi[b - 1]);
          }
        }
        break;
      case HitRule::ResetInner: {
        const std::size_t q = inner_pi->size();
        const std::size_t outer = (a - 1) / q;
        for (std::size_t r = 0; r < q; ++r) {
          const double w = (*inner_pi)[r];
          if (w != 0.0) {
            append_block(d0, d1, a * n, (1 + outer * q + r) * n, w);
          }
        }
        break;
      }
    }
  }

  std::vector<Entry> d1_out;
  for (std::size_t b = 1; b <= k; ++b) {
    if (pi[b - 1] != 0.0) {
      append_block(d1_out, d1, 0, b * n, pi[b - 1]);
    }
  }

  CacheOutput out{MarkovArrivalProcess(RateMatrix(dim, dim, std::move(d0)),
                                       RateMatrix(dim, dim, std::move(d1_out)),
                                       output_labels(m, phase_names)),
                  {},
                  {}};
  for (std::size_t i = 0; i < dim; ++i) {
    (i < n ? out.out_states : out.in_states).push_back(i);
  }
  return out;
}

std::vector<std::string> single_phase_names(std::size_t k) {
  std::vector<std::string> names{"out"};
  for (std::size_t i = 1; i <= k; ++i) {
    names.push_back("in" + std::to_string(i));
  }
  return names;
}

}  // namespace

CacheOutput output_sigma(const MarkovArrivalProcess& m, const PhaseTypeDistribution& t) {
  return build(m, t, HitRule::KeepPhase, nullptr, single_phase_names(t.order()));
}

CacheOutput output_r(const MarkovArrivalProcess& m, const PhaseTypeDistribution& t) {
  return build(m, t, HitRule::ResetAll, nullptr, single_phase_names(t.order()));
}

CacheOutput output_min(const MarkovArrivalProcess& m, const PhaseTypeDistribution& t_sigma,
                       const PhaseTypeDistribution& t_r) {
  std::vector<std::string> names{"out"};
  for (std::size_t i = 1; i <= t_sigma.order(); ++i) {
    for (std::size_t r = 1; r <= t_r.order(); ++r) {
      names.push_back("in" + std::to_string(i) + "," + std::to_string(r));
    }
  }
  return build(m, ph_min(t_sigma, t_r), HitRule::ResetInner, &t_r.initial(), std::move(names));
}

}  // namespace ttlnet
