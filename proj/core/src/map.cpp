#include "ttlnet/map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ttlnet/errors.hpp"

namespace ttlnet {

MarkovArrivalProcess::MarkovArrivalProcess(RateMatrix d0, RateMatrix d1,
                                           std::optional<std::vector<std::string>> state_labels)
    : d0_(std::move(d0)), d1_(std::move(d1)), labels_(std::move(state_labels)) {
  if (!d0_.is_square() || !d1_.is_square() || d0_.rows() != d1_.rows()) {
    throw DimensionError("MAP matrices must be square with equal dimension, got " +
                         std::to_string(d0_.rows()) + "x" + std::to_string(d0_.cols()) + " and " +
                         std::to_string(d1_.rows()) + "x" + std::to_string(d1_.cols()));
  }
  if (d0_.rows() == 0) {
    throw DimensionError("MAP must have at least one state");
  }
  if (labels_ && labels_->size() != d0_.rows()) {
    throw DimensionError("MAP has " + std::to_string(d0_.rows()) + " states but " +
                         std::to_string(labels_->size()) + " labels");
  }
}

MarkovArrivalProcess MarkovArrivalProcess::poisson(double rate) {
  return {RateMatrix::from_dense({{-rate}}), RateMatrix::from_dense({{rate}})};
}

MarkovArrivalProcess MarkovArrivalProcess::mmpp(const RateMatrix& q, std::span<const double> rates) {
  if (!q.is_square() || q.rows() != rates.size()) {
    throw DimensionError("MMPP generator and rate vector disagree in dimension");
  }
  const RateMatrix d1 = RateMatrix::diagonal(rates);
  return {q - d1, d1};
}

MarkovArrivalProcess MarkovArrivalProcess::renewal(const PhaseTypeDistribution& interarrival) {
  const std::size_t m = interarrival.order();
  std::vector<Entry> d1;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      d1.push_back({i, j, interarrival.exit_rates()[i] * interarrival.initial()[j]});
    }
  }
  return {interarrival.subintensity(), RateMatrix(m, m, std::move(d1))};
}

bool ValidationReport::contains(std::string_view what) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.what == what; });
}

std::string ValidationReport::summary() const {
  if (ok()) {
    return "pass";
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const auto& v = violations[i];
    out << (i ? "; " : "") << v.what;
    if (v.row) {
      out << " at (" << *v.row;
      if (v.col) {
        out << "," << *v.col;
      }
      out << ")";
    }
  }
  return out.str();
}

ValidationReport validate_map(const MarkovArrivalProcess& m) {
  ValidationReport report;
  auto add = [&](std::string what, std::optional<std::size_t> r = std::nullopt,
                 std::optional<std::size_t> c = std::nullopt) {
    report.violations.push_back({std::move(what), r, c});
  };
  const std::size_t n = m.states();
  for (const auto& e : m.d1().entries()) {
    if (e.value < 0.0) {
      add("negative active rate", e.row, e.col);
    }
  }
  std::vector<double> scale(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double diag = m.d0()(i, i);
    if (!(diag < 0.0)) {
      add("non-negative hidden diagonal", i, i);
    }
    scale[i] = std::max(1.0, std::abs(diag));
  }
  for (const auto& e : m.d0().entries()) {
    if (e.row != e.col && e.value < 0.0) {
      add("negative hidden rate", e.row, e.col);
    }
  }
  const auto q_sums = m.generator().row_sums();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(q_sums[i]) > 1e-9 * scale[i]) {
      add("generator row does not sum to zero", i);
    }
  }
  // D0 is a subintensity; it is non-singular iff every state can reach a
  // state whose D0 row leaks mass (positive D1 row sum).
  const auto d0_sums = m.d0().row_sums();
  std::vector<char> leaks(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    leaks[i] = d0_sums[i] < -1e-12 * scale[i];
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& e : m.d0().entries()) {
      if (e.row != e.col && e.value > 0.0 && leaks[e.col] && !leaks[e.row]) {
        leaks[e.row] = 1;
        changed = true;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!leaks[i]) {
      add("singular hidden matrix", i);
      break;
    }
  }
  return report;
}

void require_valid(const MarkovArrivalProcess& m) {
  const auto report = validate_map(m);
  if (!report.ok()) {
    throw ValidationError("invalid MAP: " + report.summary());
  }
}

double fundamental_rate(const MarkovArrivalProcess& m) {
  const auto p = steady_state(m.generator());
  const auto out = m.d1().row_sums();
  return std::inner_product(p.begin(), p.end(), out.begin(), 0.0);
}

MarkovArrivalProcess superpose(std::span<const MarkovArrivalProcess> ms) {
  if (ms.empty()) {
    throw ArityError("superpose needs at least one MAP");
  }
  RateMatrix d0 = ms.front().d0();
  RateMatrix d1 = ms.front().d1();
  std::optional<std::vector<std::string>> labels = ms.front().state_labels();
  for (const auto& m : ms.subspan(1)) {
    d0 = kron_sum(d0, m.d0());
    d1 = kron_sum(d1, m.d1());
    if (labels && m.state_labels()) {
      std::vector<std::string> combined;
      combined.reserve(labels->size() * m.states());
      for (const auto& a : *labels) {
        for (const auto& b : *m.state_labels()) {
          combined.push_back(a + "," + b);
        }
      }
      labels = std::move(combined);
    } else {
      labels.reset();
    }
  }
  return {std::move(d0), std::move(d1), std::move(labels)};
}

std::vector<MarkovArrivalProcess> split(const MarkovArrivalProcess& m, const ProbabilityVector& p) {
  std::vector<MarkovArrivalProcess> parts;
  parts.reserve(p.size());
  for (double pi : p) {
    if (pi == 1.0) {
      parts.push_back(m);
      continue;
    }
    parts.emplace_back(m.d0() + m.d1().scaled(1.0 - pi), m.d1().scaled(pi), m.state_labels());
  }
  return parts;
}

std::vector<MarkovArrivalProcess> split(const MarkovArrivalProcess& m, std::span<const double> p) {
  return split(m, ProbabilityVector(std::vector<double>(p.begin(), p.end())));
}

MapSampler::MapSampler(const MarkovArrivalProcess& m) { build(m, steady_state(m.generator())); }

MapSampler::MapSampler(const MarkovArrivalProcess& m, const ProbabilityVector& initial) {
  if (initial.size() != m.states()) {
    throw DimensionError("initial distribution length does not match MAP dimension");
  }
  build(m, initial);
}

void MapSampler::build(const MarkovArrivalProcess& m, const ProbabilityVector& initial) {
  require_valid(m);
  const std::size_t n = m.states();
  states_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& st = states_[i];
    std::vector<double> weights;
    for (const auto& e : m.d0().row(i)) {
      if (e.col == i) {
        st.exit_rate = -e.value;
      } else if (e.value > 0.0) {
        st.moves.push_back({e.col, false});
        weights.push_back(e.value);
      }
    }
    for (const auto& e : m.d1().row(i)) {
      if (e.value > 0.0) {
        st.moves.push_back({e.col, true});
        weights.push_back(e.value);
      }
    }
    st.choose = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  }
  start_ = std::discrete_distribution<std::size_t>(initial.begin(), initial.end());
}

void MapSampler::reset(Rng& rng) {
  state_ = start_(rng);
  started_ = true;
}

double MapSampler::next_interval(Rng& rng) {
  if (!started_) {
    reset(rng);
  }
  double elapsed = 0.0;
  for (;;) {
    auto& st = states_[state_];
    elapsed += std::exponential_distribution<double>(st.exit_rate)(rng);
    const auto& move = st.moves[st.choose(rng)];
    state_ = move.target;
    if (move.active) {
      return elapsed;
    }
  }
}

std::vector<double> sample_map(const MarkovArrivalProcess& m, std::size_t horizon, Rng& rng) {
  MapSampler sampler(m);
  sampler.reset(rng);
  std::vector<double> times;
  times.reserve(horizon);
  double now = 0.0;
  for (std::size_t k = 0; k < horizon; ++k) {
    now += sampler.next_interval(rng);
    times.push_back(now);
  }
  return times;
}

}  // namespace ttlnet
