#include "ttlnet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <tuple>

#include "ttlnet/errors.hpp"

namespace ttlnet {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class TtlDraw {
 public:
  explicit TtlDraw(const TtlLaw& law) : exact_(law.exact) {
    if (!exact_) {
      ph_.emplace(law.ph);
    }
  }
  double operator()(Rng& rng) { return exact_ ? exact_->sample(rng) : (*ph_)(rng); }

 private:
  std::optional<RenewalSpec> exact_;
  std::optional<PhaseTypeSampler> ph_;
};

struct Batch {
  double requests = 0.0;
  double misses = 0.0;
  double occupied = 0.0;
  double duration = 0.0;
};

struct RunningMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  Measured measured() const {
    if (n == 0) {
      return {kNaN, kNaN};
    }
    const double se = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : kNaN;
    return {mean, se};
  }
};

struct NodeState {
  NodeState(Policy p, const TtlLaw& law, std::vector<std::size_t> ps)
      : policy(p), ttl(law), parents(std::move(ps)) {}

  Policy policy = Policy::R;
  TtlDraw ttl;
  std::optional<TtlDraw> ttl_r;
  std::vector<std::size_t> parents;
  std::discrete_distribution<std::size_t> route;

  bool present = false;
  double since = 0.0;
  double expiry = kInf;
  double sigma_expiry = kInf;
  double r_expiry = kInf;
  double last_miss = kNaN;

  Batch current;
  std::vector<Batch> batches;
  std::size_t requests = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
  RunningMoments gap;
  RunningMoments gap_sq;
};

class Engine {
 public:
  Engine(const Topology& t, const SimConfig& cfg) : rng_(cfg.seed) {
    const std::size_t n = t.nodes().size();
    nodes_.reserve(n);
    for (std::size_t v = 0; v < n; ++v) {
      const auto& node = t.nodes()[v];
      NodeState s(node.policy, t.ttl(v, cfg.object), t.parents(v));
      if (node.policy == Policy::MinSigmaR) {
        s.ttl_r.emplace(t.ttl_r(v, cfg.object));
      }
      const auto split = t.split_of(v);
      if (!split.empty()) {
        s.route = std::discrete_distribution<std::size_t>(split.begin(), split.end());
      }
      nodes_.push_back(std::move(s));
    }
  }

  Rng& rng() { return rng_; }

  void start_measuring(double now) {
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      advance(v, now);
      nodes_[v].current = {};
    }
    measuring_ = true;
    boundary_ = now;
  }

  void close_batch(double now) {
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      advance(v, now);
      nodes_[v].current.duration = now - boundary_;
      nodes_[v].batches.push_back(nodes_[v].current);
      nodes_[v].current = {};
    }
    boundary_ = now;
  }

  void request(std::size_t v, double now) {
    advance(v, now);
    auto& s = nodes_[v];
    if (measuring_) {
      ++s.requests;
      s.current.requests += 1.0;
    }
    if (s.present) {
      if (measuring_) {
        ++s.hits;
      }
      switch (s.policy) {
        case Policy::R:
          s.expiry = now + s.ttl(rng_);
          break;
        case Policy::Sigma:
          break;
        case Policy::MinSigmaR:
          s.r_expiry = now + (*s.ttl_r)(rng_);
          s.expiry = std::min(s.sigma_expiry, s.r_expiry);
          break;
      }
      return;
    }
    s.present = true;
    s.since = now;
    if (s.policy == Policy::MinSigmaR) {
      s.sigma_expiry = now + s.ttl(rng_);
      s.r_expiry = now + (*s.ttl_r)(rng_);
      s.expiry = std::min(s.sigma_expiry, s.r_expiry);
    } else {
      s.expiry = now + s.ttl(rng_);
    }
    if (measuring_) {
      ++s.misses;
      s.current.misses += 1.0;
      if (!std::isnan(s.last_miss)) {
        const double g = now - s.last_miss;
        s.gap.add(g);
        s.gap_sq.add(g * g);
      }
      s.last_miss = now;
    }
    if (!s.parents.empty()) {
      const auto k = s.parents.size() == 1 ? 0 : s.route(rng_);
      request(s.parents[k], now);
    }
  }

  const std::vector<NodeState>& nodes() const { return nodes_; }

 private:
  // Accounts presence up to `now`, evicting if the TTL ran out before it.
  void advance(std::size_t v, double now) {
    auto& s = nodes_[v];
    if (!s.present) {
      return;
    }
    const double end = std::min(s.expiry, now);
    if (measuring_ && end > s.since) {
      s.current.occupied += end - s.since;
    }
    s.since = std::max(s.since, end);
    if (s.expiry < now) {
      s.present = false;
    }
  }

  Rng rng_;
  std::vector<NodeState> nodes_;
  bool measuring_ = false;
  double boundary_ = 0.0;
};

Measured ratio(const std::vector<Batch>& batches, double Batch::*num, double Batch::*den) {
  double a = 0.0;
  double c = 0.0;
  for (const auto& b : batches) {
    a += b.*num;
    c += b.*den;
  }
  if (!(c > 0.0)) {
    return {kNaN, kNaN};
  }
  const double r = a / c;
  const auto k = static_cast<double>(batches.size());
  if (batches.size() < 2) {
    return {r, kNaN};
  }
  double ss = 0.0;
  for (const auto& b : batches) {
    const double d = b.*num - r * (b.*den);
    ss += d * d;
  }
  const double c_bar = c / k;
  return {r, std::sqrt(ss / (k * (k - 1.0))) / c_bar};
}

}  // namespace

const NodeEstimate& SimEstimate::node(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) {
      return n;
    }
  }
  throw ValidationError("simulation has no node '" + std::string(id) + "'");
}

SimEstimate simulate(const Topology& t, const SimConfig& cfg) {
  t.object(cfg.object);
  const std::size_t warmup = cfg.warmup.value_or(cfg.event_cap / 10);
  if (cfg.event_cap <= warmup) {
    throw ValidationError("event_cap must exceed warmup");
  }
  if (cfg.max_batches == 0) {
    throw ValidationError("max_batches must be positive");
  }
  Engine engine(t, cfg);
  auto& rng = engine.rng();

  std::vector<std::size_t> leaves;
  std::vector<MapSampler> samplers;
  for (std::size_t v = 0; v < t.nodes().size(); ++v) {
    if (t.is_leaf(v)) {
      leaves.push_back(v);
      samplers.emplace_back(t.arrival(v, cfg.object).map);
    }
  }
  using Item = std::tuple<double, std::uint64_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  std::uint64_t seq = 0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    samplers[i].reset(rng);
    queue.emplace(samplers[i].next_interval(rng), seq++, i);
  }

  const std::size_t measured = cfg.event_cap - warmup;
  const std::size_t batches = std::min(cfg.max_batches, measured);
  double start = 0.0;
  double now = 0.0;
  if (warmup == 0) {
    engine.start_measuring(0.0);
  }
  for (std::size_t e = 0; e < cfg.event_cap; ++e) {
    const auto [time, s, leaf] = queue.top();
    queue.pop();
    now = time;
    engine.request(leaves[leaf], now);
    queue.emplace(now + samplers[leaf].next_interval(rng), seq++, leaf);
    if (e + 1 == warmup) {
      start = now;
      engine.start_measuring(now);
    } else if (e >= warmup) {
      const std::size_t m = e - warmup;
      const std::size_t batch = m * batches / measured;
      const std::size_t next_batch = (m + 1) * batches / measured;
      if (m + 1 == measured || next_batch != batch) {
        engine.close_batch(now);
      }
    }
  }

  SimEstimate est;
  est.object = cfg.object;
  est.events = cfg.event_cap;
  est.warmup = warmup;
  est.batches = batches;
  est.duration = now - start;
  est.standard_errors_defined = batches >= 2;
  for (auto v : t.order()) {
    const auto& s = engine.nodes()[v];
    NodeEstimate ne;
    ne.id = t.nodes()[v].id;
    ne.requests = s.requests;
    ne.hits = s.hits;
    ne.misses = s.misses;
    ne.miss = ratio(s.batches, &Batch::misses, &Batch::requests);
    ne.hit = {1.0 - ne.miss.value, ne.miss.standard_error};
    ne.occupancy = ratio(s.batches, &Batch::occupied, &Batch::duration);
    ne.miss_rate = ratio(s.batches, &Batch::misses, &Batch::duration);
    ne.inter_miss_mean = s.gap.measured();
    ne.inter_miss_second_moment = s.gap_sq.measured();
    est.nodes.push_back(std::move(ne));
  }
  return est;
}

DiscrepancyReport compare(const AnalysisResult& analytic, const SimEstimate& empirical, double k_sigma) {
  std::set<std::string> a_ids;
  std::set<std::string> e_ids;
  for (const auto& n : analytic.nodes) {
    a_ids.insert(n.id);
  }
  for (const auto& n : empirical.nodes) {
    e_ids.insert(n.id);
  }
  if (a_ids != e_ids) {
    throw ValidationError("analysis and simulation cover different node sets");
  }
  DiscrepancyReport report;
  report.k_sigma = k_sigma;
  for (const auto& a : analytic.nodes) {
    const auto& e = empirical.node(a.id);
    const std::pair<const char*, std::pair<double, Measured>> rows[] = {
        {"hit", {a.metrics.hit_probability, e.hit}},
        {"miss", {a.metrics.miss_probability, e.miss}},
        {"occupancy", {a.metrics.occupancy, e.occupancy}},
        {"miss_rate", {a.metrics.miss_rate, e.miss_rate}},
    };
    for (const auto& [metric, values] : rows) {
      const auto& [av, m] = values;
      Discrepancy d{a.id, metric, av, m.value, m.standard_error, 0.0, false};
      const double diff = std::abs(av - m.value);
      if (diff == 0.0) {
        d.z = 0.0;
      } else if (m.standard_error > 0.0 && std::isfinite(m.standard_error)) {
        d.z = diff / m.standard_error;
      } else {
        d.z = kInf;
      }
      d.flagged = d.z >= k_sigma;
      report.entries.push_back(std::move(d));
    }
  }
  return report;
}

std::size_t DiscrepancyReport::flagged() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const Discrepancy& d) { return d.flagged; }));
}

}  // namespace ttlnet
