#include "ttlnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ttlnet/errors.hpp"

namespace ttlnet {

using json = nlohmann::json;

TtlLaw TtlLaw::from_renewal(const RenewalSpec& r, std::size_t deterministic_stages) {
  std::optional<RenewalSpec> exact;
  if (r.is_deterministic()) {
    exact = r;
  }
  return {r.to_phase_type(deterministic_stages), std::move(exact), r.describe()};
}

TtlLaw TtlLaw::from_phase_type(PhaseTypeDistribution ph) {
  std::string d = "ph(order=" + std::to_string(ph.order()) + ")";
  return {std::move(ph), std::nullopt, std::move(d)};
}

Topology::Topology(std::vector<CacheNode> nodes, std::map<std::string, ArrivalSpec> arrivals,
                   std::vector<ObjectSpec> objects, std::size_t deterministic_stages)
    : nodes_(std::move(nodes)),
      arrivals_(std::move(arrivals)),
      objects_(std::move(objects)),
      deterministic_stages_(deterministic_stages) {
  if (nodes_.empty()) {
    throw ConfigError("nodes", "topology has no nodes");
  }
  const std::size_t n = nodes_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto path = "nodes[" + std::to_string(i) + "]";
    if (nodes_[i].id.empty()) {
      throw ConfigError(path + ".id", "node id must be non-empty");
    }
    if (!index_.emplace(nodes_[i].id, i).second) {
      throw ConfigError(path + ".id", "duplicate node id '" + nodes_[i].id + "'");
    }
    if ((nodes_[i].policy == Policy::MinSigmaR) != nodes_[i].ttl_r.has_value()) {
      throw ConfigError(path + ".ttl_r", "ttl_r is required for MinSigmaR and only allowed there");
    }
  }
  parents_.assign(n, {});
  children_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> seen;
    for (std::size_t j = 0; j < nodes_[i].children.size(); ++j) {
      const auto& c = nodes_[i].children[j];
      const auto path = "nodes[" + std::to_string(i) + "].children[" + std::to_string(j) + "]";
      auto it = index_.find(c);
      if (it == index_.end()) {
        throw ConfigError(path, "unknown child id '" + c + "'");
      }
      if (!seen.insert(it->second).second) {
        throw ConfigError(path, "child '" + c + "' listed twice");
      }
      children_[i].push_back(it->second);
      parents_[it->second].push_back(i);
    }
  }

  // Kahn's algorithm, children first, lowest document index among ready nodes.
  std::vector<std::size_t> pending(n);
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = children_[i].size();
    if (pending[i] == 0) {
      ready.push(i);
    }
  }
  while (!ready.empty()) {
    const auto v = ready.top();
    ready.pop();
    order_.push_back(v);
    for (auto p : parents_[v]) {
      if (--pending[p] == 0) {
        ready.push(p);
      }
    }
  }
  if (order_.size() != n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (pending[i] != 0) {
        throw ConfigError("nodes[" + std::to_string(i) + "].children",
                          "cycle detected through node '" + nodes_[i].id + "'");
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto path = "nodes[" + std::to_string(i) + "].split";
    const auto& split = nodes_[i].split;
    const std::size_t out_degree = parents_[i].size();
    if (!split) {
      if (out_degree > 1) {
        throw ConfigError(path, "node '" + nodes_[i].id + "' feeds " + std::to_string(out_degree) +
                                    " parents and needs a split vector");
      }
      continue;
    }
    if (split->size() != std::max<std::size_t>(out_degree, 1)) {
      throw ConfigError(path, "split has " + std::to_string(split->size()) + " entries but node '" +
                                  nodes_[i].id + "' has " + std::to_string(out_degree) + " parents");
    }
    double sum = 0.0;
    bool negative = false;
    for (double p : *split) {
      negative = negative || !(p >= 0.0);
      sum += p;
    }
    if (negative || std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError(path, "split not stochastic");
    }
  }

  for (const auto& [id, spec] : arrivals_) {
    auto it = index_.find(id);
    if (it == index_.end()) {
      throw ConfigError("arrivals." + id, "arrivals given for unknown node '" + id + "'");
    }
    if (!is_leaf(it->second)) {
      throw ConfigError("arrivals." + id, "arrivals are only allowed at leaves; '" + id + "' has children");
    }
  }

  if (objects_.empty()) {
    objects_.push_back({"default", {}, {}, {}});
  }
  std::set<std::string> object_ids;
  for (std::size_t k = 0; k < objects_.size(); ++k) {
    const auto& obj = objects_[k];
    const auto path = "objects[" + std::to_string(k) + "]";
    if (!object_ids.insert(obj.id).second) {
      throw ConfigError(path + ".id", "duplicate object id '" + obj.id + "'");
    }
    for (const auto& [id, spec] : obj.arrivals) {
      auto it = index_.find(id);
      if (it == index_.end() || !is_leaf(it->second)) {
        throw ConfigError(path + ".arrivals." + id, "'" + id + "' is not a leaf node");
      }
    }
    for (const auto* overrides : {&obj.ttl, &obj.ttl_r}) {
      for (const auto& [id, law] : *overrides) {
        if (index_.find(id) == index_.end()) {
          throw ConfigError(path + (overrides == &obj.ttl ? ".ttl." : ".ttl_r.") + id,
                            "unknown node '" + id + "'");
        }
      }
    }
    for (const auto& [id, law] : obj.ttl_r) {
      if (nodes_[index_.at(id)].policy != Policy::MinSigmaR) {
        throw ConfigError(path + ".ttl_r." + id, "ttl_r override for a node that is not MinSigmaR");
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (is_leaf(i) && !arrivals_.count(nodes_[i].id) && !obj.arrivals.count(nodes_[i].id)) {
        throw ConfigError("arrivals." + nodes_[i].id,
                          "leaf '" + nodes_[i].id + "' has no arrival process for object '" + obj.id + "'");
      }
    }
  }
}

std::size_t Topology::index_of(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw ValidationError("unknown node '" + std::string(id) + "'");
  }
  return it->second;
}

std::vector<double> Topology::split_of(std::size_t node) const {
  const auto& split = nodes_[node].split;
  if (split) {
    return *split;
  }
  return std::vector<double>(parents_[node].empty() ? 0 : 1, 1.0);
}

const ObjectSpec& Topology::object(std::string_view id) const {
  for (const auto& o : objects_) {
    if (o.id == id) {
      return o;
    }
  }
  throw ValidationError("unknown object '" + std::string(id) + "'");
}

const TtlLaw& Topology::ttl(std::size_t node, std::string_view object_id) const {
  const auto& obj = object(object_id);
  auto it = obj.ttl.find(nodes_[node].id);
  return it != obj.ttl.end() ? it->second : nodes_[node].ttl;
}

const TtlLaw& Topology::ttl_r(std::size_t node, std::string_view object_id) const {
  if (!nodes_[node].ttl_r) {
    throw ValidationError("node '" + nodes_[node].id + "' has no R-component TTL");
  }
  const auto& obj = object(object_id);
  auto it = obj.ttl_r.find(nodes_[node].id);
  return it != obj.ttl_r.end() ? it->second : *nodes_[node].ttl_r;
}

const ArrivalSpec& Topology::arrival(std::size_t leaf, std::string_view object_id) const {
  const auto& obj = object(object_id);
  const auto& id = nodes_[leaf].id;
  auto it = obj.arrivals.find(id);
  if (it != obj.arrivals.end()) {
    return it->second;
  }
  return arrivals_.at(id);
}

namespace {

std::string child_path(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string item_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const json& require_field(const json& obj, std::string_view key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(child_path(path, key), "required field is missing");
  }
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) {
    throw ConfigError(path, "expected a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    throw ConfigError(path, "expected a finite number");
  }
  return x;
}

double positive(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) {
    throw ConfigError(path, "must be positive");
  }
  return x;
}

std::size_t count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ConfigError(path, "expected a positive integer");
  }
  return v.get<std::size_t>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) {
    throw ConfigError(path, "expected a string");
  }
  return v.get<std::string>();
}

std::vector<double> vector_of(const json& v, const std::string& path) {
  if (!v.is_array()) {
    throw ConfigError(path, "expected an array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], item_path(path, i)));
  }
  return out;
}

RateMatrix matrix_of(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) {
    throw ConfigError(path, "expected a non-empty array of rows");
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < v.size(); ++i) {
    rows.push_back(vector_of(v[i], item_path(path, i)));
    if (rows.back().size() != rows.front().size()) {
      throw ConfigError(item_path(path, i), "rows have different lengths");
    }
  }
  return RateMatrix::from_dense(rows);
}

const json& single_key(const json& v, const std::string& path, std::string& key) {
  if (!v.is_object() || v.size() != 1) {
    throw ConfigError(path, "expected an object with exactly one key");
  }
  key = v.begin().key();
  return v.begin().value();
}

TtlLaw parse_ttl(const json& v, const std::string& path, std::size_t det_stages) {
  std::string key;
  const json& body = single_key(v, path, key);
  const auto bpath = child_path(path, key);
  try {
    if (key == "exp") {
      return TtlLaw::from_renewal(RenewalSpec::exponential(positive(body, bpath)), det_stages);
    }
    if (key == "det") {
      return TtlLaw::from_renewal(RenewalSpec::deterministic(positive(body, bpath)), det_stages);
    }
    if (key == "erlang") {
      const auto stages = count(require_field(body, "stages", bpath), child_path(bpath, "stages"));
      const double rate = positive(require_field(body, "rate", bpath), child_path(bpath, "rate"));
      return TtlLaw::from_renewal(RenewalSpec::erlang(stages, rate), det_stages);
    }
    if (key == "ph") {
      auto s = matrix_of(require_field(body, "s", bpath), child_path(bpath, "s"));
      auto pi = vector_of(require_field(body, "pi", bpath), child_path(bpath, "pi"));
      return TtlLaw::from_phase_type(PhaseTypeDistribution(std::move(s), ProbabilityVector(std::move(pi))));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(bpath, e.what());
  }
  throw ConfigError(path, "unknown TTL kind '" + key + "' (expected exp, det, erlang or ph)");
}

ArrivalSpec parse_arrival(const json& v, const std::string& path) {
  std::string key;
  const json& body = single_key(v, path, key);
  const auto bpath = child_path(path, key);
  std::optional<MarkovArrivalProcess> m;
  std::string description;
  try {
    if (key == "poisson") {
      const double rate = positive(body, bpath);
      m = MarkovArrivalProcess::poisson(rate);
      std::ostringstream d;
      d << "poisson(" << rate << ")";
      description = d.str();
    } else if (key == "mmpp") {
      auto q = matrix_of(require_field(body, "q", bpath), child_path(bpath, "q"));
      auto rates = vector_of(require_field(body, "rates", bpath), child_path(bpath, "rates"));
      m = MarkovArrivalProcess::mmpp(q, rates);
      description = "mmpp(" + std::to_string(rates.size()) + " states)";
    } else if (key == "map") {
      auto d0 = matrix_of(require_field(body, "d0", bpath), child_path(bpath, "d0"));
      auto d1 = matrix_of(require_field(body, "d1", bpath), child_path(bpath, "d1"));
      m = MarkovArrivalProcess(std::move(d0), std::move(d1));
      description = "map(" + std::to_string(m->states()) + " states)";
    } else {
      throw ConfigError(path, "unknown arrival kind '" + key + "' (expected poisson, mmpp or map)");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(bpath, e.what());
  }
  const auto report = validate_map(*m);
  if (!report.ok()) {
    throw ConfigError(bpath, "invalid MAP: " + report.summary());
  }
  if (!is_irreducible(m->generator())) {
    throw ConfigError(bpath, "arrival MAP is not irreducible");
  }
  return {std::move(*m), std::move(description)};
}

}  // namespace

Topology parse_topology(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("$", "topology document must be a JSON object");
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    static const std::set<std::string> known{"nodes", "arrivals", "objects", "deterministic_stages"};
    if (!known.count(it.key())) {
      throw ConfigError(it.key(), "unknown top-level field");
    }
  }
  std::size_t det_stages = 20;
  if (doc.contains("deterministic_stages")) {
    det_stages = count(doc["deterministic_stages"], "deterministic_stages");
  }

  const json& jnodes = require_field(doc, "nodes", "");
  if (!jnodes.is_array() || jnodes.empty()) {
    throw ConfigError("nodes", "expected a non-empty array");
  }
  std::vector<CacheNode> nodes;
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const auto path = item_path("nodes", i);
    const json& jn = jnodes[i];
    if (!jn.is_object()) {
      throw ConfigError(path, "expected an object");
    }
    for (auto it = jn.begin(); it != jn.end(); ++it) {
      static const std::set<std::string> known{"id", "policy", "ttl", "ttl_r", "children", "split"};
      if (!known.count(it.key())) {
        throw ConfigError(child_path(path, it.key()), "unknown node field");
      }
    }
    const auto id = text(require_field(jn, "id", path), child_path(path, "id"));
    const auto policy_name = text(require_field(jn, "policy", path), child_path(path, "policy"));
    auto policy = parse_policy(policy_name);
    if (!policy) {
      throw ConfigError(child_path(path, "policy"),
                        "unknown policy '" + policy_name + "' (expected R, Sigma or MinSigmaR)");
    }
    auto ttl = parse_ttl(require_field(jn, "ttl", path), child_path(path, "ttl"), det_stages);
    std::optional<TtlLaw> ttl_r;
    if (jn.contains("ttl_r")) {
      ttl_r = parse_ttl(jn["ttl_r"], child_path(path, "ttl_r"), det_stages);
    }
    std::vector<std::string> children;
    if (jn.contains("children")) {
      const auto cpath = child_path(path, "children");
      if (!jn["children"].is_array()) {
        throw ConfigError(cpath, "expected an array of node ids");
      }
      for (std::size_t j = 0; j < jn["children"].size(); ++j) {
        children.push_back(text(jn["children"][j], item_path(cpath, j)));
      }
    }
    std::optional<std::vector<double>> split;
    if (jn.contains("split")) {
      split = vector_of(jn["split"], child_path(path, "split"));
    }
    nodes.push_back({id, *policy, std::move(ttl), std::move(ttl_r), std::move(children), std::move(split)});
  }

  std::map<std::string, ArrivalSpec> arrivals;
  if (doc.contains("arrivals")) {
    const json& ja = doc["arrivals"];
    if (!ja.is_object()) {
      throw ConfigError("arrivals", "expected an object keyed by leaf id");
    }
    for (auto it = ja.begin(); it != ja.end(); ++it) {
      arrivals.emplace(it.key(), parse_arrival(it.value(), "arrivals." + it.key()));
    }
  }

  std::vector<ObjectSpec> objects;
  if (doc.contains("objects")) {
    const json& jo = doc["objects"];
    if (!jo.is_array()) {
      throw ConfigError("objects", "expected an array");
    }
    for (std::size_t k = 0; k < jo.size(); ++k) {
      const auto path = item_path("objects", k);
      ObjectSpec obj;
      if (jo[k].is_string()) {
        obj.id = jo[k].get<std::string>();
      } else if (jo[k].is_object()) {
        obj.id = text(require_field(jo[k], "id", path), child_path(path, "id"));
        for (const char* section : {"arrivals", "ttl", "ttl_r"}) {
          if (!jo[k].contains(section)) {
            continue;
          }
          const json& js = jo[k][section];
          const auto spath = child_path(path, section);
          if (!js.is_object()) {
            throw ConfigError(spath, "expected an object keyed by node id");
          }
          for (auto it = js.begin(); it != js.end(); ++it) {
            const auto ipath = spath + "." + it.key();
            if (std::string_view(section) == "arrivals") {
              obj.arrivals.emplace(it.key(), parse_arrival(it.value(), ipath));
            } else if (std::string_view(section) == "ttl") {
              obj.ttl.emplace(it.key(), parse_ttl(it.value(), ipath, det_stages));
            } else {
              obj.ttl_r.emplace(it.key(), parse_ttl(it.value(), ipath, det_stages));
            }
          }
        }
      } else {
        throw ConfigError(path, "expected an object id or an object");
      }
      if (obj.id.empty()) {
        throw ConfigError(path, "object id must be non-empty");
      }
      objects.push_back(std::move(obj));
    }
  }

  return Topology(std::move(nodes), std::move(arrivals), std::move(objects), det_stages);
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("$", "cannot open topology file '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_topology(buf.str());
}

}  // namespace ttlnet
