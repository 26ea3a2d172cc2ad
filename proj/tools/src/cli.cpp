#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ttlnet/errors.hpp"
#include "ttlnet/renewal.hpp"

namespace ttlnet::cli {
namespace {

using json = nlohmann::json;

json measured(const Measured& m) {
  return {{"value", m.value}, {"se", m.standard_error}};
}

std::string fixed(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& r : rows) {
      width[c] = std::max(width[c], r[c].size());
    }
  }
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
    }
    out << '\n';
  };
  line(header);
  std::vector<std::string> rule;
  for (auto w : width) {
    rule.emplace_back(w, '-');
  }
  line(rule);
  for (const auto& r : rows) {
    line(r);
  }
}

void print_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << (c ? "," : "") << cells[c];
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) {
    line(r);
  }
}

struct Document {
  json payload;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void emit(const Document& doc, const std::string& format, std::ostream& out) {
  if (format == "json") {
    out << doc.payload.dump(2) << '\n';
  } else if (format == "csv") {
    print_csv(out, doc.header, doc.rows);
  } else {
    print_table(out, doc.header, doc.rows);
  }
}

int write_output(const Document& doc, const std::string& format, const std::string& path,
                 std::ostream& out, std::ostream& err) {
  if (path.empty()) {
    emit(doc, format, out);
    return kOk;
  }
  std::ofstream file(path);
  if (!file) {
    err << json{{"error", {{"kind", "io"}, {"message", "cannot write '" + path + "'"}}}}.dump() << '\n';
    return kInvalid;
  }
  emit(doc, format, file);
  return kOk;
}

int report_error(std::ostream& err, const std::string& kind, const std::string& message, json extra = {}) {
  json e = {{"kind", kind}, {"message", message}};
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    e[it.key()] = it.value();
  }
  err << json{{"error", e}}.dump() << '\n';
  return kind == "budget_exceeded" ? kBudget : kInvalid;
}

std::vector<std::string> object_ids(const Topology& t, const std::string& requested) {
  if (!requested.empty()) {
    t.object(requested);
    return {requested};
  }
  std::vector<std::string> ids;
  for (const auto& o : t.objects()) {
    ids.push_back(o.id);
  }
  return ids;
}

std::size_t count_from(double v, const char* flag) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw ValidationError(std::string(flag) + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

struct AnalyzeArgs {
  std::string config;
  std::string object;
  double budget = static_cast<double>(kDefaultStateBudget);
  std::string format = "json";
  std::string out;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  const auto topo = load_topology(a.config);
  const auto budget = count_from(a.budget, "--budget");
  Document doc;
  doc.payload = {{"command", "analyze"}, {"budget", budget}, {"results", json::array()}};
  doc.header = {"object", "node", "input_dimension", "output_dimension", "hit_probability",
                "miss_probability", "occupancy", "input_rate", "miss_rate", "expected_inter_miss"};
  for (const auto& id : object_ids(topo, a.object)) {
    const auto r = analyze(topo, id, budget);
    doc.payload["results"].push_back(to_json(r));
    for (const auto& n : r.nodes) {
      const auto& m = n.metrics;
      doc.rows.push_back({r.object, n.id, std::to_string(n.input_dimension),
                          std::to_string(n.output_dimension), fixed(m.hit_probability),
                          fixed(m.miss_probability), fixed(m.occupancy), fixed(m.input_rate),
                          fixed(m.miss_rate), fixed(m.expected_inter_miss)});
    }
  }
  return write_output(doc, a.format, a.out, out, err);
}

struct SimulateArgs {
  std::string config;
  std::string object;
  double events = 1e6;
  std::optional<double> warmup;
  std::uint64_t seed = 1;
  std::string format = "json";
  std::string out;
  std::string against;
  double k_sigma = 4.0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const auto topo = load_topology(a.config);
  SimConfig cfg;
  cfg.event_cap = count_from(a.events, "--events");
  if (a.warmup) {
    cfg.warmup = count_from(*a.warmup, "--warmup");
  }
  cfg.seed = a.seed;
  const auto objects = object_ids(topo, a.object);
  if (cfg.event_cap <= cfg.warmup.value_or(cfg.event_cap / 10)) {
    throw ValidationError("event_cap must exceed warmup");
  }

  json against;
  if (!a.against.empty()) {
    std::ifstream in(a.against);
    if (!in) {
      throw ConfigError("--against", "cannot open analysis file '" + a.against + "'");
    }
    try {
      against = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("--against", std::string("malformed analysis JSON: ") + e.what());
    }
  }

  Document doc;
  doc.payload = {{"command", "simulate"}, {"seed", a.seed}, {"results", json::array()}};
  doc.header = {"object", "node", "metric", "value", "se"};
  for (const auto& id : objects) {
    cfg.object = id;
    const auto est = simulate(topo, cfg);
    auto j = to_json(est);
    for (const auto& n : est.nodes) {
      const std::pair<const char*, const Measured*> metrics[] = {
          {"hit", &n.hit},
          {"miss", &n.miss},
          {"occupancy", &n.occupancy},
          {"miss_rate", &n.miss_rate},
          {"inter_miss_mean", &n.inter_miss_mean},
          {"inter_miss_second_moment", &n.inter_miss_second_moment},
      };
      for (const auto& [name, m] : metrics) {
        doc.rows.push_back({id, n.id, name, fixed(m->value), fixed(m->standard_error)});
      }
    }
    if (!against.is_null()) {
      const json* match = nullptr;
      for (const auto& r : against.at("results")) {
        if (r.at("object") == id) {
          match = &r;
        }
      }
      if (!match) {
        throw ConfigError("--against", "analysis has no result for object '" + id + "'");
      }
      const auto report = compare(analysis_from_json(*match), est, a.k_sigma);
      j["comparison"] = to_json(report);
    }
    doc.payload["results"].push_back(std::move(j));
  }
  return write_output(doc, a.format, a.out, out, err);
}

struct Table1Args {
  std::vector<double> lambda{1.0};
  std::vector<double> mu{1.0};
  std::vector<double> nu{1.0};
  std::vector<double> omega{1.0};
  std::string format = "json";
  std::string out;
};

int cmd_table1(const Table1Args& a, std::ostream& out, std::ostream& err) {
  for (const auto* list : {&a.lambda, &a.mu, &a.nu}) {
    for (double v : *list) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError("rates must be positive and finite");
      }
    }
  }
  for (double w : a.omega) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("omega must be non-negative and finite");
    }
  }
  const auto rows = table1(a.lambda, a.mu, a.nu, a.omega);
  Document doc;
  doc.payload = {{"command", "table1"}, {"tolerance", 1e-12}, {"rows", json::array()}};
  doc.header = {"model", "lambda", "mu", "nu", "omega", "transform_closed", "transform_engine",
                "stopped_sum_closed", "stopped_sum_engine", "occupancy_closed", "occupancy_engine",
                "max_relative_difference"};
  bool agree = true;
  for (const auto& r : rows) {
    const double diff = r.max_relative_difference();
    agree = agree && diff <= 1e-12;
    doc.payload["rows"].push_back({{"model", r.model},
                                   {"lambda", r.lambda},
                                   {"mu", r.mu},
                                   {"nu", r.nu},
                                   {"omega", r.omega},
                                   {"transform", {{"closed", r.transform_closed}, {"engine", r.transform_engine}}},
                                   {"stopped_sum",
                                    {{"closed", r.stopped_sum_closed}, {"engine", r.stopped_sum_engine}}},
                                   {"occupancy", {{"closed", r.occupancy_closed}, {"engine", r.occupancy_engine}}},
                                   {"max_relative_difference", diff}});
    doc.rows.push_back({r.model, fixed(r.lambda), fixed(r.mu), fixed(r.nu), fixed(r.omega),
                        fixed(r.transform_closed), fixed(r.transform_engine), fixed(r.stopped_sum_closed),
                        fixed(r.stopped_sum_engine), fixed(r.occupancy_closed), fixed(r.occupancy_engine),
                        fixed(diff)});
  }
  doc.payload["agree"] = agree;
  const int rc = write_output(doc, a.format, a.out, out, err);
  if (rc == kOk && !agree) {
    err << json{{"error", {{"kind", "disagreement"}, {"message", "engine differs from closed form by more than 1e-12"}}}}.dump()
        << '\n';
    return kFailure;
  }
  return rc;
}

double relative(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

double Table1Row::max_relative_difference() const {
  return std::max({relative(transform_closed, transform_engine), relative(stopped_sum_closed, stopped_sum_engine),
                   relative(occupancy_closed, occupancy_engine)});
}

std::vector<Table1Row> table1(const std::vector<double>& lambdas, const std::vector<double>& mus,
                              const std::vector<double>& nus, const std::vector<double>& omegas) {
  std::vector<Table1Row> rows;
  for (double l : lambdas) {
    for (double m : mus) {
      for (double n : nus) {
        for (double w : omegas) {
          const auto x = RenewalSpec::exponential(l);
          const auto add = [&](std::string model, const StoppingPolicy& p, double nu, double lc, double sc,
                               double pc) {
            Table1Row r{std::move(model), l, m, nu, w, lc, 0.0, sc, 0.0, pc, 0.0};
            r.transform_engine = transform(x, p, w).value;
            r.stopped_sum_engine = expected_stopped_sum(x, p).value;
            r.occupancy_engine = occupancy_renewal(x, p).value;
            rows.push_back(std::move(r));
          };
          const double mm_l = l / (l + w) * m / (m + w);
          const double mm_s = (l + m) / (l * m);
          const double mm_p = l / (l + m);
          add("M-M-R", StoppingPolicy::r(RenewalSpec::exponential(m)), 0.0, mm_l, mm_s, mm_p);
          add("M-M-Sigma", StoppingPolicy::sigma(RenewalSpec::exponential(m)), 0.0, mm_l, mm_s, mm_p);
          const double a = l * std::exp(-l / m);
          add("M-D-R", StoppingPolicy::r(RenewalSpec::deterministic(1.0 / m)), 0.0,
              a / (a + w * std::exp(w / m)), 1.0 / a, 1.0 - std::exp(-l / m));
          add("M-D-Sigma", StoppingPolicy::sigma(RenewalSpec::deterministic(1.0 / m)), 0.0,
              l / (l + w) * std::exp(-w / m), mm_s, mm_p);
          add("M-M-min", StoppingPolicy::min(RenewalSpec::exponential(m), RenewalSpec::exponential(n)), n,
              l / (l + w) * (m + n) / (m + n + w), (l + m + n) / (l * (m + n)), l / (l + m + n));
        }
      }
    }
  }
  return rows;
}

json to_json(const AnalysisResult& r) {
  json nodes = json::array();
  for (const auto& n : r.nodes) {
    const auto& m = n.metrics;
    nodes.push_back({{"id", n.id},
                     {"input_dimension", n.input_dimension},
                     {"output_dimension", n.output_dimension},
                     {"hit_probability", m.hit_probability},
                     {"miss_probability", m.miss_probability},
                     {"occupancy", m.occupancy},
                     {"input_rate", m.input_rate},
                     {"miss_rate", m.miss_rate},
                     {"expected_inter_miss", m.expected_inter_miss}});
  }
  return {{"object", r.object}, {"origin_miss_rate", r.origin_miss_rate}, {"nodes", nodes}};
}

AnalysisResult analysis_from_json(const json& j) {
  AnalysisResult r;
  r.object = j.at("object").get<std::string>();
  r.origin_miss_rate = j.at("origin_miss_rate").get<double>();
  for (const auto& n : j.at("nodes")) {
    NodeAnalysis na;
    na.id = n.at("id").get<std::string>();
    na.input_dimension = n.at("input_dimension").get<std::size_t>();
    na.output_dimension = n.at("output_dimension").get<std::size_t>();
    na.metrics.hit_probability = n.at("hit_probability").get<double>();
    na.metrics.miss_probability = n.at("miss_probability").get<double>();
    na.metrics.occupancy = n.at("occupancy").get<double>();
    na.metrics.input_rate = n.at("input_rate").get<double>();
    na.metrics.miss_rate = n.at("miss_rate").get<double>();
    na.metrics.expected_inter_miss = n.at("expected_inter_miss").get<double>();
    r.nodes.push_back(std::move(na));
  }
  return r;
}

json to_json(const SimEstimate& e) {
  json nodes = json::array();
  for (const auto& n : e.nodes) {
    nodes.push_back({{"id", n.id},
                     {"requests", n.requests},
                     {"hits", n.hits},
                     {"misses", n.misses},
                     {"hit", measured(n.hit)},
                     {"miss", measured(n.miss)},
                     {"occupancy", measured(n.occupancy)},
                     {"miss_rate", measured(n.miss_rate)},
                     {"inter_miss_mean", measured(n.inter_miss_mean)},
                     {"inter_miss_second_moment", measured(n.inter_miss_second_moment)}});
  }
  return {{"object", e.object},
          {"events", e.events},
          {"warmup", e.warmup},
          {"batches", e.batches},
          {"duration", e.duration},
          {"standard_errors_defined", e.standard_errors_defined},
          {"nodes", nodes}};
}

json to_json(const DiscrepancyReport& r) {
  json entries = json::array();
  for (const auto& d : r.entries) {
    entries.push_back({{"node", d.node},
                       {"metric", d.metric},
                       {"analytic", d.analytic},
                       {"empirical", d.empirical},
                       {"se", d.standard_error},
                       {"z", std::isfinite(d.z) ? json(d.z) : json("inf")},
                       {"flagged", d.flagged}});
  }
  return {{"k_sigma", r.k_sigma}, {"flagged", r.flagged()}, {"entries", entries}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact and simulated analysis of TTL cache networks", "ttlnet"};
  app.require_subcommand(1);
  const std::vector<std::string> formats{"json", "csv", "table"};

  AnalyzeArgs aa;
  auto* analyze_cmd = app.add_subcommand("analyze", "Exact per-node metrics from the MAP construction");
  analyze_cmd->add_option("--config", aa.config, "Topology JSON file")->required();
  analyze_cmd->add_option("--object", aa.object, "Object id (default: all objects)");
  analyze_cmd->add_option("--budget", aa.budget, "Maximum states per constructed matrix");
  analyze_cmd->add_option("--format", aa.format, "Output format")->check(CLI::IsMember(formats));
  analyze_cmd->add_option("--out", aa.out, "Output file (default: stdout)");

  SimulateArgs sa;
  auto* simulate_cmd = app.add_subcommand("simulate", "Discrete-event simulation of the topology");
  simulate_cmd->add_option("--config", sa.config, "Topology JSON file")->required();
  simulate_cmd->add_option("--object", sa.object, "Object id (default: all objects)");
  simulate_cmd->add_option("--events", sa.events, "Number of exogenous requests");
  simulate_cmd->add_option("--warmup", sa.warmup, "Leading requests to discard (default: 10%)");
  simulate_cmd->add_option("--seed", sa.seed, "Random seed");
  simulate_cmd->add_option("--format", sa.format, "Output format")->check(CLI::IsMember(formats));
  simulate_cmd->add_option("--out", sa.out, "Output file (default: stdout)");
  simulate_cmd->add_option("--against", sa.against, "Analysis JSON to compare with");
  simulate_cmd->add_option("--k-sigma", sa.k_sigma, "Flag threshold in standard errors");

  Table1Args ta;
  auto* table_cmd = app.add_subcommand("table1", "Closed-form renewal values next to the engine");
  table_cmd->add_option("--lambda", ta.lambda, "Request rates")->delimiter(',');
  table_cmd->add_option("--mu", ta.mu, "TTL rates (deterministic TTL = 1/mu)")->delimiter(',');
  table_cmd->add_option("--nu", ta.nu, "R-component TTL rates for min")->delimiter(',');
  table_cmd->add_option("--omega", ta.omega, "Transform arguments")->delimiter(',');
  table_cmd->add_option("--format", ta.format, "Output format")->check(CLI::IsMember(formats));
  table_cmd->add_option("--out", ta.out, "Output file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, "usage", e.what());
  }

  try {
    if (analyze_cmd->parsed()) {
      return cmd_analyze(aa, out, err);
    }
    if (simulate_cmd->parsed()) {
      return cmd_simulate(sa, out, err);
    }
    return cmd_table1(ta, out, err);
  } catch (const BudgetExceeded& e) {
    return report_error(err, "budget_exceeded", e.what(),
                        {{"node", e.node()}, {"stage", e.stage()}, {"dimension", e.dimension()},
                         {"budget", e.budget()}});
  } catch (const ConfigError& e) {
    return report_error(err, "config", e.what(), {{"path", e.path()}});
  } catch (const Error& e) {
    return report_error(err, "validation", e.what());
  } catch (const json::exception& e) {
    return report_error(err, "validation", e.what());
  }
}

}  // namespace ttlnet::cli
