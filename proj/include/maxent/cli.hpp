#pragma once

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "maxent/dataset.hpp"
#include "maxent/eval.hpp"
#include "maxent/query.hpp"
#include "maxent/service.hpp"
#include "maxent/summary.hpp"

namespace maxent::cli {

// Process exit codes, one per failing module.
enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kUsage = 2,
  kSchemaIngest = 3,
  kStatistics = 4,
  kPolynomial = 5,
  kSolver = 6,
  kQuery = 7,
  kEval = 8,
  kService = 9,
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e) || dynamic_cast<const IngestError*>(&e)) return kSchemaIngest;
  if (dynamic_cast<const StatisticsError*>(&e)) return kStatistics;
  if (dynamic_cast<const PolynomialError*>(&e)) return kPolynomial;
  if (dynamic_cast<const SolverError*>(&e)) return kSolver;
  if (dynamic_cast<const QueryParseError*>(&e) || dynamic_cast<const PlanTooLargeError*>(&e) ||
      dynamic_cast<const SummaryError*>(&e)) {
    return kQuery;
  }
  if (dynamic_cast<const EvalError*>(&e)) return kEval;
  return kUnexpected;
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

inline std::vector<std::size_t> attribute_list(const Schema& schema, const std::string& csv) {
  std::vector<std::size_t> out;
  for (const auto& name : split(csv, ',')) {
    auto i = schema.find(name);
    if (!i) throw EvalError("unknown attribute '" + name + "'");
    out.push_back(*i);
  }
  return out;
}

inline double parse_rate(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw EvalError("bad sampling rate '" + s + "'");
}

inline eval::WorkloadSizes parse_workload(const std::string& spec) {
  eval::WorkloadSizes k{0, 0, 0};
  for (const auto& part : split(spec, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw EvalError("workload entries look like heavy=100");
    const auto key = part.substr(0, eq);
    std::size_t v = 0;
    try {
      v = std::stoull(part.substr(eq + 1));
    } catch (const std::exception&) {
      throw EvalError("bad workload size in '" + part + "'");
    }
    if (key == "heavy") {
      k.heavy = v;
    } else if (key == "light") {
      k.light = v;
    } else if (key == "null") {
      k.null = v;
    } else {
      throw EvalError("unknown workload class '" + key + "'");
    }
  }
  return k;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EvalError("cannot write '" + path + "'");
  out << text;
}

inline std::atomic<int> pending_signal{0};

inline void on_signal(int sig) { pending_signal.store(sig); }

}  // namespace detail

struct BuildArgs {
  std::string input, schema, out, trace_json;
  std::size_t pairs = 0, buckets = 0;
  std::string heuristic = "composite", strategy = "cover";
  std::vector<std::string> exclude;
  double threshold = 1e-6;
  std::size_t max_iterations = 30;
};

inline int run_build(const BuildArgs& a, std::ostream& out) {
  const auto schema = load_schema(a.schema);
  const auto data = ingest(a.input, schema);
  BuildOptions opts;
  opts.statistics.pair_budget = a.pairs;
  opts.statistics.bucket_budget = a.buckets;
  opts.statistics.heuristic = parse_heuristic(a.heuristic);
  opts.statistics.strategy = parse_strategy(a.strategy);
  for (const auto& name : a.exclude) opts.statistics.exclude.push_back(schema.index_of(name));
  opts.solver.threshold = a.threshold;
  opts.solver.max_iterations = a.max_iterations;
  std::unique_ptr<std::ofstream> trace;
  if (!a.trace_json.empty()) {
    trace = std::make_unique<std::ofstream>(a.trace_json);
    if (!*trace) throw SolverError("cannot write trace file '" + a.trace_json + "'");
    opts.solver.progress = trace.get();
  }
  const auto result = build_summary(data, opts);
  save_summary(result.summary, a.out);

  out << "rows: " << data.row_count();
  if (data.clamped_values()) out << " (" << data.clamped_values() << " values clamped)";
  out << "\nstatistics: " << result.summary.statistics().size() << " ("
      << result.summary.statistics().one_d_count() << " 1D)\n";
  out << "pairs:";
  for (const auto& [x, y] : result.pairs) out << ' ' << schema.attribute(x).name() << '/' << schema.attribute(y).name();
  out << "\nsize: terms=" << result.size.term_count << " slots=" << result.size.slot_count
      << " B_a=" << result.size.attribute_sets << " R=" << result.size.max_coverings << '\n';
  out << "solver: sweeps=" << result.solver.sweeps << " max_residual=" << result.solver.max_residual()
      << (result.solver.converged ? " converged" : " NOT converged") << '\n';
  out << "wrote " << a.out << '\n';
  return kOk;
}

inline int run_query(const std::string& summary_path, const std::string& sql, bool as_json, std::ostream& out) {
  const auto summary = load_summary(summary_path);
  const auto plan = parse_query(sql, summary.schema());
  const auto ans = answer(summary, plan);
  if (as_json) {
    auto j = groups_to_json(summary, plan, ans);
    j["wall_ms"] = ans.wall_ms;
    out << j.dump() << '\n';
    return kOk;
  }
  for (auto g : plan.group_by) out << summary.schema().attribute(g).name() << '\t';
  out << "raw\trounded\n";
  for (const auto& g : ans.groups) {
    for (std::size_t k = 0; k < g.values.size(); ++k) {
      out << summary.schema().attribute(plan.group_by[k]).describe(g.values[k]) << '\t';
    }
    out << std::setprecision(17) << g.raw << '\t' << g.rounded << '\n';
  }
  out << "(" << ans.groups.size() << " groups, " << std::setprecision(4) << ans.wall_ms << " ms)\n";
  return kOk;
}

struct EvalArgs {
  std::string data, schema, attrs, workload = "heavy=100,light=100,null=200", out, csv;
  std::vector<std::string> summaries, baselines;
  std::uint64_t seed = 1;
};

inline int run_eval(const EvalArgs& a, std::ostream& out) {
  const auto schema = load_schema(a.schema);
  const auto data = ingest(a.data, schema);
  const auto attrs = detail::attribute_list(schema, a.attrs);
  const auto workload = eval::build_workload(data, attrs, detail::parse_workload(a.workload), a.seed);

  std::vector<eval::Method> methods;
  for (const auto& path : a.summaries) {
    auto s = std::make_shared<const Summary>(load_summary(path));
    if (s->schema().to_json() != schema.to_json()) throw EvalError("summary '" + path + "' has a different schema");
    methods.push_back(eval::maxent_method(std::move(s), "maxent:" + service::summary_id(path)));
  }
  for (const auto& b : a.baselines) {
    const auto parts = detail::split(b, ':');
    if (parts.size() == 2 && parts[0] == "uniform") {
      auto s = std::make_shared<const eval::Sample>(eval::uniform_sample(data, detail::parse_rate(parts[1]), a.seed));
      methods.push_back(eval::sample_method(std::move(s), b));
    } else if (parts.size() == 3 && parts[0] == "stratified") {
      const auto strata = detail::attribute_list(schema, parts[1]);
      auto s = std::make_shared<const eval::Sample>(
          eval::stratified_sample(data, strata, detail::parse_rate(parts[2]), a.seed));
      methods.push_back(eval::sample_method(std::move(s), b));
    } else {
      throw EvalError("baseline must be uniform:RATE or stratified:ATTR,ATTR:RATE, got '" + b + "'");
    }
  }
  if (methods.empty()) throw EvalError("nothing to evaluate: pass --summary or --baseline");

  const auto report = eval::run_comparison(data, methods, workload);
  out << "workload: heavy=" << workload.heavy.size() << " light=" << workload.light.size()
      << " null=" << workload.null.size() << '\n';
  out << "method\theavy_err\tlight_err\tF\tmean_ms\n";
  for (const auto& m : report.methods) {
    out << m.method << '\t' << m.mean_error_heavy << '\t' << m.mean_error_light << '\t' << m.f_measure << '\t'
        << m.mean_wall_ms << '\n';
  }
  if (!a.out.empty()) {
    detail::write_file(a.out, report.to_json().dump(2) + "\n");
    std::ostringstream csv;
    report.write_csv(csv);
    const auto csv_path = a.csv.empty() ? std::filesystem::path(a.out).replace_extension(".csv").string() : a.csv;
    detail::write_file(csv_path, csv.str());
    out << "wrote " << a.out << " and " << csv_path << '\n';
  }
  return kOk;
}

inline int run_serve(service::ServiceConfig config, std::ostream& out) {
  service::Service svc(std::move(config));
  if (svc.bind() < 0) {
    std::cerr << "cannot bind port\n";
    return kService;
  }
  std::signal(SIGHUP, detail::on_signal);
  std::signal(SIGINT, detail::on_signal);
  std::signal(SIGTERM, detail::on_signal);
  std::thread watcher([&svc] {
    while (true) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      const int sig = detail::pending_signal.exchange(0);
      if (sig == SIGHUP) svc.reload();
      if (sig == SIGINT || sig == SIGTERM) {
        svc.stop();
        return;
      }
    }
  });
  out << "listening on port " << svc.port() << std::endl;
  svc.listen_after_bind();
  detail::pending_signal.store(SIGTERM);
  watcher.join();
  return kOk;
}

struct FixtureArgs {
  std::string domains, names, corr, out_csv, out_schema;
  std::size_t rows = 10'000;
  double skew = 1.0;
  std::uint64_t seed = 7;
};

inline int run_fixture_gen(const FixtureArgs& a, std::ostream& out) {
  eval::SyntheticSpec spec;
  for (const auto& d : detail::split(a.domains, ',')) spec.domain_sizes.push_back(static_cast<std::uint32_t>(std::stoul(d)));
  if (!a.names.empty()) spec.names = detail::split(a.names, ',');
  if (!a.corr.empty()) {
    for (const auto& c : detail::split(a.corr, ',')) {
      const auto p = detail::split(c, ':');
      if (p.size() != 3) throw EvalError("correlations look like 0:1:0.8");
      spec.correlations.push_back({std::stoul(p[0]), std::stoul(p[1]), std::stod(p[2])});
    }
  }
  spec.rows = a.rows;
  spec.skew = a.skew;
  spec.seed = a.seed;
  const auto data = eval::synthetic_dataset(spec);
  std::ostringstream csv;
  eval::write_csv(data, csv);
  detail::write_file(a.out_csv, csv.str());
  detail::write_file(a.out_schema, data.schema().to_json().dump(2) + "\n");
  out << "wrote " << data.row_count() << " rows to " << a.out_csv << '\n';
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"maxent: maximum-entropy summaries for approximate counting queries"};
  app.require_subcommand(1);

  BuildArgs b;
  auto* build = app.add_subcommand("build", "build a summary from a CSV file");
  build->add_option("--input", b.input, "CSV data")->required();
  build->add_option("--schema", b.schema, "schema JSON")->required();
  build->add_option("--out", b.out, "summary output path")->required();
  build->add_option("--pairs", b.pairs, "attribute-pair budget");
  build->add_option("--buckets", b.buckets, "statistics per pair");
  build->add_option("--heuristic", b.heuristic, "large | zero | composite");
  build->add_option("--strategy", b.strategy, "correlation | cover");
  build->add_option("--exclude", b.exclude, "attributes left out of pair selection");
  build->add_option("--threshold", b.threshold, "solver residual threshold");
  build->add_option("--max-iterations", b.max_iterations, "solver sweep cap");
  build->add_option("--trace-json", b.trace_json, "write one JSON line per solver sweep");

  std::string q_summary, q_sql;
  bool q_json = false;
  auto* query = app.add_subcommand("query", "answer a SQL counting query");
  query->add_option("--summary", q_summary)->required();
  query->add_option("--sql", q_sql)->required();
  query->add_flag("--json", q_json, "print the API JSON payload");

  EvalArgs e;
  auto* ev = app.add_subcommand("eval", "compare summaries and sampling baselines");
  ev->add_option("--data", e.data)->required();
  ev->add_option("--schema", e.schema)->required();
  ev->add_option("--attrs", e.attrs, "workload attributes, comma separated")->required();
  ev->add_option("--summary", e.summaries);
  ev->add_option("--baseline", e.baselines, "uniform:RATE or stratified:A,B:RATE");
  ev->add_option("--workload", e.workload);
  ev->add_option("--seed", e.seed);
  ev->add_option("--out", e.out, "JSON report path; CSV goes next to it");
  ev->add_option("--csv", e.csv);

  service::ServiceConfig sc;
  sc.log_level = service::log_level_from_env();
  auto* serve = app.add_subcommand("serve", "serve summaries over HTTP");
  serve->add_option("--summary", sc.summary_paths)->required();
  serve->add_option("--host", sc.host);
  serve->add_option("--port", sc.port);
  serve->add_option("--threads", sc.max_concurrent, "max concurrent requests");
  serve->add_option("--timeout-ms", sc.request_timeout_ms);

  FixtureArgs f;
  auto* gen = app.add_subcommand("fixture-gen", "");
  gen->group("");
  gen->add_option("--domains", f.domains)->required();
  gen->add_option("--names", f.names);
  gen->add_option("--corr", f.corr);
  gen->add_option("--rows", f.rows);
  gen->add_option("--skew", f.skew);
  gen->add_option("--seed", f.seed);
  gen->add_option("--out-csv", f.out_csv)->required();
  gen->add_option("--out-schema", f.out_schema)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int rc = app.exit(pe, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*build) return run_build(b, out);
    if (*query) return run_query(q_summary, q_sql, q_json, out);
    if (*ev) return run_eval(e, out);
    if (*serve) return run_serve(sc, out);
    if (*gen) return run_fixture_gen(f, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code_for(ex);
  }
  return kUsage;
}

}  // namespace maxent::cli
