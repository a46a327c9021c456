// Command-line front end: parse DDL, replay data through channels, run experiments, serve a broker.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include "bad/bench.hpp"
#include "bad/engine.hpp"
#include "bad/error.hpp"
#include "bad/json_io.hpp"

using namespace bad;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_subscribe(const std::string& stmt) {
  auto pos = stmt.find_first_not_of(" \t\r\n");
  return pos != std::string::npos && stmt.compare(pos, 9, "SUBSCRIBE") == 0;
}

json describe(const ChannelDefinition& def) {
  json preds = json::array();
  for (const auto& p : def.predicates) preds.push_back({{"class", std::string(to_string(p.cls))}, {"text", to_string(p)}});
  json ds = json::array();
  for (const auto& d : def.datasets) ds.push_back({{"dataset", d.dataset}, {"alias", d.alias}});
  json proj = json::array();
  for (const auto& f : def.projection) proj.push_back(f.alias + "." + f.path);
  return {{"name", def.name},
          {"params", def.params},
          {"periodSeconds", def.period_seconds()},
          {"projection", proj},
          {"datasets", ds},
          {"predicates", preds},
          {"canonical", to_ddl(def)}};
}

ValueType parse_type(const std::string& s) {
  for (auto t : {ValueType::Bool, ValueType::Int, ValueType::Double, ValueType::String, ValueType::Point}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorKind::ConfigError, "unknown field type '" + s + "'");
}

int cmd_parse(const std::vector<std::string>& inputs, bool file) {
  for (const auto& in : inputs) {
    auto text = file ? slurp(in) : in;
    for (const auto& stmt : split_statements(text)) {
      if (is_subscribe(stmt)) {
        auto s = parse_subscribe(stmt);
        json args = json::array();
        for (const auto& v : s.argValues) args.push_back(to_json(v));
        std::cout << json{{"subscribe", s.channelName}, {"params", args}, {"broker", s.brokerName}, {"canonical", to_ddl(s)}}.dump()
                  << "\n";
      } else {
        std::cout << describe(parse_channel_ddl(stmt)).dump() << "\n";
      }
    }
  }
  return 0;
}

// Setup file: {"datasets":[{"name":..,"fields":[{"name":..,"type":"int"}..]}..],
//              "brokers":[{"name":..,"url":"http://.."}..]}  (brokers without url are in-process)
struct Replay {
  std::unique_ptr<Engine> engine;
  std::shared_ptr<VirtualClock> clock;
  std::map<std::string, std::shared_ptr<CountingSink>> sinks;
};

Replay build(const std::string& setupPath, const bench::Config& cfg) {
  Replay r;
  r.clock = std::make_shared<VirtualClock>();
  r.engine = std::make_unique<Engine>(bench::engine_config(cfg), r.clock);
  auto setup = json::parse(slurp(setupPath));
  for (const auto& d : setup.value("datasets", json::array())) {
    std::vector<FieldSpec> fields;
    for (const auto& f : d.at("fields")) fields.push_back({f.at("name").get<std::string>(), parse_type(f.at("type").get<std::string>())});
    r.engine->create_dataset(d.at("name").get<std::string>(), Schema(std::move(fields)));
  }
  for (const auto& b : setup.value("brokers", json::array())) {
    auto name = b.at("name").get<std::string>();
    if (b.contains("url")) {
      r.engine->brokers().register_broker(name, BrokerEndpoint::http(b.at("url").get<std::string>()));
    } else {
      auto sink = std::make_shared<CountingSink>();
      r.sinks[name] = sink;
      r.engine->brokers().register_broker(name, BrokerEndpoint::in_process(sink));
    }
  }
  return r;
}

int cmd_run(const std::string& setupPath, const std::vector<std::string>& ddlFiles, const std::vector<std::string>& dataSpecs,
            const std::vector<std::string>& subFiles, std::size_t executions, const std::string& configPath,
            const std::string& modeName, const std::string& csvPath) {
  auto cfg = configPath.empty() ? bench::Config{} : bench::Config::load(configPath);
  auto r = build(setupPath, cfg);
  auto& eng = *r.engine;
  std::optional<PlanMode> mode;
  if (!modeName.empty()) mode = parse_plan_mode(modeName);

  std::vector<std::string> channels;
  for (const auto& f : ddlFiles) {
    for (const auto& stmt : split_statements(slurp(f))) {
      if (is_subscribe(stmt)) {
        eng.subscribe(parse_subscribe(stmt));
      } else {
        auto def = parse_channel_ddl(stmt);
        eng.register_channel(def, {.mode = mode, .startTs = 0});
        channels.push_back(def.name);
      }
    }
  }
  for (const auto& f : subFiles) {
    std::ifstream in(f);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + f);
    for (const auto& j : read_ndjson(in)) {
      auto req = subscription_from_json(j);
      eng.subscribe(req.channel, req.params, req.broker, req.id);
    }
  }
  if (channels.empty()) throw Error(ErrorKind::ConfigError, "no channel defined");

  // Records of each file are spread evenly over the executions of the first channel's period.
  std::vector<std::pair<std::string, std::vector<Record>>> data;
  for (const auto& spec : dataSpecs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, "--data expects dataset=file.ndjson");
    auto name = spec.substr(0, eq);
    const auto& schema = eng.dataset(name).schema();
    std::ifstream in(spec.substr(eq + 1));
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + spec.substr(eq + 1));
    std::vector<Record> recs;
    for (const auto& j : read_ndjson(in)) recs.push_back(record_from_json(j, schema));
    data.emplace_back(name, std::move(recs));
  }
  const auto period = eng.channel(channels.front()).period.count();
  std::ofstream csv;
  if (!csvPath.empty()) {
    csv.open(csvPath);
    csv << bench::kCsvHeader << "\n";
  }
  for (std::size_t k = 0; k < executions; ++k) {
    const Timestamp begin = static_cast<Timestamp>(k) * period, end = begin + period;
    for (auto& [name, recs] : data) {
      std::size_t lo = recs.size() * k / executions, hi = recs.size() * (k + 1) / executions;
      for (std::size_t i = lo; i < hi; ++i) {
        r.clock->set(begin + static_cast<Timestamp>((i - lo + 1) * static_cast<std::size_t>(period) / (hi - lo + 1)));
        eng.ingest(name, recs[i]);
      }
    }
    r.clock->set(end);
    for (const auto& ch : channels) {
      auto res = eng.execute_channel(ch, end);
      for (const auto& [broker, rep] : eng.brokers().deliver(res.batch)) {
        res.stats.deliveryMs += rep.receivingMs + rep.convertMs + rep.sendOutMs;
        res.stats.bytesDelivered += rep.payloadBytes;
        res.stats.subscribersNotified += rep.subscribersNotified;
        for (const auto& e : rep.errors) res.stats.warnings.push_back(broker + ": " + e);
      }
      std::cout << to_json(res.stats).dump() << "\n";
      if (csv) {
        bench::ExperimentRow row{"run", std::string(to_string(res.stats.mode)), ch, k, res.stats.wallTimeMs,
                                 res.stats.recordsScanned, res.stats.resultsCount, res.stats.bytesDelivered, {}};
        bench::write_csv(csv, {row}, false);
      }
    }
  }
  return 0;
}

int cmd_subscribe(const std::string& setupPath, const std::vector<std::string>& ddlFiles, const std::vector<std::string>& statements) {
  auto r = build(setupPath, {});
  auto& eng = *r.engine;
  for (const auto& f : ddlFiles) {
    for (const auto& stmt : split_statements(slurp(f))) {
      if (is_subscribe(stmt)) {
        eng.subscribe(parse_subscribe(stmt));
      } else {
        eng.register_channel(parse_channel_ddl(stmt));
      }
    }
  }
  for (const auto& text : statements) {
    for (const auto& stmt : split_statements(text)) {
      auto s = parse_subscribe(stmt);
      auto id = eng.subscribe(s);
      std::cout << json{{"subscriptionId", id}, {"channel", s.channelName}, {"group", *eng.subscriptions(s.channelName).group_of(id)}}.dump()
                << "\n";
    }
  }
  for (const auto& ch : eng.channel_names()) {
    json groups = json::array();
    for (const auto& g : eng.groups_for(ch)) {
      json params = json::array();
      for (const auto& v : g.params) params.push_back(to_json(v));
      groups.push_back({{"groupId", g.groupId}, {"params", params}, {"broker", g.broker}, {"size", g.subIds.size()}, {"bytes", g.serializedSize}});
    }
    std::cout << json{{"channel", ch}, {"groups", groups}}.dump() << "\n";
  }
  return 0;
}

int cmd_bench(const std::string& experiment, const std::string& configPath, const std::string& out, std::uint64_t seed) {
  auto cfg = configPath.empty() ? bench::Config{} : bench::Config::load(configPath);
  auto rows = bench::run_experiment(experiment, cfg, seed);
  if (out.empty() || out == "-") {
    bench::write_csv(std::cout, rows);
  } else {
    std::ofstream f(out);
    if (!f) throw Error(ErrorKind::IoError, "cannot write " + out);
    bench::write_csv(f, rows);
    std::cerr << rows.size() << " rows written to " << out << "\n";
  }
  return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const std::string& host, int port, bool quiet) {
  httplib::Server server;
  g_server = &server;
  std::mutex mu;
  std::size_t messages = 0, notified = 0, bytes = 0;
  server.Post(R"(/.*)", [&](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
      return;
    }
    std::size_t ids = body.value("subIds", json::array()).size();
    std::lock_guard lock(mu);
    ++messages;
    notified += ids;
    bytes += req.body.size();
    if (!quiet) {
      std::cout << json{{"channel", body.value("channel", "")}, {"executionTs", body.value("executionTs", 0)},
                        {"subscribers", ids}, {"results", body.value("results", json::array()).size()}}.dump()
                << std::endl;
    }
    res.set_content(R"({"ok":true})", "application/json");
  });
  server.Get("/stats", [&](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mu);
    res.set_content(json{{"messages", messages}, {"notified", notified}, {"bytes", bytes}}.dump(), "application/json");
  });
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "broker listening on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) throw Error(ErrorKind::IoError, "cannot listen on port " + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Big Active Data channel engine"};
  app.require_subcommand(1);

  auto* parse = app.add_subcommand("parse", "parse CREATE CHANNEL / SUBSCRIBE statements and print them as JSON");
  std::vector<std::string> parseInputs;
  bool parseText = false;
  parse->add_option("inputs", parseInputs, "statement files (or statements with --text)")->required();
  parse->add_flag("--text", parseText, "treat inputs as statement text");

  auto* subscribe = app.add_subcommand("subscribe", "register SUBSCRIBE statements against channels and show the groups");
  std::string subSetup;
  std::vector<std::string> subDdl, subStmts;
  subscribe->add_option("--setup", subSetup, "datasets and brokers (JSON)")->required();
  subscribe->add_option("--ddl", subDdl, "channel definition files")->required();
  subscribe->add_option("statements", subStmts, "SUBSCRIBE statements");

  auto* run = app.add_subcommand("run", "replay NDJSON records through channels on a virtual clock");
  std::string runSetup, runConfig, runMode, runCsv;
  std::vector<std::string> runDdl, runData, runSubs;
  std::size_t executions = 1;
  run->add_option("--setup", runSetup, "datasets and brokers (JSON)")->required();
  run->add_option("--ddl", runDdl, "channel definitions and SUBSCRIBE statements")->required();
  run->add_option("--data", runData, "dataset=records.ndjson");
  run->add_option("--subscriptions", runSubs, "subscription NDJSON files");
  run->add_option("--executions", executions, "channel executions")->check(CLI::PositiveNumber);
  run->add_option("--config", runConfig, "engine config");
  run->add_option("--mode", runMode, "plan mode for every channel");
  run->add_option("--csv", runCsv, "append stats rows to this CSV");

  auto* bench = app.add_subcommand("bench", "experiments");
  bench->require_subcommand(1);
  auto* benchRun = bench->add_subcommand("run", "run one experiment (or 'all') and write CSV rows");
  std::string experiment, benchConfig, benchOut;
  std::uint64_t seed = 1;
  benchRun->add_option("experiment", experiment, "subgroup | paramjoin | selectivity | capacity | scaling | broker | table2 | all")
      ->required();
  benchRun->add_option("--config", benchConfig, "config file");
  benchRun->add_option("--out", benchOut, "CSV output (default stdout)");
  benchRun->add_option("--seed", seed, "workload seed");

  auto* broker = app.add_subcommand("broker", "broker utilities");
  broker->require_subcommand(1);
  auto* serve = broker->add_subcommand("serve", "receive wire messages over HTTP");
  int port = 9000;
  std::string host = "127.0.0.1";
  bool quiet = false;
  serve->add_option("--port", port, "listen port");
  serve->add_option("--host", host, "listen address");
  serve->add_flag("--quiet", quiet, "do not print messages");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*parse) return cmd_parse(parseInputs, !parseText);
    if (*subscribe) return cmd_subscribe(subSetup, subDdl, subStmts);
    if (*run) return cmd_run(runSetup, runDdl, runData, runSubs, executions, runConfig, runMode, runCsv);
    if (*benchRun) return cmd_bench(experiment, benchConfig, benchOut, seed);
    if (*serve) return cmd_serve(host, port, quiet);
  } catch (const SyntaxError& e) {
    std::cerr << "syntax error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
