#include "bad/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "bad/error.hpp"

namespace bad::bench {

// ---- config ---------------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
  return v;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config cfg;
  std::string section;
  std::size_t lineNo = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++lineNo;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineNo) + ": unterminated section");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineNo) + ": expected key = value");
    auto key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineNo) + ": empty key");
    cfg.set(section.empty() ? key : section + "." + key, unquote(trim(std::string_view(t).substr(eq + 1))));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> Config::find(std::string_view scope, const std::string& key) const {
  if (!scope.empty()) {
    auto it = values_.find(std::string(scope) + "." + key);
    if (it != values_.end()) return it->second;
  }
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  return std::nullopt;
}

std::string Config::get_string(std::string_view scope, const std::string& key, const std::string& fallback) const {
  return find(scope, key).value_or(fallback);
}

std::int64_t Config::get_int(std::string_view scope, const std::string& key, std::int64_t fallback) const {
  auto v = find(scope, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    auto x = std::stoll(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ConfigError, key + ": expected an integer, got '" + *v + "'");
  }
}

double Config::get_double(std::string_view scope, const std::string& key, double fallback) const {
  auto v = find(scope, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    auto x = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ConfigError, key + ": expected a number, got '" + *v + "'");
  }
}

std::vector<double> Config::get_list(std::string_view scope, const std::string& key, std::vector<double> fallback) const {
  auto v = find(scope, key);
  if (!v) return fallback;
  auto s = trim(*v);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    auto t = trim(item);
    if (t.empty()) continue;
    try {
      out.push_back(std::stod(t));
    } catch (const std::exception&) {
      throw Error(ErrorKind::ConfigError, key + ": bad list element '" + t + "'");
    }
  }
  return out;
}

EngineConfig engine_config(const Config& cfg) {
  EngineConfig ec;
  ec.frameSize = static_cast<std::size_t>(cfg.get_int("", "frame_size_bytes", static_cast<std::int64_t>(ec.frameSize)));
  ec.storagePartitions = static_cast<std::size_t>(cfg.get_int("", "partitions", static_cast<std::int64_t>(ec.storagePartitions)));
  ec.perEntryBytes = static_cast<std::size_t>(cfg.get_int("", "per_entry_bytes", static_cast<std::int64_t>(ec.perEntryBytes)));
  ec.parallelism = static_cast<std::size_t>(cfg.get_int("", "parallelism", 1));
  if (auto m = cfg.find("", "plan_mode")) ec.defaultMode = parse_plan_mode(*m);
  if (auto p = cfg.find("", "period_override")) ec.periodOverride = parse_iso_duration(*p);
  if (ec.frameSize == 0 || ec.storagePartitions == 0 || ec.parallelism == 0) {
    throw Error(ErrorKind::ConfigError, "frame_size_bytes, partitions and parallelism must be positive");
  }
  return ec;
}

// ---- rows -----------------------------------------------------------------------------------

void write_csv(std::ostream& out, const std::vector<ExperimentRow>& rows, bool header) {
  if (header) out << kCsvHeader << '\n';
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& r : rows) {
    out << field(r.experiment) << ',' << field(r.mode) << ',' << field(r.param) << ',' << r.rep << ','
        << std::fixed << std::setprecision(4) << r.wallMs << std::defaultfloat << ',' << r.recordsScanned << ','
        << r.results << ',' << r.bytesDelivered << '\n';
  }
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::nan("");
  std::sort(xs.begin(), xs.end());
  auto n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double median_wall(const std::vector<ExperimentRow>& rows, std::string_view mode, std::string_view param) {
  std::vector<double> xs;
  for (const auto& r : rows) {
    if (r.mode == mode && r.param == param) xs.push_back(r.wallMs);
  }
  return median(std::move(xs));
}

// ---- workloads ------------------------------------------------------------------------------

std::vector<FieldGenerator> tweet_fields(std::size_t textLength) {
  std::vector<FieldGenerator> f;
  f.push_back({"text", Text{textLength}, {}});
  f.push_back({"state", census_state_distribution(), {}});
  f.push_back({"threatening_rate", UniformInt{0, 10}, {}});
  f.push_back({"drug_activity",
               Categorical{{std::string("Manufacturing Drugs"), std::string("Selling Drugs"), std::string("Using Drugs"),
                            std::string("None")},
                           {}},
               {}});
  f.push_back({"about_country",
               Categorical{{std::string("US"), std::string("CA"), std::string("MX"), std::string("UK")}, {}}, {}});
  f.push_back({"retweet_count", UniformInt{0, 20000}, {}});
  f.push_back({"hate_speech_rate", UniformInt{0, 10}, {}});
  f.push_back({"weapon_Mentioned", Bernoulli{0.5}, {}});
  f.push_back({"location", UniformPoint{{0, 0}, {100, 100}}, {}});
  return f;
}

FieldGenerator& field(std::vector<FieldGenerator>& fields, std::string_view name) {
  for (auto& f : fields) {
    if (f.name == name) return f;
  }
  throw Error(ErrorKind::InvalidArgument, "no generated field " + std::string(name));
}

std::string username(std::size_t i) { return "user" + std::to_string(i); }

GeneratorSpec user_location_spec(std::uint64_t seed) {
  GeneratorSpec spec;
  spec.seed = seed;
  spec.fields.push_back({"username", Text{4}, {}});
  spec.fields.push_back({"location", UniformPoint{{0, 0}, {100, 100}}, {}});
  return spec;
}

std::string drugs_channel_ddl() {
  return R"(CREATE CONTINUOUS PUSH CHANNEL TweetsAboutDrugs(Mystate)
PERIOD duration ("PT10M") {
 SELECT t.text
 FROM EnrichedTweets t
 WHERE t.state=Mystate
       AND t.threatening_rate=10
       AND t.drug_activity="Manufacturing Drugs"
       AND is_new(t)};)";
}

std::string most_threatening_channel_ddl() {
  return R"(CREATE CONTINUOUS PUSH CHANNEL MostThreateningTweets(MyState)
PERIOD duration ("PT10M") {
 SELECT t.text
 FROM EnrichedTweets t
 WHERE t.state=MyState
       AND t.threatening_rate=10
       AND is_new(t)};)";
}

namespace {

struct CrimeCondition {
  const char* field;
  const char* ddl;
  CompareOp op;
  Value literal;
  double selectivity;
};

const std::vector<CrimeCondition>& crime_conditions() {
  static const std::vector<CrimeCondition> c = {
      {"about_country", R"(t.about_country="US")", CompareOp::Eq, std::string("US"), 0.5},
      {"retweet_count", "t.retweet_count>10000", CompareOp::Gt, std::int64_t{10000}, 0.5},
      {"hate_speech_rate", "t.hate_speech_rate>5", CompareOp::Gt, std::int64_t{5}, 0.5},
      {"threatening_rate", "t.threatening_rate>5", CompareOp::Gt, std::int64_t{5}, 0.2},
      {"weapon_Mentioned", "t.weapon_Mentioned=true", CompareOp::Eq, true, 0.2},
  };
  return c;
}

}  // namespace

std::string crime_channel_ddl(std::size_t k, bool suffix) {
  if (k < 1 || k > 5) throw Error(ErrorKind::InvalidArgument, "crime channel takes 1..5 conditions");
  std::string ddl = "CREATE CONTINUOUS PUSH CHANNEL TweetsAboutCrime";
  if (suffix) ddl += std::to_string(k);
  ddl += R"((MyUserName)
PERIOD duration ("PT10M") {
  SELECT t.text
  FROM UserLocations u, EnrichedTweets t
  WHERE spatial_distance(u.location,t.location)<10
        AND u.username=MyUserName)";
  for (std::size_t i = 0; i < k; ++i) ddl += std::string("\n        AND ") + crime_conditions()[i].ddl;
  ddl += "\n        AND is_new(t)};";
  return ddl;
}

void set_crime_targets(std::vector<FieldGenerator>& fields, std::size_t k) {
  for (std::size_t i = 0; i < k && i < crime_conditions().size(); ++i) {
    const auto& c = crime_conditions()[i];
    field(fields, c.field).target = TargetPredicate{c.op, c.literal, c.selectivity};
  }
}

namespace {

struct Bed {
  std::shared_ptr<VirtualClock> clock = std::make_shared<VirtualClock>();
  std::shared_ptr<CountingSink> sink = std::make_shared<CountingSink>();
  std::unique_ptr<Engine> engine;

  explicit Bed(EngineConfig ec) {
    engine = std::make_unique<Engine>(ec, clock);
    engine->brokers().register_broker(std::string(kBroker), BrokerEndpoint::in_process(sink));
  }
  Engine& operator*() { return *engine; }
  Engine* operator->() { return engine.get(); }
};

// Inserts generated records [first, first + n) at consecutive microsecond timestamps after the
// dataset's last arrival. Returns the last timestamp.
Timestamp load(Dataset& ds, const RecordGenerator& gen, std::size_t first, std::size_t n,
               std::vector<GeneratedRecord>* keep = nullptr) {
  Timestamp ts = std::max<Timestamp>(0, ds.last_arrival());
  for (std::size_t i = first; i < first + n; ++i) {
    auto g = gen.generate(i);
    g.record.arrivalTs = ++ts;
    if (keep) keep->push_back(g);
    ds.insert_record(std::move(g.record));
  }
  return ts;
}

Timestamp load_users(Engine& eng, std::size_t users, std::uint64_t seed) {
  RecordGenerator gen(user_location_spec(seed));
  auto& ds = eng.create_dataset(std::string(kUsers), gen.schema());
  Timestamp ts = 0;
  for (std::size_t i = 0; i < users; ++i) {
    auto r = gen(i);
    r.values[0] = username(i);
    r.arrivalTs = ++ts;
    ds.insert_record(std::move(r));
  }
  return ts;
}

ExperimentRow row_from(std::string experiment, const ExecutionStats& s, std::string param, std::size_t rep) {
  ExperimentRow r;
  r.experiment = std::move(experiment);
  r.mode = std::string(to_string(s.mode));
  r.param = std::move(param);
  r.rep = rep;
  r.wallMs = s.wallTimeMs;
  r.recordsScanned = s.recordsScanned;
  r.results = s.resultsCount;
  r.bytesDelivered = s.bytesDelivered;
  return r;
}

// Deterministic categorical draw for subscription `i`.
Value draw(const Categorical& c, std::uint64_t seed, std::size_t i) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + i);
  double u = std::uniform_real_distribution<double>(0, 1)(rng);
  for (std::size_t k = 0; k < c.values.size(); ++k) {
    u -= c.weights.empty() ? 1.0 / c.values.size() : c.weights[k];
    if (u < 0) return c.values[k];
  }
  return c.values.back();
}

std::size_t cfg_size(const Config& cfg, std::string_view scope, const std::string& key, std::int64_t fallback) {
  auto v = cfg.get_int(scope, key, fallback);
  if (v < 0) throw Error(ErrorKind::ConfigError, key + " must not be negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

// ---- subscription group size sweep ----------------------------------------------------------

SubgroupSweep sweep_subgroup_size(const Config& cfg, std::uint64_t seed) {
  constexpr std::string_view S = "subgroup";
  const auto subs = cfg_size(cfg, S, "subscriptions", 100000);
  const auto records = cfg_size(cfg, S, "records", 8192);
  const auto reps = cfg_size(cfg, S, "reps", 5);
  const double sel = cfg.get_double(S, "predicate_selectivity", 0.125);
  auto ec = engine_config(cfg);
  ec.frameSize = cfg_size(cfg, S, "frame_size_bytes", static_cast<std::int64_t>(ec.frameSize));

  Bed bed(ec);
  auto fields = tweet_fields(cfg_size(cfg, S, "text_length", 280));
  field(fields, "state").dist = Categorical{{std::string("CA")}, {}};
  field(fields, "threatening_rate").target = TargetPredicate{CompareOp::Eq, std::int64_t{10}, sel};
  field(fields, "drug_activity").target = TargetPredicate{CompareOp::Eq, std::string("Manufacturing Drugs"), sel};
  RecordGenerator gen({fields, seed});
  auto& ds = bed->create_dataset(std::string(kTweets), gen.schema());

  auto def = parse_channel_ddl(drugs_channel_ddl());
  bed->register_channel(def, {.mode = PlanMode::AggregatedSubs, .startTs = 0});
  for (std::size_t i = 0; i < subs; ++i) bed->subscribe(def.name, {Value(std::string("CA"))}, std::string(kBroker));
  const Timestamp until = load(ds, gen, 0, records);

  SubgroupSweep out;
  GroupCapacityPolicy policy{ec.frameSize, ec.perEntryBytes,
                             group_header_bytes(encode_key(std::vector<Value>{std::string("CA")}), kBroker), 0};
  out.frameCapacity = acceptable_group_size(policy);

  std::vector<std::size_t> sizes;
  for (std::size_t s = out.frameCapacity; s < subs; s *= 2) sizes.push_back(s);
  sizes.push_back(std::max<std::size_t>(subs, 1));
  for (std::size_t s = out.frameCapacity / 2; s >= 1; s /= 2) sizes.push_back(s);
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  if (subs <= 1) sizes = {1};

  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (auto size : sizes) {
      bed->set_group_size(def.name, size);
      bed->evaluate(def.name, 0, until);  // warm-up
      auto res = bed->evaluate(def.name, 0, until);
      auto row = row_from("subgroup", res.stats, std::to_string(size), rep);
      row.aux["frame_size"] = static_cast<double>(ec.frameSize);
      row.aux["groups"] = static_cast<double>(res.batch.perGroup.size());
      row.aux["group_bytes"] = static_cast<double>(policy.headerBytes + size * ec.perEntryBytes);
      out.rows.push_back(std::move(row));
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (auto size : sizes) {
    double m = median_wall(out.rows, "AggregatedSubs", std::to_string(size));
    if (m < best) {
      best = m;
      out.argmin = size;
    }
  }
  return out;
}

// ---- Original vs ParamJoin ------------------------------------------------------------------

std::vector<ExperimentRow> compare_plan_modes(const Config& cfg, std::uint64_t seed) {
  constexpr std::string_view S = "paramjoin";
  const auto subs = cfg_size(cfg, S, "subscriptions", 5000);
  const auto distinct = std::max<std::size_t>(1, cfg_size(cfg, S, "distinct_params", 50));
  const auto records = cfg_size(cfg, S, "records", 20000);
  const auto reps = cfg_size(cfg, S, "reps", 5);
  const double sel = cfg.get_double(S, "predicate_selectivity", 0.5);
  const auto fractions = cfg.get_list(S, "fractions", {0.10, 0.15, 0.20, 1.0});

  std::vector<ExperimentRow> rows;
  for (double phi : fractions) {
    if (phi < 0 || phi > 1) throw Error(ErrorKind::ConfigError, "matching fraction outside [0, 1]");
    // Subscriptions cover `distinct` values; the data draws from distinct/phi values, so a phi
    // share of the records carries a subscribed parameter. phi = 0 uses a disjoint domain.
    Categorical data;
    const std::size_t domain = phi > 0 ? static_cast<std::size_t>(std::llround(distinct / phi)) : distinct;
    for (std::size_t i = 0; i < domain; ++i) data.values.push_back((phi > 0 ? "S" : "X") + std::to_string(i));

    Bed bed(engine_config(cfg));
    auto fields = tweet_fields(cfg_size(cfg, S, "text_length", 128));
    field(fields, "state").dist = data;
    field(fields, "threatening_rate").target = TargetPredicate{CompareOp::Eq, std::int64_t{10}, sel};
    RecordGenerator gen({fields, seed});
    auto& ds = bed->create_dataset(std::string(kTweets), gen.schema());
    auto def = parse_channel_ddl(most_threatening_channel_ddl());
    bed->register_channel(def, {.mode = PlanMode::Original, .startTs = 0});
    for (std::size_t i = 0; i < subs; ++i) {
      bed->subscribe(def.name, {Value("S" + std::to_string(i % distinct))}, std::string(kBroker));
    }
    const Timestamp until = load(ds, gen, 0, records);
    const auto param = fmt(phi);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      std::array<PlanMode, 2> order = {PlanMode::Original, PlanMode::ParamJoin};
      if (rep % 2) std::swap(order[0], order[1]);
      for (auto mode : order) {
        bed->evaluate(def.name, 0, until, mode);
        auto res = bed->evaluate(def.name, 0, until, mode);
        auto row = row_from("paramjoin", res.stats, param, rep);
        row.aux["candidates"] = static_cast<double>(res.stats.candidateRows);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// ---- BAD index vs value index ---------------------------------------------------------------

SelectivitySweep sweep_selectivity(const Config& cfg, std::uint64_t seed) {
  constexpr std::string_view S = "selectivity";
  const auto history = cfg_size(cfg, S, "history", 50000);
  const auto window = cfg_size(cfg, S, "records", 20000);
  const auto users = std::max<std::size_t>(1, cfg_size(cfg, S, "users", 16));
  const auto subsPerUser = cfg_size(cfg, S, "subscriptions_per_user", 4);
  const auto reps = cfg_size(cfg, S, "reps", 5);

  Bed bed(engine_config(cfg));
  load_users(*bed, users, seed ^ 0x5eedULL);
  auto fields = tweet_fields(cfg_size(cfg, S, "text_length", 64));
  set_crime_targets(fields, 5);
  RecordGenerator gen({fields, seed});
  auto& ds = bed->create_dataset(std::string(kTweets), gen.schema());

  // Truth bit position of each crime condition.
  std::vector<std::size_t> bit(5);
  for (std::size_t c = 0; c < 5; ++c) {
    auto pos = gen.schema().require(crime_conditions()[c].field);
    bit[c] = static_cast<std::size_t>(std::find(gen.targets().begin(), gen.targets().end(), pos) - gen.targets().begin());
  }
  auto holds_first = [&](const GeneratedRecord& g, std::size_t k) {
    for (std::size_t c = 0; c < k; ++c) {
      if (!g.truth[bit[c]]) return false;
    }
    return true;
  };

  std::vector<GeneratedRecord> all;
  all.reserve(history + window);
  const Timestamp start = load(ds, gen, 0, history, &all);
  for (std::size_t k = 2; k <= 5; ++k) {
    auto def = parse_channel_ddl(crime_channel_ddl(k, true));
    bed->register_channel(def, {.mode = PlanMode::BadIndexMode, .startTs = start});
    for (std::size_t u = 0; u < users; ++u) {
      for (std::size_t j = 0; j < subsPerUser; ++j) bed->subscribe(def.name, {Value(username(u))}, std::string(kBroker));
    }
  }
  const Timestamp until = load(ds, gen, history, window, &all);

  SelectivitySweep out;
  for (std::size_t k = 2; k <= 5; ++k) {
    const auto name = "TweetsAboutCrime" + std::to_string(k);
    std::size_t best = 0, bestCount = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t n = std::count_if(all.begin(), all.end(), [&](const auto& g) { return g.truth[bit[c]]; });
      if (n < bestCount) {
        bestCount = n;
        best = c;
      }
    }
    bed->pin_value_index(name, best);
    out.matched[k] = std::count_if(all.begin() + history, all.end(), [&](const auto& g) { return holds_first(g, k); });
    out.windowed[k] = window;
  }
  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (std::size_t k = 2; k <= 5; ++k) {
      const auto name = "TweetsAboutCrime" + std::to_string(k);
      std::array<PlanMode, 2> order = {PlanMode::TraditionalIndex, PlanMode::BadIndexMode};
      if (rep % 2) std::swap(order[0], order[1]);
      for (auto mode : order) {
        bed->evaluate(name, start, until, mode);
        auto res = bed->evaluate(name, start, until, mode);
        if (mode == PlanMode::BadIndexMode) {
          out.indexScanned[k] = res.stats.recordsScanned;
          if (res.stats.recordsScanned != out.matched[k]) out.scannedExact = false;
        }
        auto row = row_from("selectivity", res.stats, std::to_string(k), rep);
        row.aux["matched_fraction"] = static_cast<double>(out.matched[k]) / static_cast<double>(std::max<std::size_t>(1, window));
        out.rows.push_back(std::move(row));
      }
    }
  }
  return out;
}

// ---- capacity probe -------------------------------------------------------------------------

namespace {

struct ProbeChannel {
  std::string name;
  std::unique_ptr<Bed> bed;
  Timestamp since = 0;
  Timestamp until = 0;
  std::function<Value(std::size_t)> param;  // parameter of subscription i
  std::vector<SubscriptionId> ids;
};

void resize_subscriptions(ProbeChannel& pc, std::size_t n) {
  auto& eng = **pc.bed;
  while (pc.ids.size() > n) {
    eng.unsubscribe(pc.name, pc.ids.back());
    pc.ids.pop_back();
  }
  while (pc.ids.size() < n) pc.ids.push_back(eng.subscribe(pc.name, {pc.param(pc.ids.size())}, std::string(kBroker)));
}

ProbeChannel make_probe_channel(const std::string& which, const Config& cfg, std::uint64_t seed) {
  constexpr std::string_view S = "capacity";
  const auto history = cfg_size(cfg, S, "history", 20000);
  const auto window = cfg_size(cfg, S, "records", 20000);
  ProbeChannel pc;
  pc.bed = std::make_unique<Bed>(engine_config(cfg));
  auto& eng = **pc.bed;
  auto fields = tweet_fields(cfg_size(cfg, S, "text_length", 64));
  std::string ddl;
  if (which == "TweetsAboutDrugs") {
    field(fields, "threatening_rate").target = TargetPredicate{CompareOp::Eq, std::int64_t{10}, cfg.get_double(S, "drugs_threat_selectivity", 0.1)};
    field(fields, "drug_activity").target =
        TargetPredicate{CompareOp::Eq, std::string("Manufacturing Drugs"), cfg.get_double(S, "drugs_activity_selectivity", 0.1)};
    ddl = drugs_channel_ddl();
  } else if (which == "MostThreateningTweets") {
    field(fields, "threatening_rate").target = TargetPredicate{CompareOp::Eq, std::int64_t{10}, cfg.get_double(S, "threat_selectivity", 0.02)};
    ddl = most_threatening_channel_ddl();
  } else if (which == "TweetsAboutCrime") {
    set_crime_targets(fields, 2);
    field(fields, "threatening_rate").target = TargetPredicate{CompareOp::Gt, std::int64_t{5}, 0.2};
    ddl = R"(CREATE CONTINUOUS PUSH CHANNEL TweetsAboutCrime(MyUserName)
PERIOD duration ("PT10M") {
 SELECT t.text
 FROM EnrichedTweets t, UserLocations u
 WHERE spatial_distance(u.location,t.location)<10
       AND u.username=MyUserName
       AND t.about_country="US"
       AND t.retweet_count>10000
       AND t.threatening_rate>5
       AND is_new(t)};)";
  } else {
    throw Error(ErrorKind::ConfigError, "unknown capacity channel " + which);
  }
  if (which == "TweetsAboutCrime") {
    const auto users = std::max<std::size_t>(1, cfg_size(cfg, S, "users", 256));
    load_users(eng, users, seed ^ 0x5eedULL);
    pc.param = [users, seed](std::size_t i) { return Value(username((i * 2654435761ULL + seed) % users)); };
  } else {
    auto states = census_state_distribution();
    pc.param = [states, seed](std::size_t i) { return draw(states, seed, i); };
  }
  RecordGenerator gen({fields, seed});
  auto& ds = eng.create_dataset(std::string(kTweets), gen.schema());
  pc.since = load(ds, gen, 0, history);
  auto def = parse_channel_ddl(ddl);
  pc.name = def.name;
  eng.register_channel(def, {.mode = PlanMode::Original, .startTs = pc.since});
  pc.until = load(ds, gen, history, window);
  return pc;
}

}  // namespace

std::vector<CapacityResult> capacity_probe(const Config& cfg, std::uint64_t seed, std::vector<ExperimentRow>* rows) {
  constexpr std::string_view S = "capacity";
  const double deadline = cfg.get_double(S, "deadline_ms", 40);
  const auto ceiling = std::max<std::size_t>(1, cfg_size(cfg, S, "ceiling", 1 << 21));
  const auto startN = std::max<std::size_t>(1, cfg_size(cfg, S, "start", 256));
  const double tolerance = cfg.get_double(S, "tolerance", 0.05);
  const auto runs = std::max<std::size_t>(1, cfg_size(cfg, S, "runs", 5));
  const std::vector<std::string> channels = {"TweetsAboutDrugs", "MostThreateningTweets", "TweetsAboutCrime"};
  const std::vector<PlanMode> modes = {PlanMode::Original, PlanMode::AggregatedSubs, PlanMode::ParamJoin,
                                       PlanMode::BadIndexMode, PlanMode::FullyOptimized};

  std::vector<CapacityResult> out;
  for (const auto& which : channels) {
    auto pc = make_probe_channel(which, cfg, seed);
    auto& eng = **pc.bed;
    CapacityResult cr;
    cr.channel = pc.name;
    for (auto mode : modes) {
      auto measure = [&](std::size_t n) {
        resize_subscriptions(pc, n);
        eng.evaluate(pc.name, pc.since, pc.until, mode);
        std::vector<double> ts;
        ExecutionStats last;
        for (std::size_t r = 0; r < runs; ++r) {
          last = eng.evaluate(pc.name, pc.since, pc.until, mode).stats;
          ts.push_back(last.wallTimeMs);
        }
        double m = median(ts);
        if (rows) {
          auto row = row_from("capacity", last, pc.name + ":" + std::to_string(n), 0);
          row.wallMs = m;
          rows->push_back(std::move(row));
        }
        return m <= deadline;
      };
      std::size_t good = 0, bad = 0;
      std::size_t n = std::min(startN, ceiling);
      // Doubling, then bisection between the last supported and first unsupported counts.
      while (true) {
        if (measure(n)) {
          good = n;
          if (n >= ceiling) break;
          n = std::min(ceiling, n * 2);
        } else {
          bad = n;
          break;
        }
      }
      if (bad && good == 0) {
        std::size_t lo = 0, hi = bad;
        while (hi - lo > std::max<std::size_t>(1, static_cast<std::size_t>(tolerance * hi))) {
          std::size_t mid = lo + (hi - lo) / 2;
          if (mid == 0) break;
          (measure(mid) ? lo : hi) = mid;
        }
        good = lo;
      } else if (bad) {
        std::size_t lo = good, hi = bad;
        while (hi - lo > std::max<std::size_t>(1, static_cast<std::size_t>(tolerance * lo))) {
          std::size_t mid = lo + (hi - lo) / 2;
          (measure(mid) ? lo : hi) = mid;
        }
        good = lo;
      }
      if (good >= 2 && !measure(good / 2)) cr.monotone = false;
      cr.maxSubscriptions[std::string(to_string(mode))] = good;
      if (rows) {
        ExperimentRow r;
        r.experiment = "capacity_max";
        r.mode = std::string(to_string(mode));
        r.param = pc.name;
        r.wallMs = deadline;
        r.results = good;
        rows->push_back(std::move(r));
      }
    }
    out.push_back(std::move(cr));
  }
  return out;
}

// ---- speed-up / scale-up --------------------------------------------------------------------

std::vector<ExperimentRow> scaling_suite(const Config& cfg, std::uint64_t seed) {
  constexpr std::string_view S = "scaling";
  const auto fixedRecords = cfg_size(cfg, S, "records", 40000);
  const auto perUnit = cfg_size(cfg, S, "records_per_unit", 10000);
  const auto users = std::max<std::size_t>(1, cfg_size(cfg, S, "users", 512));
  const auto reps = cfg_size(cfg, S, "reps", 3);
  std::vector<std::size_t> Ps;
  for (double p : cfg.get_list(S, "parallelism", {1, 2, 4, 8})) Ps.push_back(static_cast<std::size_t>(p));

  // Filter plus spatial nested-loop join: CPU-bound per record.
  auto setup = [&](std::size_t records) {
    auto bed = std::make_unique<Bed>(engine_config(cfg));
    auto& eng = **bed;
    load_users(eng, users, seed ^ 0x5eedULL);
    auto fields = tweet_fields(cfg_size(cfg, S, "text_length", 64));
    set_crime_targets(fields, 1);
    RecordGenerator gen({fields, seed});
    auto& ds = eng.create_dataset(std::string(kTweets), gen.schema());
    auto def = parse_channel_ddl(crime_channel_ddl(1));
    eng.register_channel(def, {.mode = PlanMode::Original, .startTs = 0});
    for (std::size_t u = 0; u < users; ++u) eng.subscribe(def.name, {Value(username(u))}, std::string(kBroker));
    auto until = load(ds, gen, 0, records);
    return std::pair{std::move(bed), until};
  };
  auto run = [&](Bed& bed, Timestamp until, std::size_t P, const std::string& exp, const std::string& param,
                 std::size_t rep, std::vector<ExperimentRow>& rows) {
    auto& eng = *bed;
    eng.set_parallelism("TweetsAboutCrime", P);
    eng.evaluate("TweetsAboutCrime", 0, until);
    auto res = eng.evaluate("TweetsAboutCrime", 0, until);
    rows.push_back(row_from(exp, res.stats, param, rep));
  };

  std::vector<ExperimentRow> rows;
  {
    auto [bed, until] = setup(fixedRecords);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      for (auto P : Ps) run(*bed, until, P, "speedup", std::to_string(P), rep, rows);
      run(*bed, until, 1, "self", "run1", rep, rows);
      run(*bed, until, 1, "self", "run2", rep, rows);
    }
  }
  for (auto P : Ps) {
    auto [bed, until] = setup(perUnit * P);
    for (std::size_t rep = 0; rep < reps; ++rep) run(*bed, until, P, "scaleup", std::to_string(P), rep, rows);
  }
  return rows;
}

// ---- broker ---------------------------------------------------------------------------------

namespace {

struct DrugsMatchBed {
  std::unique_ptr<Bed> bed;
  std::string channel;
  Timestamp until = 0;
};

// One CA record matching TweetsAboutDrugs with a text of `textBytes`, plus `subs` CA subscriptions.
DrugsMatchBed drugs_single_match(const Config& cfg, std::string_view scope, std::size_t subs, std::size_t textBytes,
                                 std::uint64_t seed) {
  DrugsMatchBed out;
  auto ec = engine_config(cfg);
  ec.frameSize = cfg_size(cfg, scope, "frame_size_bytes", static_cast<std::int64_t>(ec.frameSize));
  out.bed = std::make_unique<Bed>(ec);
  auto& eng = **out.bed;
  auto fields = tweet_fields(textBytes);
  RecordGenerator gen({fields, seed});
  auto& ds = eng.create_dataset(std::string(kTweets), gen.schema());
  auto def = parse_channel_ddl(drugs_channel_ddl());
  out.channel = def.name;
  eng.register_channel(def, {.mode = PlanMode::Original, .startTs = 0});
  for (std::size_t i = 0; i < subs; ++i) eng.subscribe(def.name, {Value(std::string("CA"))}, std::string(kBroker));
  auto rec = gen(0);
  rec.values[gen.schema().require("state")] = std::string("CA");
  rec.values[gen.schema().require("threatening_rate")] = std::int64_t{10};
  rec.values[gen.schema().require("drug_activity")] = std::string("Manufacturing Drugs");
  rec.arrivalTs = 1;
  ds.insert_record(std::move(rec));
  out.until = 1;
  return out;
}

}  // namespace

std::vector<ExperimentRow> broker_payload(const Config& cfg, std::uint64_t seed) {
  constexpr std::string_view S = "broker";
  const auto subs = std::max<std::size_t>(1, cfg_size(cfg, S, "subscriptions", 1000));
  const auto textBytes = cfg_size(cfg, S, "text_bytes", 32 * 1024);
  const auto reps = cfg_size(cfg, S, "reps", 3);
  auto mb = drugs_single_match(cfg, S, subs, textBytes, seed);
  auto& eng = **mb.bed;
  eng.set_group_size(mb.channel, subs);
  std::vector<ExperimentRow> rows;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (auto mode : {PlanMode::Original, PlanMode::AggregatedSubs}) {
      auto res = eng.evaluate(mb.channel, 0, mb.until, mode);
      mb.bed->sink->reset();
      auto reports = eng.brokers().deliver(res.batch);
      const auto& rep0 = reports.at(std::string(kBroker));
      auto row = row_from("broker_payload", res.stats, std::to_string(subs), rep);
      row.wallMs = rep0.receivingMs + rep0.convertMs + rep0.sendOutMs;
      row.bytesDelivered = rep0.payloadBytes;
      row.aux["messages"] = static_cast<double>(rep0.messages);
      row.aux["notified"] = static_cast<double>(rep0.subscribersNotified);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ExperimentRow> broker_phases(const Config& cfg, std::uint64_t seed) {
  constexpr std::string_view S = "table2";
  const auto subs = std::max<std::size_t>(1, cfg_size(cfg, S, "subscriptions", 118118));
  const auto textBytes = cfg_size(cfg, S, "text_bytes", 256);
  const auto reps = cfg_size(cfg, S, "reps", 3);
  Config local = cfg;
  if (!cfg.find(S, "frame_size_bytes")) local.set(std::string(S) + ".frame_size_bytes", "40960");
  auto mb = drugs_single_match(local, S, subs, textBytes, seed);
  auto& eng = **mb.bed;
  std::vector<ExperimentRow> rows;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (auto mode : {PlanMode::Original, PlanMode::AggregatedSubs}) {
      auto res = eng.evaluate(mb.channel, 0, mb.until, mode);
      mb.bed->sink->reset();
      auto reports = eng.brokers().deliver(res.batch);
      const auto& r = reports.at(std::string(kBroker));
      for (auto [phase, ms] : {std::pair{"receiving", r.receivingMs}, {"convert", r.convertMs}, {"sendOut", r.sendOutMs}}) {
        ExperimentRow row = row_from("table2", res.stats, phase, rep);
        row.wallMs = ms;
        row.bytesDelivered = r.payloadBytes;
        row.results = r.subscribersNotified;
        row.aux["messages"] = static_cast<double>(r.messages);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// ---- dispatch -------------------------------------------------------------------------------

std::vector<std::string> experiment_names() {
  return {"subgroup", "paramjoin", "selectivity", "capacity", "scaling", "broker", "table2"};
}

std::vector<ExperimentRow> run_experiment(std::string_view name, const Config& cfg, std::uint64_t seed) {
  if (name == "subgroup") return sweep_subgroup_size(cfg, seed).rows;
  if (name == "paramjoin") return compare_plan_modes(cfg, seed);
  if (name == "selectivity") return sweep_selectivity(cfg, seed).rows;
  if (name == "capacity") {
    std::vector<ExperimentRow> rows;
    capacity_probe(cfg, seed, &rows);
    return rows;
  }
  if (name == "scaling") return scaling_suite(cfg, seed);
  if (name == "broker") return broker_payload(cfg, seed);
  if (name == "table2") return broker_phases(cfg, seed);
  if (name == "all") {
    std::vector<ExperimentRow> rows;
    for (const auto& n : experiment_names()) {
      auto part = run_experiment(n, cfg, seed);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
  }
  throw Error(ErrorKind::ConfigError, "unknown experiment '" + std::string(name) + "'");
}

}  // namespace bad::bench
