#pragma once

// Experiment drivers over synthetic tweet workloads. Every driver returns one row per
// (mode, parameter, repetition); wall times are channel execution times unless noted.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bad/engine.hpp"
#include "bad/generator.hpp"

namespace bad::bench {

// `key = value` lines, `#` comments, `[section]` headers. A key inside a section is stored as
// "section.key"; lookups through a scope fall back to the unqualified key.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  // Scoped lookups: "<scope>.<key>" first, then "<key>".
  std::optional<std::string> find(std::string_view scope, const std::string& key) const;
  std::string get_string(std::string_view scope, const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(std::string_view scope, const std::string& key, std::int64_t fallback) const;
  double get_double(std::string_view scope, const std::string& key, double fallback) const;
  std::vector<double> get_list(std::string_view scope, const std::string& key, std::vector<double> fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

// frame_size_bytes, partitions, plan_mode, period_override, per_entry_bytes.
EngineConfig engine_config(const Config& cfg);

struct ExperimentRow {
  std::string experiment;
  std::string mode;
  std::string param;
  std::size_t rep = 0;
  double wallMs = 0;
  std::size_t recordsScanned = 0;
  std::size_t results = 0;
  std::size_t bytesDelivered = 0;
  std::map<std::string, double> aux;  // not part of the CSV
};

inline constexpr std::string_view kCsvHeader =
    "experiment,mode,param,rep,wall_ms,records_scanned,results,bytes_delivered";
void write_csv(std::ostream& out, const std::vector<ExperimentRow>& rows, bool header = true);

double median(std::vector<double> xs);
// Median wall time of the rows matching (mode, param).
double median_wall(const std::vector<ExperimentRow>& rows, std::string_view mode, std::string_view param);

// ---- workloads ------------------------------------------------------------------------------

inline constexpr std::string_view kTweets = "EnrichedTweets";
inline constexpr std::string_view kUsers = "UserLocations";
inline constexpr std::string_view kBroker = "BrokerA";

// text, state, threatening_rate, drug_activity, about_country, retweet_count, hate_speech_rate,
// weapon_Mentioned, location. No targets set.
std::vector<FieldGenerator> tweet_fields(std::size_t textLength = 64);
FieldGenerator& field(std::vector<FieldGenerator>& fields, std::string_view name);
// username (overwritten with username(i) on load) and location.
GeneratorSpec user_location_spec(std::uint64_t seed);
std::string username(std::size_t i);

std::string drugs_channel_ddl();
std::string most_threatening_channel_ddl();
// TweetsAboutCrime with the first k of the five fixed conditions (k in 1..5), named
// TweetsAboutCrime<k> when `suffix` is set.
std::string crime_channel_ddl(std::size_t k, bool suffix = false);
// The five crime conditions as generator targets with selectivities 0.5, 0.5, 0.5, 0.2, 0.2.
void set_crime_targets(std::vector<FieldGenerator>& fields, std::size_t k);

// ---- experiments ----------------------------------------------------------------------------

struct SubgroupSweep {
  std::vector<ExperimentRow> rows;
  std::size_t frameCapacity = 0;  // frame-derived group size
  std::size_t argmin = 0;         // group size with the lowest median wall time
};
// All subscriptions share one parameter; group sizes run from one mega group down to singletons
// by halving, always passing through the frame-derived capacity.
SubgroupSweep sweep_subgroup_size(const Config& cfg, std::uint64_t seed);

// Original vs ParamJoin on MostThreateningTweets for each matching fraction.
std::vector<ExperimentRow> compare_plan_modes(const Config& cfg, std::uint64_t seed);

struct SelectivitySweep {
  std::vector<ExperimentRow> rows;
  std::map<std::size_t, std::size_t> matched;   // condition count -> ground-truth matches in the window
  std::map<std::size_t, std::size_t> windowed;  // records in the window
  std::map<std::size_t, std::size_t> indexScanned;  // BadIndexMode recordsScanned (all reps equal)
  bool scannedExact = true;
};
SelectivitySweep sweep_selectivity(const Config& cfg, std::uint64_t seed);

struct CapacityResult {
  std::string channel;
  std::map<std::string, std::size_t> maxSubscriptions;  // mode -> capacity
  bool monotone = true;  // spot re-run at half the capacity stayed within the deadline
};
std::vector<CapacityResult> capacity_probe(const Config& cfg, std::uint64_t seed,
                                           std::vector<ExperimentRow>* rows = nullptr);

// experiment "speedup", "scaleup" and "self" rows; param is the parallelism.
std::vector<ExperimentRow> scaling_suite(const Config& cfg, std::uint64_t seed);

// One oversized match delivered to identical subscriptions, ungrouped vs one group.
std::vector<ExperimentRow> broker_payload(const Config& cfg, std::uint64_t seed);
// Broker phase timings for the CA subscriptions (param is the phase).
std::vector<ExperimentRow> broker_phases(const Config& cfg, std::uint64_t seed);

std::vector<std::string> experiment_names();
std::vector<ExperimentRow> run_experiment(std::string_view name, const Config& cfg, std::uint64_t seed);

}  // namespace bad::bench
