// Serial (P = 1) vs OpenMP partition kernels on two channel shapes:
//   spatial  - filter plus spatial nested-loop join against user locations (CPU-bound per record)
//   grouped  - scan, filter and subscription-group join on the drugs channel
// P = 1 runs the plain loop in for_each_unit; other values fan the same units out over threads.

#include <benchmark/benchmark.h>

#include <memory>

#include "bad/bench.hpp"
#include "bad/engine.hpp"
#include "bad/kernels.hpp"

using namespace bad;

namespace {

struct Fixture {
  std::unique_ptr<Engine> eng;
  std::string channel;
  Timestamp until = 0;
};

void load(Dataset& ds, const RecordGenerator& gen, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    auto r = gen(i);
    r.arrivalTs = static_cast<Timestamp>(i + 1);
    ds.insert_record(std::move(r));
  }
}

Fixture& spatial() {
  static Fixture f = [] {
    Fixture x;
    x.eng = std::make_unique<Engine>(EngineConfig{}, std::make_shared<VirtualClock>());
    x.eng->brokers().register_broker("BrokerA", BrokerEndpoint::in_process(std::make_shared<CountingSink>()));
    RecordGenerator users(bench::user_location_spec(7));
    auto& du = x.eng->create_dataset("UserLocations", users.schema());
    for (std::size_t i = 0; i < 512; ++i) {
      auto r = users(i);
      r.values[0] = bench::username(i);
      r.arrivalTs = 1;
      du.insert_record(std::move(r));
    }
    auto fields = bench::tweet_fields(64);
    bench::set_crime_targets(fields, 1);
    RecordGenerator gen({fields, 7});
    auto& ds = x.eng->create_dataset("EnrichedTweets", gen.schema());
    auto def = parse_channel_ddl(bench::crime_channel_ddl(1));
    x.channel = def.name;
    x.eng->register_channel(def, {.mode = PlanMode::Original, .startTs = 0});
    for (std::size_t u = 0; u < 512; ++u) x.eng->subscribe(def.name, {Value(bench::username(u))}, "BrokerA");
    load(ds, gen, 20000);
    x.until = 20000;
    x.eng->evaluate(x.channel, 0, x.until);  // warm-up
    return x;
  }();
  return f;
}

Fixture& grouped() {
  static Fixture f = [] {
    Fixture x;
    x.eng = std::make_unique<Engine>(EngineConfig{}, std::make_shared<VirtualClock>());
    x.eng->brokers().register_broker("BrokerA", BrokerEndpoint::in_process(std::make_shared<CountingSink>()));
    auto fields = bench::tweet_fields(64);
    bench::field(fields, "threatening_rate").target = TargetPredicate{CompareOp::Eq, std::int64_t{10}, 0.3};
    RecordGenerator gen({fields, 11});
    auto& ds = x.eng->create_dataset("EnrichedTweets", gen.schema());
    auto def = parse_channel_ddl(bench::drugs_channel_ddl());
    x.channel = def.name;
    x.eng->register_channel(def, {.mode = PlanMode::AggregatedSubs, .startTs = 0});
    auto states = census_state_distribution();
    std::vector<double> w(states.weights.begin(), states.weights.end());
    auto counts = apportion(50000, w);
    for (std::size_t s = 0; s < counts.size(); ++s) {
      for (std::size_t k = 0; k < counts[s]; ++k) x.eng->subscribe(def.name, {states.values[s]}, "BrokerA");
    }
    load(ds, gen, 50000);
    x.until = 50000;
    x.eng->evaluate(x.channel, 0, x.until);  // warm-up
    return x;
  }();
  return f;
}

void run(benchmark::State& state, Fixture& f, PlanMode mode) {
  const auto P = static_cast<std::size_t>(state.range(0));
  f.eng->set_parallelism(f.channel, P);
  std::size_t results = 0;
  for (auto _ : state) {
    auto res = f.eng->evaluate(f.channel, 0, f.until, mode);
    results = res.stats.resultsCount;
    benchmark::DoNotOptimize(results);
  }
  state.counters["results"] = static_cast<double>(results);
  state.counters["threads_available"] = hardware_threads();
}

void BM_SpatialJoin(benchmark::State& s) { run(s, spatial(), PlanMode::Original); }
void BM_GroupedScan(benchmark::State& s) { run(s, grouped(), PlanMode::AggregatedSubs); }
void BM_GroupedBadIndex(benchmark::State& s) { run(s, grouped(), PlanMode::FullyOptimized); }

}  // namespace

BENCHMARK(BM_SpatialJoin)->ArgName("P")->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GroupedScan)->ArgName("P")->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GroupedBadIndex)->ArgName("P")->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
