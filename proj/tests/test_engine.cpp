#include "doctest.h"

#include <thread>

#include "bad/bench.hpp"
#include "bad/engine.hpp"
#include "bad/error.hpp"
#include "bad/frame.hpp"
#include "oracle.hpp"

using namespace bad;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

std::vector<std::size_t> sizes(const Frame& f) {
  std::vector<std::size_t> out;
  f.for_each([&](ByteSpan b) { out.push_back(b.size()); });
  return out;
}

struct Counting : FrameConsumer {
  std::vector<std::size_t> tuples;
  void push(const Frame& f) override { tuples.push_back(f.tuple_count()); }
};

// Small drugs-channel engine on a virtual clock.
struct Drugs {
  std::shared_ptr<VirtualClock> clock = std::make_shared<VirtualClock>();
  std::shared_ptr<CountingSink> sink = std::make_shared<CountingSink>(true);
  std::unique_ptr<Engine> eng;
  RecordGenerator gen{{bench::tweet_fields(16), 3}};

  explicit Drugs(EngineConfig ec = {}) {
    eng = std::make_unique<Engine>(ec, clock);
    eng->brokers().register_broker("BrokerA", BrokerEndpoint::in_process(sink));
    eng->create_dataset("EnrichedTweets", gen.schema());
    eng->register_channel(parse_channel_ddl(bench::drugs_channel_ddl()), {.startTs = 0});
  }
  void tweet(Timestamp ts, const char* state, bool match, PrimaryKey pk) {
    auto r = gen(pk);
    r.pk = pk;
    const auto& s = gen.schema();
    r.values[s.require("state")] = std::string(state);
    r.values[s.require("threatening_rate")] = std::int64_t{match ? 10 : 3};
    r.values[s.require("drug_activity")] = std::string("Manufacturing Drugs");
    clock->set(ts);
    eng->ingest("EnrichedTweets", std::move(r));
  }
};

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("greedy frame packing") {
  Bytes a(10, 1), big(100, 2);
  std::vector<ByteSpan> three = {a, a, a};
  auto frames = pack_frames(three, 25);
  REQUIRE(frames.size() == 2);
  CHECK(sizes(frames[0]) == std::vector<std::size_t>{10, 10});
  CHECK(sizes(frames[1]) == std::vector<std::size_t>{10});

  std::vector<ByteSpan> one = {big};
  auto enlarged = pack_frames(one, 40);
  REQUIRE(enlarged.size() == 1);
  CHECK(enlarged[0].actual_size() == 100);
  CHECK(enlarged[0].enlarged());

  Bytes exact(4096, 3);
  std::vector<ByteSpan> many(1000, ByteSpan(exact));
  auto full = pack_frames(many, 4096);
  CHECK(full.size() == 1000);
  for (const auto& f : full) CHECK(f.tuple_count() == 1);
  CHECK(kind_of([] { Frame f(0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("frame writer pushes full frames and isolates oversized tuples") {
  Counting c;
  FrameWriter w(25, c);
  Bytes a(10, 1), big(100, 2);
  w.append({ByteSpan(a)});
  w.append({ByteSpan(a)});
  w.append({ByteSpan(big)});
  w.append({ByteSpan(a), ByteSpan(a)});
  w.flush();
  CHECK(c.tuples == std::vector<std::size_t>{2, 1, 1});
  CHECK(w.frames_pushed() == 3);
}

TEST_CASE("all plan modes agree on a small hand-checked workload") {
  Drugs d;
  for (SubscriptionId i = 1; i <= 5; ++i) d.eng->subscribe("TweetsAboutDrugs", {Value(std::string(i <= 3 ? "CA" : "TX"))}, "BrokerA", i);
  const char* states[] = {"CA", "TX", "CA", "NY", "CA", "TX", "CA", "CA", "NY", "TX"};
  const bool match[] = {true, false, false, true, true, false, false, false, false, true};
  for (PrimaryKey i = 0; i < 10; ++i) d.tweet(static_cast<Timestamp>(i + 1), states[i], match[i], i + 1);
  // Matching CA tweets 1 and 5 reach subs 1-3, matching TX tweet 10 reaches subs 4-5.
  std::vector<DeliveryPair> want = {{1, 1, 0}, {1, 5, 0}, {2, 1, 0}, {2, 5, 0}, {3, 1, 0}, {3, 5, 0}, {4, 10, 0}, {5, 10, 0}};
  for (auto m : all_plan_modes()) {
    auto res = d.eng->evaluate("TweetsAboutDrugs", 0, 10, m);
    CHECK_MESSAGE(res.batch.delivery_pairs() == want, to_string(m));
    CHECK(res.stats.resultsCount == want.size());
  }
  auto bad = d.eng->evaluate("TweetsAboutDrugs", 0, 10, PlanMode::BadIndexMode).stats;
  auto orig = d.eng->evaluate("TweetsAboutDrugs", 0, 10, PlanMode::Original).stats;
  CHECK(bad.recordsScanned == 4);
  CHECK(orig.recordsScanned == 10);
  auto grouped = d.eng->evaluate("TweetsAboutDrugs", 0, 10, PlanMode::AggregatedSubs).batch;
  CHECK(grouped.perGroup.size() == 2);
}

TEST_CASE("empty window gives an empty batch") {
  Drugs d;
  d.eng->subscribe("TweetsAboutDrugs", {Value(std::string("CA"))}, "BrokerA");
  d.tweet(5, "CA", true, 1);
  auto r1 = d.eng->execute_channel("TweetsAboutDrugs", 10);
  CHECK(r1.stats.resultsCount == 1);
  auto r2 = d.eng->execute_channel("TweetsAboutDrugs", 20);
  CHECK(r2.batch.empty());
  CHECK(r2.stats.resultsCount == 0);
  CHECK(d.eng->channel("TweetsAboutDrugs").lastExecTs == 20);
  CHECK(kind_of([&] { d.eng->execute_channel("TweetsAboutDrugs", 15); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("118118 CA subscriptions form 116 delivery groups") {
  EngineConfig ec;
  ec.frameSize = 40960;
  Drugs d(ec);
  for (SubscriptionId i = 1; i <= 118118; ++i) d.eng->subscribe("TweetsAboutDrugs", {Value(std::string("CA"))}, "BrokerA", i);
  d.eng->set_group_size("TweetsAboutDrugs", 1024);
  d.tweet(1, "CA", true, 1);
  auto res = d.eng->evaluate("TweetsAboutDrugs", 0, 1, PlanMode::FullyOptimized);
  CHECK(res.batch.perGroup.size() == 116);
  CHECK(res.batch.pair_count() == 118118);
  auto reports = d.eng->brokers().deliver(res.batch);
  CHECK(reports.at("BrokerA").messages == 116);
  CHECK(reports.at("BrokerA").subscribersNotified == 118118);
  CHECK(d.sink->count() == 118118);
}

TEST_CASE("periodic windows tile time") {
  Drugs d;
  d.eng->subscribe("TweetsAboutDrugs", {Value(std::string("CA"))}, "BrokerA");
  EngineConfig ec;
  const Timestamp period = 10 * 60 * 1000000LL;
  for (auto ts : {period / 2, period, period + period / 2, 2 * period + 1}) {
    auto r = d.gen(static_cast<std::size_t>(ts));
    r.pk = static_cast<PrimaryKey>(ts);
    r.values[d.gen.schema().require("state")] = std::string("CA");
    r.values[d.gen.schema().require("threatening_rate")] = std::int64_t{10};
    r.values[d.gen.schema().require("drug_activity")] = std::string("Manufacturing Drugs");
    r.arrivalTs = ts;
    d.eng->dataset("EnrichedTweets").insert_record(std::move(r));
  }
  std::vector<std::size_t> perWindow;
  auto stats = d.eng->run_periodic("TweetsAboutDrugs", 3, {.onExecution = [&](const ExecutionResult& r) { perWindow.push_back(r.stats.resultsCount); }});
  REQUIRE(stats.size() == 3);
  // The record exactly on the first boundary belongs to the first window.
  CHECK(perWindow == std::vector<std::size_t>{2, 1, 1});
  CHECK(stats[1].windowStart == period);
  CHECK(stats[2].windowEnd == 3 * period);
  CHECK(d.clock->now() == 3 * period);
}

TEST_CASE("overrun is reported without losing windows") {
  struct Slow : Sink {
    void notify(SubscriptionId, std::string_view) override { std::this_thread::sleep_for(std::chrono::milliseconds(30)); }
  };
  EngineConfig ec;
  ec.periodOverride = std::chrono::milliseconds(5);
  auto clock = std::make_shared<VirtualClock>();
  Engine eng(ec, clock);
  eng.brokers().register_broker("BrokerA", BrokerEndpoint::in_process(std::make_shared<Slow>()));
  RecordGenerator gen({bench::tweet_fields(8), 1});
  auto& ds = eng.create_dataset("EnrichedTweets", gen.schema());
  eng.register_channel(parse_channel_ddl(bench::most_threatening_channel_ddl()), {.startTs = 0});
  eng.subscribe("MostThreateningTweets", {Value(std::string("CA"))}, "BrokerA");
  for (Timestamp k = 0; k < 4; ++k) {
    auto r = gen(static_cast<std::size_t>(k));
    r.values[gen.schema().require("state")] = std::string("CA");
    r.values[gen.schema().require("threatening_rate")] = std::int64_t{10};
    r.arrivalTs = k * 5000 + 2500;
    ds.insert_record(std::move(r));
  }
  auto stats = eng.run_periodic("MostThreateningTweets", 4);
  REQUIRE(stats.size() == 4);
  std::size_t delivered = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(stats[k].overrun);
    CHECK(!stats[k].warnings.empty());
    CHECK(stats[k].windowStart == static_cast<Timestamp>(k) * 5000);
    delivered += stats[k].resultsCount;
  }
  CHECK(delivered == 4);
}

TEST_CASE("parallelism and mode errors") {
  Drugs d;
  CHECK(kind_of([&] { d.eng->set_parallelism("TweetsAboutDrugs", 0); }) == ErrorKind::InvalidParallelism);
  CHECK(kind_of([&] { d.eng->evaluate("Nope", 0, 1); }) == ErrorKind::UnknownChannel);
  d.eng->register_channel(parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL Any(s) PERIOD duration("PT1S") { SELECT t.text FROM EnrichedTweets t WHERE t.state=s AND is_new(t)})"));
  CHECK(!d.eng->mode_available("Any", PlanMode::BadIndexMode));
  CHECK(kind_of([&] { d.eng->evaluate("Any", 0, 1, PlanMode::BadIndexMode); }) == ErrorKind::ModeUnavailable);
  CHECK(kind_of([&] { d.eng->subscribe("TweetsAboutDrugs", {Value(std::string("CA"))}, "Unknown"); }) == ErrorKind::UnknownBroker);
  CHECK(kind_of([&] { d.eng->subscribe("TweetsAboutDrugs", {}, "BrokerA"); }) == ErrorKind::ArityMismatch);
  CHECK(kind_of([&] { d.eng->register_channel(parse_channel_ddl(bench::drugs_channel_ddl())); }) == ErrorKind::ChannelAlreadyRegistered);
}

TEST_CASE("results do not depend on parallelism") {
  for (std::uint64_t seed : {3u, 8u, 21u}) {
    auto w = oracle::make_workload(seed);
    auto expect = oracle::expected_pairs(w);
    for (std::size_t P : {1, 3, 8}) {
      auto bed = oracle::build(w, P);
      CHECK(oracle::to_set(bed.engine->evaluate(w.name, w.since, w.until).batch.delivery_pairs()) == expect);
    }
  }
}

TEST_CASE("random workloads match the brute-force oracle") {
  for (std::uint64_t seed = 500; seed < 530; ++seed) {
    oracle::Limits lim;
    lim.maxRecords = 1500;
    lim.maxSubs = 200;
    auto w = oracle::make_workload(seed, lim);
    auto bed = oracle::build(w);
    auto expect = oracle::expected_pairs(w);
    for (auto m : all_plan_modes()) {
      CHECK_MESSAGE(oracle::to_set(bed.engine->evaluate(w.name, w.since, w.until, m).batch.delivery_pairs()) == expect,
                    "seed ", seed, " ", to_string(m));
    }
  }
}

TEST_CASE("stats json carries the documented fields") {
  Drugs d;
  d.eng->subscribe("TweetsAboutDrugs", {Value(std::string("CA"))}, "BrokerA");
  d.tweet(1, "CA", true, 1);
  auto j = to_json(d.eng->execute_channel("TweetsAboutDrugs", 2).stats);
  for (const char* k : {"wallTimeMs", "recordsScanned", "framesProduced", "joinRows", "resultsCount"}) CHECK(j.contains(k));
}

}
