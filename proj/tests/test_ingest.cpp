#include "doctest.h"

#include <functional>
#include <set>

#include "bad/bench.hpp"
#include "bad/dsl.hpp"
#include "bad/error.hpp"
#include "bad/generator.hpp"
#include "bad/ingest.hpp"
#include "bad/predicate.hpp"

using namespace bad;

namespace {

Schema tweet_schema() {
  return Schema({{"about_country", ValueType::String}, {"retweet_count", ValueType::Int}, {"threatening_rate", ValueType::Int}});
}

Record tweet(PrimaryKey pk, Timestamp ts, const char* country, std::int64_t rt, std::int64_t threat) {
  return {pk, ts, {std::string(country), rt, threat}};
}

std::vector<FieldPredicate> crime_conditions(const Schema& s) {
  auto d = parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL TweetsAboutCrime(p) PERIOD duration("PT10M") { SELECT t.about_country FROM T t
    WHERE t.about_country="US" AND t.retweet_count>10000 AND t.threatening_rate>5 AND t.about_country=p AND is_new(t)})");
  std::vector<FieldPredicate> out;
  auto cls = classify_predicates(d);
  for (const auto& a : cls.at("t").fixed) out.push_back(compile_fixed(a, s));
  return out;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("conditions list and BAD index maintenance") {
  Dataset ds("EnrichedTweets", tweet_schema(), 4);
  ds.register_channel_conditions("TweetsAboutCrime", crime_conditions(ds.schema()));
  CHECK(ds.has_bad_index("TweetsAboutCrime"));
  CHECK(ds.conditions_list().size() == 1);
  CHECK(ds.conditions_list()[0].conditions.size() == 3);
  ds.register_channel_conditions("Threat10", {FieldPredicate{2, CompareOp::Eq, std::int64_t{10}, "t.threatening_rate=10"}});

  CHECK(ds.insert_record(tweet(1, 1, "US", 20000, 7)) == std::vector<std::string>{"TweetsAboutCrime"});
  CHECK(ds.insert_record(tweet(2, 2, "US", 20000, 10)) == std::vector<std::string>{"TweetsAboutCrime", "Threat10"});
  CHECK(ds.insert_record(tweet(3, 3, "MX", 20000, 10)) == std::vector<std::string>{"Threat10"});
  CHECK(ds.bad_index_size("TweetsAboutCrime") == 2);
  CHECK(kind_of([&] { ds.register_channel_conditions("Threat10", {}); }) == ErrorKind::ChannelAlreadyRegistered);
}

TEST_CASE("index scan windows are half open") {
  Dataset ds("D", tweet_schema(), 3);
  ds.register_channel_conditions("C", {FieldPredicate{0, CompareOp::Eq, std::string("US"), ""}});
  for (PrimaryKey pk = 1; pk <= 3; ++pk) ds.insert_record(tweet(pk * 10, static_cast<Timestamp>(pk), "US", 0, 0));
  CHECK(ds.index_scan("C", 1, 3) == std::vector<PrimaryKey>{20, 30});
  CHECK(ds.index_scan("C", 2, 2).empty());
  CHECK(ds.index_scan("C", 0, 3) == std::vector<PrimaryKey>{10, 20, 30});
  CHECK(kind_of([&] { ds.index_scan("Nope", 0, 1); }) == ErrorKind::UnknownChannel);
}

TEST_CASE("no back-fill on registration") {
  Dataset ds("D", tweet_schema());
  ds.insert_record(tweet(1, 1, "US", 0, 0));
  ds.register_channel_conditions("C", {FieldPredicate{0, CompareOp::Eq, std::string("US"), ""}});
  ds.insert_record(tweet(2, 2, "US", 0, 0));
  CHECK(ds.index_scan("C", 0, 10) == std::vector<PrimaryKey>{2});
}

TEST_CASE("drop restores the previous state") {
  Dataset ds("D", tweet_schema());
  ds.register_channel_conditions("A", {FieldPredicate{1, CompareOp::Gt, std::int64_t{5}, ""}});
  ds.register_channel_conditions("B", {FieldPredicate{2, CompareOp::Gt, std::int64_t{5}, ""}});
  ds.drop_channel_conditions("A");
  REQUIRE(ds.conditions_list().size() == 1);
  CHECK(ds.conditions_list()[0].channel == "B");
  CHECK(!ds.has_bad_index("A"));
  CHECK(kind_of([&] { ds.drop_channel_conditions("A"); }) == ErrorKind::UnknownChannel);
}

TEST_CASE("insert errors") {
  Dataset ds("D", tweet_schema());
  ds.insert_record(tweet(1, 5, "US", 0, 0));
  CHECK(kind_of([&] { ds.insert_record(tweet(1, 6, "US", 0, 0)); }) == ErrorKind::DuplicatePrimaryKey);
  CHECK(kind_of([&] { ds.insert_record({2, 7, {std::string("US"), std::int64_t{1}}}); }) == ErrorKind::SchemaViolation);
  CHECK(kind_of([&] { ds.insert_record({3, 8, {std::int64_t{1}, std::int64_t{1}, std::int64_t{1}}}); }) == ErrorKind::SchemaViolation);
  CHECK(kind_of([&] { ds.insert_record(tweet(4, 4, "US", 0, 0)); }) == ErrorKind::InvalidArgument);
  ds.set_active(false);
  CHECK(kind_of([&] { ds.register_channel_conditions("C", {}); }) == ErrorKind::InactiveDataset);
}

TEST_CASE("feed counts and selectivity") {
  auto fields = bench::tweet_fields(16);
  bench::field(fields, "about_country").target = TargetPredicate{CompareOp::Eq, std::string("US"), 0.5};
  bench::field(fields, "retweet_count").target = TargetPredicate{CompareOp::Gt, std::int64_t{10000}, 0.5};
  RecordGenerator gen({fields, 11});
  Dataset ds("EnrichedTweets", gen.schema());
  auto s = gen.schema();
  ds.register_channel_conditions("US", {FieldPredicate{s.require("about_country"), CompareOp::Eq, std::string("US"), ""}});
  ds.register_channel_conditions("Both", {FieldPredicate{s.require("about_country"), CompareOp::Eq, std::string("US"), ""},
                                          FieldPredicate{s.require("retweet_count"), CompareOp::Gt, std::int64_t{10000}, ""}});
  auto rep = feed(ds, gen, {.ratePerSec = 100, .durationSec = 100, .start = 0});
  CHECK(rep.count == 10000);
  CHECK(!rep.error);
  CHECK(rep.minTs > 0);
  CHECK(rep.maxTs == 100 * 1000000);
  CHECK(ds.bad_index_size("US") == doctest::Approx(5000).epsilon(0.06));
  CHECK(ds.bad_index_size("Both") == doctest::Approx(2500).epsilon(0.12));
  std::size_t truth = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    auto g = gen.generate(i);
    truth += g.truth[0] && g.truth[1];
  }
  CHECK(ds.bad_index_size("Both") == truth);
}

TEST_CASE("feed stops at the first insert error") {
  Dataset ds("D", tweet_schema());
  auto rep = feed(ds, [](std::size_t i) { return tweet(i < 5 ? i + 1 : 1, 0, "US", 0, 0); }, {.ratePerSec = 10, .durationSec = 1});
  CHECK(rep.count == 5);
  CHECK(rep.error.has_value());
}

TEST_CASE("generator is deterministic per index") {
  auto fields = bench::tweet_fields(8);
  RecordGenerator a({fields, 5}), b({fields, 5});
  for (std::size_t i : {0u, 17u, 9999u}) {
    auto x = a.generate(i).record, y = b.generate(i).record;
    CHECK(x.pk == y.pk);
    CHECK(x.values == y.values);
  }
  CHECK(a.generate(1).record.values != a.generate(2).record.values);
}

TEST_CASE("value index lookups agree with the filter") {
  auto fields = bench::tweet_fields(8);
  RecordGenerator gen({fields, 9});
  Dataset ds("D", gen.schema(), 4);
  for (std::size_t i = 0; i < 2000; ++i) {
    auto r = gen(i);
    r.arrivalTs = static_cast<Timestamp>(i);
    ds.insert_record(std::move(r));
  }
  auto f = gen.schema().require("retweet_count");
  ds.ensure_value_index(f);
  FieldPredicate p{f, CompareOp::Ge, std::int64_t{15000}, ""};
  std::set<PrimaryKey> got;
  for (std::size_t part = 0; part < ds.partition_count(); ++part) {
    std::vector<PrimaryKey> out;
    ds.value_index_lookup(f, part, p.op, p.literal, out);
    got.insert(out.begin(), out.end());
  }
  std::set<PrimaryKey> want;
  for (std::size_t i = 0; i < 2000; ++i) {
    auto r = gen(i);
    if (std::get<std::int64_t>(r.values[f]) >= 15000) want.insert(r.pk);
  }
  CHECK(got == want);
  CHECK(ds.count_matching(p) == want.size());
}

}
