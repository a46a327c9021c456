#include "doctest.h"

#include "bad/bench.hpp"
#include "bad/dsl.hpp"
#include "bad/error.hpp"
#include "oracle.hpp"

using namespace bad;

namespace {

const char* kFig2 = R"(CREATE CONTINUOUS PUSH CHANNEL TweetsAboutCrime(MyUserName)
PERIOD duration ("PT10M") {
 SELECT t.text
 FROM EnrichedTweets t, UserLocations u
 WHERE spatial_distance(u.location,t.location)<10
       AND u.username=MyUserName
       AND t.about_country="US"
       AND t.retweet_count>10000
       AND t.threatening_rate>5
       AND is_new(t)};)";

std::size_t count_class(const ChannelDefinition& d, PredicateClass c) {
  return static_cast<std::size_t>(std::count_if(d.predicates.begin(), d.predicates.end(), [&](const auto& p) { return p.cls == c; }));
}

}  // namespace

TEST_SUITE("dsl") {

TEST_CASE("drugs channel parses with its predicate classes") {
  auto d = parse_channel_ddl(bench::drugs_channel_ddl());
  CHECK(d.name == "TweetsAboutDrugs");
  CHECK(d.params == std::vector<std::string>{"Mystate"});
  CHECK(d.period_seconds() == doctest::Approx(600));
  REQUIRE(d.datasets.size() == 1);
  CHECK(d.datasets[0].dataset == "EnrichedTweets");
  auto cls = classify_predicates(d);
  REQUIRE(cls.count("t"));
  const auto& t = cls.at("t");
  REQUIRE(t.fixed.size() == 2);
  CHECK(to_string(t.fixed[0]) == "t.threatening_rate=10");
  CHECK(to_string(t.fixed[1]) == "t.drug_activity=\"Manufacturing Drugs\"");
  REQUIRE(t.parameterized.size() == 1);
  CHECK(to_string(t.parameterized[0]) == "t.state=Mystate");
  CHECK(t.freshness);
}

TEST_CASE("crime channel has a spatial join between u and t") {
  auto d = parse_channel_ddl(kFig2);
  auto cls = classify_predicates(d);
  CHECK(cls.at("t").fixed.size() == 3);
  CHECK(cls.at("u").parameterized.size() == 1);
  CHECK(cls.at("t").join.size() == 1);
  CHECK(cls.at("u").join.size() == 1);
  CHECK(count_class(d, PredicateClass::Join) == 1);
  const auto& j = std::get<SpatialDistance>(cls.at("t").join[0].expr);
  CHECK(std::get<FieldRef>(j.a) == FieldRef{"u", "location"});
  CHECK(std::get<FieldRef>(j.b) == FieldRef{"t", "location"});
  CHECK(std::get<std::int64_t>(j.threshold) == 10);
}

TEST_CASE("minimal channel has no fixed predicates") {
  auto d = parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL C(p) PERIOD duration("PT1S") { SELECT t.x FROM D t WHERE t.x=p AND is_new(t)})");
  CHECK(d.period_seconds() == doctest::Approx(1));
  auto cls = classify_predicates(d);
  CHECK(cls.at("t").fixed.empty());
  CHECK(cls.at("t").parameterized.size() == 1);
  CHECK(cls.at("t").freshness);
}

TEST_CASE("five crime conditions classify as fixed in textual order") {
  auto d = parse_channel_ddl(bench::crime_channel_ddl(5));
  auto cls = classify_predicates(d);
  const auto& f = cls.at("t").fixed;
  REQUIRE(f.size() == 5);
  CHECK(to_string(f[0]) == "t.about_country=\"US\"");
  CHECK(to_string(f[4]) == "t.weapon_Mentioned=true");
}

TEST_CASE("freshness-only channel") {
  auto d = parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL Everything() PERIOD duration("PT5S") { SELECT t.x FROM D t WHERE is_new(t)})");
  auto cls = classify_predicates(d);
  CHECK(cls.at("t").fixed.empty());
  CHECK(cls.at("t").freshness);
}

TEST_CASE("constant on the left is normalized") {
  auto d = parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL C(p) PERIOD duration("PT1S") { SELECT t.x FROM D t WHERE 5<t.x AND p=t.y AND is_new(t)})");
  auto cls = classify_predicates(d);
  CHECK(to_string(cls.at("t").fixed[0]) == "t.x>5");
  CHECK(to_string(cls.at("t").parameterized[0]) == "t.y=p");
}

TEST_CASE("subscribe statements") {
  auto s = parse_subscribe(R"(SUBSCRIBE TO TweetsAboutCrime("user123") ON BrokerA;)");
  CHECK(s.channelName == "TweetsAboutCrime");
  CHECK(s.argValues == std::vector<Value>{std::string("user123")});
  CHECK(s.brokerName == "BrokerA");
  auto e = parse_subscribe("SUBSCRIBE TO C() ON B;");
  CHECK(e.argValues.empty());
  auto two = parse_subscribe(R"(SUBSCRIBE TO TweetsAboutDrugs("CA","TX") ON B;)");
  CHECK(two.argValues.size() == 2);
  CHECK(parse_subscribe(to_ddl(two)) == two);
}

TEST_CASE("rejections") {
  auto kind = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IoError;
  };
  CHECK(kind([] { parse_channel_ddl(R"(CREATE CONTINUOUS PULL CHANNEL C(p) PERIOD duration("PT1S") { SELECT t.x FROM D t WHERE t.x=p})"); }) ==
        ErrorKind::UnsupportedFeature);
  CHECK(kind([] { parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL C(p) PERIOD duration("PT1S") { SELECT t.x FROM D t WHERE t.x=p OR t.y=1})"); }) ==
        ErrorKind::UnsupportedFeature);
  CHECK(kind([] { parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL C(p) PERIOD duration("PT1S") { SELECT t.x FROM D t WHERE v.x=p})"); }) ==
        ErrorKind::UnclassifiablePredicate);
  CHECK(kind([] { parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL C(p) PERIOD duration("PT1S") { SELECT t.x FROM D t WHERE t.x=q})"); }) ==
        ErrorKind::UnclassifiablePredicate);
  CHECK(kind([] { parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL C(p) PERIOD duration("PT0S") { SELECT t.x FROM D t WHERE t.x=p})"); }) !=
        ErrorKind::IoError);
  CHECK(kind([] { parse_channel_ddl(R"(CREATE CONTINUOUS PUSH CHANNEL C(p, q) PERIOD duration("PT1S") { SELECT t.x FROM D t WHERE t.x=p})"); }) !=
        ErrorKind::IoError);
  try {
    parse_channel_ddl("CREATE CONTINUOUS PUSH CHANEL C");
    FAIL("accepted");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 23);
  }
}

TEST_CASE("durations") {
  using namespace std::chrono;
  CHECK(parse_iso_duration("PT10M") == minutes(10));
  CHECK(parse_iso_duration("P1DT0.5S") == hours(24) + milliseconds(500));
  CHECK(format_iso_duration(parse_iso_duration("PT1H2M3S")) == "PT1H2M3S");
  CHECK_THROWS(parse_iso_duration("10M"));
}

TEST_CASE("pretty-print round trip over generated channels") {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    auto w = oracle::make_workload(seed);
    auto d = parse_channel_ddl(w.ddl);
    CHECK(parse_channel_ddl(to_ddl(d)) == d);
    CHECK(parse_channel_ddl(w.ddl) == d);
    std::size_t total = 0;
    for (auto c : {PredicateClass::Fixed, PredicateClass::Parameterized, PredicateClass::Join, PredicateClass::Freshness}) total += count_class(d, c);
    CHECK(total == d.predicates.size());
    CHECK(count_class(d, PredicateClass::Fixed) == w.fixed.size());
    CHECK(count_class(d, PredicateClass::Parameterized) == w.bindings.size());
  }
}

TEST_CASE("split statements skips comments") {
  auto parts = split_statements("// a comment\nSUBSCRIBE TO C(1) ON B;\n\nSUBSCRIBE TO C(\"x;y\") ON B;\n");
  REQUIRE(parts.size() == 2);
  CHECK(parse_subscribe(parts[1]).argValues[0] == Value(std::string("x;y")));
}

}
