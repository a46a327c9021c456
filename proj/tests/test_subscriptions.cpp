#include "doctest.h"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>

#include "bad/bench.hpp"
#include "bad/error.hpp"
#include "bad/generator.hpp"
#include "bad/subscriptions.hpp"

using namespace bad;

namespace {

ParamTuple P(const char* s) { return {Value(std::string(s))}; }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

}  // namespace

TEST_SUITE("subscriptions") {

TEST_CASE("acceptable group size") {
  CHECK(acceptable_group_size({40960, 40, 0, 0}) == 1024);
  CHECK(acceptable_group_size({81920, 40, 0, 0}) == 2048);
  CHECK(acceptable_group_size({100, 40, 90, 0}) == 1);
  CHECK(kind_of([] { acceptable_group_size({100, 0, 0, 0}); }) == ErrorKind::InvalidPolicy);
}

TEST_CASE("first subscription opens a group") {
  ChannelSubscriptions s({.arity = 1});
  auto g = s.add({7, P("CA"), "BrokerA"});
  auto groups = s.groups();
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].groupId == g);
  CHECK(groups[0].subIds == std::vector<SubscriptionId>{7});
  CHECK(groups[0].broker == "BrokerA");
  CHECK(s.user_parameters() == std::vector<UserParametersEntry>{{P("CA"), 1}});
}

TEST_CASE("full group and different broker open new groups") {
  ChannelSubscriptions s({.arity = 1, .fixedGroupSize = 2});
  auto g1 = s.add({1, P("CA"), "A"});
  CHECK(s.add({2, P("CA"), "A"}) == g1);
  auto g2 = s.add({3, P("CA"), "A"});
  CHECK(g2 != g1);
  auto g3 = s.add({4, P("CA"), "B"});
  CHECK(g3 != g2);
  auto groups = s.groups();
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].subIds.size() == 2);
  CHECK(groups[1].subIds.size() == 1);
  CHECK(s.user_parameters() == std::vector<UserParametersEntry>{{P("CA"), 4}});
}

TEST_CASE("a freed slot is reused in creation order") {
  ChannelSubscriptions s({.arity = 1, .fixedGroupSize = 2});
  for (SubscriptionId i = 1; i <= 4; ++i) s.add({i, P("CA"), "A"});
  auto first = s.group_of(1);
  s.remove(2);
  CHECK(s.add({5, P("CA"), "A"}) == *first);
}

TEST_CASE("removal") {
  ChannelSubscriptions s({.arity = 1});
  s.add({1, P("CA"), "A"});
  s.add({2, P("CA"), "A"});
  s.remove(1);
  REQUIRE(s.groups().size() == 1);
  CHECK(s.groups()[0].subIds == std::vector<SubscriptionId>{2});
  CHECK(s.user_parameters()[0].subscriberCount == 1);
  s.remove(2);
  CHECK(s.groups().empty());
  CHECK(s.user_parameters().empty());
  CHECK(kind_of([&] { s.remove(99); }) == ErrorKind::UnknownSubscription);
}

TEST_CASE("registration errors") {
  ChannelSubscriptions s({.arity = 1}, [](std::string_view b) { return b == "A"; });
  s.add({1, P("CA"), "A"});
  CHECK(kind_of([&] { s.add({1, P("TX"), "A"}); }) == ErrorKind::DuplicateSubscription);
  CHECK(kind_of([&] { s.add({2, P("TX"), "Z"}); }) == ErrorKind::UnknownBroker);
  CHECK(kind_of([&] { s.add({3, {Value(std::string("CA")), Value(std::string("TX"))}, "A"}); }) == ErrorKind::ArityMismatch);
  CHECK(s.size() == 1);
}

TEST_CASE("user parameters key on params only") {
  ChannelSubscriptions s({.arity = 1});
  s.add({1, P("CA"), "A"});
  s.add({2, P("CA"), "B"});
  s.add({3, P("TX"), "A"});
  CHECK(s.user_parameters() == std::vector<UserParametersEntry>{{P("CA"), 2}, {P("TX"), 1}});
}

TEST_CASE("frame-derived groups fit one frame") {
  ChannelSubscriptions s({.arity = 1, .frameSize = 4096, .perEntryBytes = 40});
  for (SubscriptionId i = 1; i <= 1000; ++i) s.add({i, P("CA"), "BrokerA"});
  auto cap = s.policy_for(P("CA"), "BrokerA").acceptableGroupSize;
  auto groups = s.groups();
  CHECK(groups.size() == (1000 + cap - 1) / cap);
  for (const auto& g : groups) {
    CHECK(g.subIds.size() <= cap);
    CHECK(g.serializedSize <= 4096);
  }
  CHECK(groups.front().serializedSize + 40 > 4096);  // one more member would overflow
}

TEST_CASE("118118 CA subscriptions at capacity 1024 make 116 groups") {
  ChannelSubscriptions s({.arity = 1, .fixedGroupSize = 1024});
  for (SubscriptionId i = 1; i <= 118118; ++i) s.add({i, P("CA"), "BrokerA"});
  CHECK(s.group_count() == 116);
}

TEST_CASE("one million census-weighted subscriptions give 50 parameter entries") {
  std::vector<double> w;
  for (const auto& [st, pop] : us_state_populations()) w.push_back(static_cast<double>(pop));
  auto counts = apportion(1000000, w);
  CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 1000000);
  ChannelSubscriptions s({.arity = 1, .fixedGroupSize = 1024});
  SubscriptionId id = 1;
  std::size_t groups = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t k = 0; k < counts[i]; ++k) s.add({id++, P(us_state_populations()[i].first.c_str()), "BrokerA"});
    groups += (counts[i] + 1023) / 1024;
  }
  CHECK(s.user_parameters().size() == 50);
  CHECK(s.group_count() == groups);
}

TEST_CASE("group multiset is order-insensitive") {
  std::vector<Subscription> subs;
  std::mt19937_64 rng(3);
  for (SubscriptionId i = 1; i <= 500; ++i) {
    subs.push_back({i, P(std::string(1, static_cast<char>('a' + rng() % 4)).c_str()), rng() % 2 ? "A" : "B"});
  }
  auto summary = [](ChannelSubscriptions& s) {
    std::map<std::pair<std::string, std::string>, std::size_t> m;
    for (const auto& g : s.groups()) m[{std::get<std::string>(g.params[0]), g.broker}] += g.subIds.size();
    return m;
  };
  ChannelSubscriptions a({.arity = 1, .fixedGroupSize = 7}), b({.arity = 1, .fixedGroupSize = 7});
  for (const auto& x : subs) a.add(x);
  std::shuffle(subs.begin(), subs.end(), rng);
  for (const auto& x : subs) b.add(x);
  CHECK(summary(a) == summary(b));
}

TEST_CASE("snapshot reflects state and is cached") {
  ChannelSubscriptions s({.arity = 1, .fixedGroupSize = 2});
  for (SubscriptionId i = 1; i <= 5; ++i) s.add({i, P(i % 2 ? "CA" : "TX"), "A"});
  auto snap = s.snapshot();
  CHECK(snap == s.snapshot());
  CHECK(snap->groupCount == 3);
  CHECK(snap->subscriptionCount == 5);
  CHECK(snap->userParameters.size() == 2);
  std::size_t members = 0;
  for (const auto& f : snap->groupFrames) f.for_each([&](ByteSpan b) { members += GroupView(b).count(); });
  CHECK(members == 5);
  s.remove(1);
  CHECK(s.snapshot() != snap);
  CHECK(snap->subscriptionCount == 5);
}

TEST_CASE("group record round trip") {
  Bytes out;
  std::vector<SubscriptionId> ids = {3, 9, 27};
  serialize_group(42, "key", "BrokerA", ids, 40, out);
  CHECK(out.size() == group_header_bytes("key", "BrokerA") + 3 * 40);
  GroupView v(out);
  CHECK(v.group_id() == 42);
  CHECK(v.key() == "key");
  CHECK(v.broker() == "BrokerA");
  REQUIRE(v.count() == 3);
  CHECK(v.id(2) == 27);
}

}
