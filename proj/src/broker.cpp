#include "bad/broker.hpp"

#include <algorithm>
#include <chrono>

#include "httplib.h"

#include "bad/clock.hpp"
#include "bad/error.hpp"
#include "bad/json_io.hpp"

namespace bad {

void CountingSink::notify(SubscriptionId id, std::string_view message) {
  std::lock_guard lock(mu_);
  ++count_;
  bytes_ += message.size();
  if (keepIds_) ids_.push_back(id);
}

std::size_t CountingSink::count() const {
  std::lock_guard lock(mu_);
  return count_;
}

std::size_t CountingSink::bytes() const {
  std::lock_guard lock(mu_);
  return bytes_;
}

std::vector<SubscriptionId> CountingSink::ids() const {
  std::lock_guard lock(mu_);
  return ids_;
}

void CountingSink::reset() {
  std::lock_guard lock(mu_);
  count_ = bytes_ = 0;
  ids_.clear();
}

BrokerEndpoint BrokerEndpoint::in_process(std::shared_ptr<Sink> sink) {
  if (!sink) throw Error(ErrorKind::InvalidArgument, "in-process broker needs a sink");
  return {std::move(sink), {}};
}

BrokerEndpoint BrokerEndpoint::http(std::string url) {
  if (url.rfind("http://", 0) != 0) throw Error(ErrorKind::InvalidArgument, "broker URL must start with http://: " + url);
  return {nullptr, std::move(url)};
}

std::size_t fan_out(const GroupMessage& message, Sink& sink, std::vector<std::string>* errors) {
  auto sorted = message.ids;
  std::sort(sorted.begin(), sorted.end());
  if (auto dup = std::adjacent_find(sorted.begin(), sorted.end()); dup != sorted.end()) {
    throw Error(ErrorKind::InvalidArgument, "duplicate subscription id " + std::to_string(*dup) + " in group message");
  }
  std::size_t notified = 0;
  for (auto id : message.ids) {
    try {
      sink.notify(id, message.body);
      ++notified;
    } catch (const std::exception& e) {
      if (errors) errors->push_back(Error(ErrorKind::SinkError, "subscription " + std::to_string(id) + ": " + e.what()).what());
    }
  }
  return notified;
}

void BrokerRegistry::register_broker(const std::string& name, BrokerEndpoint endpoint) {
  if (name.empty()) throw Error(ErrorKind::InvalidArgument, "broker name is empty");
  std::unique_lock lock(mu_);
  if (!brokers_.emplace(name, std::move(endpoint)).second) throw Error(ErrorKind::DuplicateBroker, name);
}

bool BrokerRegistry::contains(std::string_view name) const {
  std::shared_lock lock(mu_);
  return brokers_.find(name) != brokers_.end();
}

BrokerEndpoint BrokerRegistry::endpoint(std::string_view name) const {
  std::shared_lock lock(mu_);
  auto it = brokers_.find(name);
  if (it == brokers_.end()) throw Error(ErrorKind::UnknownBroker, std::string(name));
  return it->second;
}

std::vector<std::string> BrokerRegistry::names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, ep] : brokers_) out.push_back(name);
  return out;
}

namespace {

struct InboxMessage {
  std::vector<SubscriptionId> ids;
  std::vector<ResultRow> results;
};

void post_all(const std::string& url, const std::vector<GroupMessage>& messages, DeliveryReport& report) {
  auto schemeEnd = url.find("://") + 3;
  auto pathStart = url.find('/', schemeEnd);
  std::string origin = url.substr(0, pathStart);
  std::string path = pathStart == std::string::npos ? "/" : url.substr(pathStart);
  httplib::Client client(origin);
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(10, 0);
  for (const auto& m : messages) {
    auto res = client.Post(path, m.body, "application/json");
    if (!res) {
      report.unreachable = true;
      report.errors.push_back(Error(ErrorKind::BrokerUnreachable, url + ": " + httplib::to_string(res.error())).what());
      return;
    }
    if (res->status < 200 || res->status >= 300) {
      report.errors.push_back(Error(ErrorKind::SinkError, url + " answered HTTP " + std::to_string(res->status)).what());
      continue;
    }
    report.subscribersNotified += m.ids.size();
  }
}

}  // namespace

std::map<std::string, DeliveryReport> BrokerRegistry::deliver(const ChannelResultBatch& batch) const {
  std::map<std::string, DeliveryReport> reports;
  std::map<std::string, std::vector<const DeliveryGroup*>> byBroker;
  for (const auto& g : batch.perGroup) byBroker[g.broker].push_back(&g);
  std::map<std::string, BrokerEndpoint> endpoints;
  for (const auto& [name, groups] : byBroker) endpoints.emplace(name, endpoint(name));

  for (const auto& [name, groups] : byBroker) {
    auto& report = reports[name];
    const auto& ep = endpoints.at(name);

    auto t0 = std::chrono::steady_clock::now();
    std::vector<InboxMessage> inbox;
    inbox.reserve(groups.size());
    for (const auto* g : groups) {
      InboxMessage m{g->subscriptionIds, {}};
      m.results.reserve(g->payload.size());
      for (auto r : g->payload) m.results.push_back(batch.rows[r]);
      inbox.push_back(std::move(m));
    }
    report.receivingMs = elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    std::vector<GroupMessage> messages;
    messages.reserve(inbox.size());
    std::vector<const ResultRow*> rows;
    for (auto& m : inbox) {
      rows.clear();
      for (const auto& r : m.results) rows.push_back(&r);
      auto body = wire_message(batch.channel, batch.executionTs, batch.fields, m.ids, rows);
      report.payloadBytes += body.size();
      messages.push_back({std::move(m.ids), std::move(body)});
    }
    report.messages = messages.size();
    report.convertMs = elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    if (ep.is_http()) {
      post_all(ep.url, messages, report);
    } else {
      for (const auto& m : messages) report.subscribersNotified += fan_out(m, *ep.sink, &report.errors);
    }
    report.sendOutMs = elapsed_ms(t0);
  }
  return reports;
}

}  // namespace bad
