#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "bad/batch.hpp"

namespace bad {

// Receives one notification per subscription id.
class Sink {
 public:
  virtual ~Sink() = default;
  virtual void notify(SubscriptionId id, std::string_view message) = 0;
};

class CountingSink : public Sink {
 public:
  explicit CountingSink(bool keepIds = false) : keepIds_(keepIds) {}
  void notify(SubscriptionId id, std::string_view message) override;

  std::size_t count() const;
  std::size_t bytes() const;
  std::vector<SubscriptionId> ids() const;
  void reset();

 private:
  bool keepIds_;
  mutable std::mutex mu_;
  std::size_t count_ = 0;
  std::size_t bytes_ = 0;
  std::vector<SubscriptionId> ids_;
};

struct BrokerEndpoint {
  std::shared_ptr<Sink> sink;  // in-process delivery
  std::string url;             // HTTP delivery, e.g. "http://127.0.0.1:9000/notify"

  static BrokerEndpoint in_process(std::shared_ptr<Sink> sink);
  static BrokerEndpoint http(std::string url);
  bool is_http() const { return !url.empty(); }
};

struct DeliveryReport {
  double receivingMs = 0;
  double convertMs = 0;
  double sendOutMs = 0;
  std::size_t payloadBytes = 0;
  std::size_t messages = 0;
  std::size_t subscribersNotified = 0;
  bool unreachable = false;
  std::vector<std::string> errors;
};

struct GroupMessage {
  std::vector<SubscriptionId> ids;
  std::string body;
};

// One notification per id. Duplicate ids violate the group invariant and are rejected before any
// notification; a throwing sink is recorded in `errors` and the remaining ids are still notified.
std::size_t fan_out(const GroupMessage& message, Sink& sink, std::vector<std::string>* errors = nullptr);

class BrokerRegistry {
 public:
  // Endpoints are not contacted here; an unreachable HTTP broker surfaces at delivery.
  void register_broker(const std::string& name, BrokerEndpoint endpoint);
  bool contains(std::string_view name) const;
  BrokerEndpoint endpoint(std::string_view name) const;
  std::vector<std::string> names() const;

  // Routes one wire message per delivery group to its broker. A failing broker is reported and
  // does not stop delivery to the others.
  std::map<std::string, DeliveryReport> deliver(const ChannelResultBatch& batch) const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, BrokerEndpoint, std::less<>> brokers_;
};

}  // namespace bad
