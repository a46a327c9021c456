#include "bad/json_io.hpp"

#include <algorithm>
#include <istream>

#include "bad/error.hpp"

namespace bad {

using nlohmann::json;

std::size_t ChannelResultBatch::pair_count() const {
  std::size_t n = 0;
  for (const auto& g : perGroup) n += g.subscriptionIds.size() * g.payload.size();
  return n;
}

std::vector<DeliveryPair> ChannelResultBatch::delivery_pairs() const {
  std::vector<DeliveryPair> out;
  out.reserve(pair_count());
  for (const auto& g : perGroup) {
    for (auto id : g.subscriptionIds) {
      for (auto r : g.payload) out.push_back({id, rows[r].pk, rows[r].joinPk.value_or(0)});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

json to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Point>) {
          return json::array({x.x, x.y});
        } else {
          return x;
        }
      },
      v);
}

Value value_from_json(const json& j) {
  switch (j.type()) {
    case json::value_t::boolean: return j.get<bool>();
    case json::value_t::number_integer: return j.get<std::int64_t>();
    case json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw Error(ErrorKind::SchemaViolation, "integer out of range: " + j.dump());
      }
      return static_cast<std::int64_t>(u);
    }
    case json::value_t::number_float: return j.get<double>();
    case json::value_t::string: return j.get<std::string>();
    case json::value_t::array:
      if (j.size() == 2 && j[0].is_number() && j[1].is_number()) return Point{j[0].get<double>(), j[1].get<double>()};
      [[fallthrough]];
    default: throw Error(ErrorKind::SchemaViolation, "unsupported JSON value: " + j.dump());
  }
}

json record_to_json(const Record& rec, const Schema& schema) {
  json j = json::object();
  j["pk"] = rec.pk;
  for (std::size_t i = 0; i < schema.size() && i < rec.values.size(); ++i) {
    j[schema.fields()[i].name] = to_json(rec.values[i]);
  }
  return j;
}

Record record_from_json(const json& j, const Schema& schema) {
  if (!j.is_object()) throw Error(ErrorKind::SchemaViolation, "record is not a JSON object");
  Record rec;
  auto pk = j.find("pk");
  if (pk == j.end() || !pk->is_number_integer()) throw Error(ErrorKind::SchemaViolation, "record without integer pk");
  rec.pk = pk->get<PrimaryKey>();
  for (const auto& f : schema.fields()) {
    auto it = j.find(f.name);
    if (it == j.end()) throw Error(ErrorKind::SchemaViolation, "pk " + std::to_string(rec.pk) + " lacks " + f.name);
    rec.values.push_back(value_from_json(*it));
  }
  conform(rec, schema);
  return rec;
}

SubscriptionRequest subscription_from_json(const json& j) {
  SubscriptionRequest r;
  try {
    r.channel = j.at("channel").get<std::string>();
    for (const auto& p : j.at("params")) r.params.push_back(value_from_json(p));
    r.broker = j.at("broker").get<std::string>();
    if (j.contains("id")) r.id = j["id"].get<SubscriptionId>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("bad subscription: ") + e.what());
  }
  return r;
}

std::vector<json> read_ndjson(std::istream& in) {
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::IoError, "line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string wire_message(const std::string& channel, Timestamp executionTs, const std::vector<std::string>& fields,
                         const std::vector<SubscriptionId>& ids, const std::vector<const ResultRow*>& results) {
  json items = json::array();
  for (const auto* row : results) {
    json rec = json::object();
    for (std::size_t i = 0; i < fields.size(); ++i) rec[fields[i]] = to_json(row->values[i]);
    json item = {{"pk", row->pk}, {"record", std::move(rec)}};
    if (row->joinPk) item["joinPk"] = *row->joinPk;
    items.push_back(std::move(item));
  }
  json msg = {{"channel", channel}, {"executionTs", executionTs}, {"results", std::move(items)}, {"subIds", ids}};
  return msg.dump();
}

std::string wire_message(const ChannelResultBatch& batch, const DeliveryGroup& group) {
  std::vector<const ResultRow*> rows;
  rows.reserve(group.payload.size());
  for (auto r : group.payload) rows.push_back(&batch.rows[r]);
  return wire_message(batch.channel, batch.executionTs, batch.fields, group.subscriptionIds, rows);
}

}  // namespace bad
