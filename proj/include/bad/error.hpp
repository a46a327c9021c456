#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bad {

enum class ErrorKind {
  SyntaxError,
  UnsupportedFeature,
  UnclassifiablePredicate,
  InvalidChannel,
  InvalidPolicy,
  DuplicateSubscription,
  UnknownBroker,
  ArityMismatch,
  UnknownSubscription,
  UnknownChannel,
  UnknownDataset,
  ChannelAlreadyRegistered,
  InactiveDataset,
  DuplicatePrimaryKey,
  SchemaViolation,
  ModeUnavailable,
  InvalidParallelism,
  DuplicateBroker,
  BrokerUnreachable,
  SinkError,
  InvalidArgument,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse failure with the byte offset into the statement and the token that was expected there.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::string expected, const std::string& found)
      : Error(ErrorKind::SyntaxError,
              "at offset " + std::to_string(position) + ": expected " + expected + ", found " + found),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

}  // namespace bad
