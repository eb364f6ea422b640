#pragma once

#include <stdexcept>
#include <string>

namespace treefed {

enum class ErrorCode {
  LayoutMismatch,
  ZeroVector,
  EmptyInput,
  ZeroTotalWeight,
  PartitionMismatch,
  LevelOutOfRange,
  UnknownClient,
  SingleClient,
  EmptyBatch,
  ChannelMismatch,
  EmptySources,
  LengthMismatch,
  ShapeMismatch,
  TooFewSites,
  TooFewDomains,
  ConfigError,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace treefed
