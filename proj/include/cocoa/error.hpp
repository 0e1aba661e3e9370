#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cocoa {

enum class ErrorKind {
  Io,
  Parse,
  Dimension,
  Validation,
  Schema,
  Integrity,
  Domain,
  DegenerateCalibration,
  DegenerateSpectrum,
  EmptyWindow,
  Config,
  Rank,
  ZeroVariance,
  ConstantTarget,
  UndefinedVariance,
  Data,
  Fold,
  Coverage,
  Divergence,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the CLI
// exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace cocoa
