#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace magc {

enum class ErrorKind {
  EmptyGraph,
  AsymmetricAdjacency,
  InvalidGraph,
  DimensionMismatch,
  SingularCoarseLaplacian,
  SingularSystem,
  NonFinite,
  InvalidConfig,
  InvalidDegrees,
  GroupMismatch,
  LengthMismatch,
  ZeroVolumeCluster,
  ParseError,
  SelfLoop,
  NegativeWeight,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind and the module that
/// raised it, so the CLI can print "module: Kind: detail" messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string_view module, const std::string& detail);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  /// Message without the "module: Kind: " prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string detail_;
};

}  // namespace magc
