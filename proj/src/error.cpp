#include "magc/error.hpp"

namespace magc {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyGraph: return "EmptyGraph";
    case ErrorKind::AsymmetricAdjacency: return "AsymmetricAdjacency";
    case ErrorKind::InvalidGraph: return "InvalidGraph";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularCoarseLaplacian: return "SingularCoarseLaplacian";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidDegrees: return "InvalidDegrees";
    case ErrorKind::GroupMismatch: return "GroupMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroVolumeCluster: return "ZeroVolumeCluster";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, std::string_view module, const std::string& detail)
    : std::runtime_error(std::string(module) + ": " + std::string(to_string(kind)) + ": " + detail),
      kind_(kind),
      module_(module),
      detail_(detail) {}

}  // namespace magc
