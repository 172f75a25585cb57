#include "cag/error.hpp"

namespace cag {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Format: return "format";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::InfeasibleK: return "infeasible-k";
    case ErrorKind::UndefinedSilhouette: return "undefined-silhouette";
    case ErrorKind::NoData: return "no-data";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::State: return "state";
    case ErrorKind::Divergence: return "training-divergence";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::NoSpikes: return "no-spikes";
    case ErrorKind::CovarianceUndefined: return "covariance-undefined";
    case ErrorKind::NoPairs: return "no-pairs";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

}  // namespace cag
