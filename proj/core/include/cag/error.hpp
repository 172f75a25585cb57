#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cag {

/// Failure categories surfaced by the library. The CLI maps all of them to
/// exit code 1; usage errors are handled before any of these can occur.
enum class ErrorKind {
  InsufficientData,
  Format,
  Parse,
  InfeasibleK,
  UndefinedSilhouette,
  NoData,
  Dimension,
  State,
  Divergence,
  Shape,
  NoSpikes,
  CovarianceUndefined,
  NoPairs,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cag
