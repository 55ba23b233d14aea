#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clubkit {

enum class Errc {
  IndexOutOfRange,
  SamePair,
  TooFewMembers,
  InvalidPanel,
  InvalidPartition,
  EmptyInput,
  BandwidthTooLarge,
  SingularLrv,
  DimensionMismatch,
  SeriesTooShort,
  NonConvergence,
  InfeasibleConfig,
  InvalidConfig,
  UndefinedRatio,
  DegenerateMargins,
  ParseError,
  RaggedRows,
  NonPositiveForLog,
  UnknownId,
  IoError,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace clubkit
