#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coclab {

/// Machine-readable failure reasons. Numeric failures (the computation ran
/// but the property under test does not hold) are distinguished from input
/// errors so the CLI can map them to different exit codes.
enum class ErrorCode {
  // input / precondition errors
  NotUnimodular,
  NotHyperbolic,
  LatticeNotInvariant,
  UnsupportedLattice,
  DimensionMismatch,
  LeafRadiusExceeded,
  OutsideProductChart,
  TooManyPeriodicPoints,
  NotPeriodic,
  CongruenceViolated,
  EpsilonOutOfRange,
  SingularMatrix,
  SingularFiberMap,
  HypothesisViolated,
  NotOnLeaf,
  InvalidArgument,
  ConfigParse,
  UnknownCommand,
  // numeric outcomes
  NotFiberBunched,
  ToleranceUnreachable,
  LeafEscape,
  NoConvergence,
  NoInvariantPair,
  NotQuasiconformalOnWindow,
  ObstructionNonzero,
  NotFound,
};

std::string_view to_string(ErrorCode code);

/// True for outcomes that mean "the computation ran and the tested
/// property fails", as opposed to malformed input.
bool is_numeric_failure(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace coclab
