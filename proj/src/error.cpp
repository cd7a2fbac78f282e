#include "coclab/error.hpp"

#include <atomic>
#include <thread>

#include "coclab/parallel.hpp"

namespace coclab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::NotHyperbolic: return "NotHyperbolic";
    case ErrorCode::LatticeNotInvariant: return "LatticeNotInvariant";
    case ErrorCode::UnsupportedLattice: return "UnsupportedLattice";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LeafRadiusExceeded: return "LeafRadiusExceeded";
    case ErrorCode::OutsideProductChart: return "OutsideProductChart";
    case ErrorCode::TooManyPeriodicPoints: return "TooManyPeriodicPoints";
    case ErrorCode::NotPeriodic: return "NotPeriodic";
    case ErrorCode::CongruenceViolated: return "CongruenceViolated";
    case ErrorCode::EpsilonOutOfRange: return "EpsilonOutOfRange";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::SingularFiberMap: return "SingularFiberMap";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::NotOnLeaf: return "NotOnLeaf";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::NotFiberBunched: return "NotFiberBunched";
    case ErrorCode::ToleranceUnreachable: return "ToleranceUnreachable";
    case ErrorCode::LeafEscape: return "LeafEscape";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NoInvariantPair: return "NoInvariantPair";
    case ErrorCode::NotQuasiconformalOnWindow: return "NotQuasiconformalOnWindow";
    case ErrorCode::ObstructionNonzero: return "ObstructionNonzero";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

bool is_numeric_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFiberBunched:
    case ErrorCode::ToleranceUnreachable:
    case ErrorCode::LeafEscape:
    case ErrorCode::NoConvergence:
    case ErrorCode::NoInvariantPair:
    case ErrorCode::NotQuasiconformalOnWindow:
    case ErrorCode::ObstructionNonzero:
    case ErrorCode::NotFound:
    case ErrorCode::SingularFiberMap:
    case ErrorCode::TooManyPeriodicPoints:
      return true;
    default:
      return false;
  }
}

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_thread_count(unsigned n) { g_threads.store(n); }

unsigned thread_count() {
  const unsigned n = g_threads.load();
  if (n != 0) return n;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace coclab
