#pragma once

#include <vector>

#include "coclab/cocycle.hpp"

namespace coclab {

struct ExponentPair {
  double top;     // (1/n) log ‖Fⁿ_x‖
  double bottom;  // −(1/n) log ‖(Fⁿ_x)⁻¹‖
  long n;
};

ExponentPair top_bottom_exponents(const CocycleSpec& c, const TorusPoint& x, long n, const IterateOptions& opt = {});

/// One sample of a running estimate; CSV columns n, top, bottom, logK/n.
struct HistoryRow {
  long n;
  double top;
  double bottom;
  double log_k_over_n;
};

struct SpectrumEstimate {
  std::vector<double> exponents;  // descending
  long orbit_length = 0;
  TorusPoint x0;
  std::vector<HistoryRow> convergence_history;  // at n = 1, 2, 4, … and the final n
  double log_det_rate = 0;                      // (1/n) Σ log |det F(fᵏx)|
};

/// QR-propagated estimate of all exponents along the orbit of x.
SpectrumEstimate full_spectrum(const CocycleSpec& c, const TorusPoint& x, long n, const IterateOptions& opt = {});

/// (1/n) log |eigenvalue| of Fⁿ_p at a periodic point, descending.
/// Throws NotPeriodic unless fⁿp = p exactly.
std::vector<double> periodic_exponents(const CocycleSpec& c, const RationalPoint& p, int period);

struct OneExponentReport {
  bool pass = false;
  double gap = 0;  // max over points of top − bottom periodic exponent
  RationalPoint worst;
  int worst_period = 0;
  long points_checked = 0;
};

/// Scans every periodic point of period 1..max_period. Throws
/// TooManyPeriodicPoints when an enumeration exceeds `cap`.
OneExponentReport one_exponent_test(const CocycleSpec& c, int max_period, double tol, std::int64_t cap = 200000);

/// Write a history as CSV with a header row.
void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows);

}  // namespace coclab
