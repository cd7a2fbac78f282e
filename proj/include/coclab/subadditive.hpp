#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "coclab/cocycle.hpp"

namespace coclab {

/// Sequence of functions a_n on the torus, evaluated jointly: `sequence(x, N)`
/// returns a_1(x), …, a_N(x).
struct SubadditiveFamily {
  std::function<std::vector<double>(const TorusPoint&, long)> sequence;
  ToralAutomorphism base;
  long n_max = 1000;
  std::string description;

  double at(const TorusPoint& x, long n) const { return sequence(x, n).back(); }
};

/// a_n(x) = log ‖Fⁿ_x‖.
SubadditiveFamily log_norm_family(const CocycleSpec& c, long n_max = 1000);
/// a_n(x) = log K_F(x, n) − rate·n.
SubadditiveFamily log_distortion_family(const CocycleSpec& c, double rate, long n_max = 1000);
/// a_n(x) = value(x, n) evaluated independently for each n.
SubadditiveFamily pointwise_family(const ToralAutomorphism& base, std::function<double(const TorusPoint&, long)> value,
                                   long n_max = 1000, std::string description = "pointwise");

/// (1/n) Σ_{i<n} φ(fⁱx).
double birkhoff_average(const ToralAutomorphism& f, const std::function<double(const BaseVec&)>& phi,
                        const TorusPoint& x, long n);

/// max over samples of a_{n+k}(x) − a_k(x) − a_n(fᵏx); ≤ 0 for a subadditive family.
double subadditivity_defect(const SubadditiveFamily& fam, int samples, long max_len, std::uint64_t seed);

struct LevelScan {
  bool found = false;
  long level = 0;                   // smallest N with max_x a_N(x) < 0
  std::vector<double> max_by_level; // max over the grid of a_n, n = 1..(level or N_max)
};

/// Never throws on failure; see find_negative_level.
LevelScan negative_level_scan(const SubadditiveFamily& fam, const std::vector<TorusPoint>& grid, long n_max);

/// Smallest N ≤ n_max with a_N < 0 on the whole grid. Throws NotFound
/// (inconclusive, not a refutation) otherwise.
long find_negative_level(const SubadditiveFamily& fam, const std::vector<TorusPoint>& grid, long n_max);

struct GrowthCertificate {
  double c_eps = 1;      // max over grid, |n| ≤ n_max of K(x, n)·e^{−(ξ+ε)|n|}
  double log_c_eps = 0;
  double c_eps_half = 1; // same with |n| ≤ n_max/2
  bool pass = false;     // doubling n_max grew C by < 1%
  double rate = 0;       // max over grid of log K(x, n_max) / n_max
  TorusPoint worst;
  std::vector<double> max_log_k;  // index |n| = 0..n_max, max over grid and both signs
};

GrowthCertificate distortion_growth_certificate(const CocycleSpec& c, double xi, double eps,
                                                const std::vector<TorusPoint>& grid, long n_max);

struct DefaultGrid {
  std::vector<TorusPoint> points;
  int periods_included = 0;  // all periodic points of period 1..periods_included are present
};

/// per_axis² uniform points plus the periodic points of period 1..max_period,
/// stopping at the first period whose points would exceed `periodic_cap`.
DefaultGrid default_grid(const ToralAutomorphism& f, int per_axis = 64, int max_period = 4,
                         std::int64_t periodic_cap = 20000);

void write_level_csv(std::ostream& out, const std::vector<double>& max_by_level);

}  // namespace coclab
