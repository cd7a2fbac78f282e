#pragma once

#include <vector>

#include "coclab/cocycle.hpp"

namespace coclab {

struct HolonomyOptions {
  double tol = 1e-12;
  int max_terms = 2000;
  int bunching_grid = 64;         // per axis, for θ
  double theta_inflation = 1.05;  // grid max may miss the true sup
  double leaf_tol = 1e-9;         // transverse offset accepted as "on the leaf"
  int max_extension_steps = 200;
};

/// Linear map between fibers over two points of one stable (or unstable)
/// leaf, computed as a partial sum of the telescoping series with a
/// certified geometric tail.
struct HolonomyMap {
  TorusPoint from;
  TorusPoint to;
  LeafType leaf = LeafType::Stable;
  Mat matrix;
  int n_used = 0;
  double tail_bound = 0;
  double theta = 0;
  double c5 = 0;                    // a-posteriori constant in inc_i ≤ C₅ dist^β θ^i
  double leaf_distance = 0;         // signed leaf coordinate of `to` relative to `from`
  std::vector<double> increments;   // ‖(Fⁱ_y)⁻¹ rᵢ Fⁱ_x‖
};

struct AxiomReport {
  double composition_defect = 0;   // max ‖H_yz H_xy − H_xz‖
  double equivariance_defect = 0;  // max ‖H_xy − F(y)⁻¹ H_{fx,fy} F(x)‖
  double holder_constant = 0;      // max ‖H_xy − Id‖ / dist^β
  double uniqueness_defect = 0;    // max ‖H(n) − H(2n)‖ / (2·tail_bound)
  int triples = 0;
  bool passed(double tol) const {
    return composition_defect < tol && equivariance_defect < tol && uniqueness_defect < 1.0;
  }
};

struct FiRow {
  int i;
  double product;      // ‖(Fⁱ_y)⁻¹‖·‖Fⁱ_x‖
  double log_product;
  double log_bound;    // log(θⁱ νᵢ(y)^{−β})
};

struct FiTable {
  std::vector<FiRow> rows;
  double c0 = 0;  // max over i of product / bound
};

struct LeafTriple {
  TorusPoint x, y, z;
};

/// Holonomies of one fiber-bunched cocycle. Construction measures the
/// bunching ratio θ on a grid once; throws NotFiberBunched when the
/// inflated ratio is not below 1.
class HolonomySolver {
 public:
  explicit HolonomySolver(const CocycleSpec& c, const HolonomyOptions& opt = {});

  double theta(LeafType leaf) const { return leaf == LeafType::Stable ? theta_s_ : theta_u_; }
  const HolonomyOptions& options() const { return opt_; }
  const CocycleSpec& cocycle() const { return c_; }

  /// y must lie on x's local stable leaf (NotOnLeaf otherwise).
  HolonomyMap stable(const TorusPoint& x, const TorusPoint& y) const;
  HolonomyMap unstable(const TorusPoint& x, const TorusPoint& y) const;

  /// Series along a leaf at signed leaf coordinate t from x, with a caller
  /// tolerance and an optional floor on the number of terms.
  HolonomyMap along_leaf(const TorusPoint& x, double t, LeafType leaf, double tol, int min_terms = 0) const;

  /// y = x + s·v_s on the global stable leaf: pull back by the smallest m
  /// with |s|·νᵐ ≤ r (plus `extra_steps`), then (Fᵐ_y)⁻¹ H_{fᵐx fᵐy} Fᵐ_x.
  HolonomyMap extend(const TorusPoint& x, double s, int extra_steps = 0) const;

  AxiomReport verify_axioms(const std::vector<LeafTriple>& triples) const;

  FiTable product_bound_table(const TorusPoint& x, const TorusPoint& y, int i_max) const;

 private:
  CocycleSpec c_;
  HolonomyOptions opt_;
  double theta_s_ = 0;
  double theta_u_ = 0;
};

HolonomyMap stable_holonomy(const CocycleSpec& c, const TorusPoint& x, const TorusPoint& y,
                            const HolonomyOptions& opt = {});
HolonomyMap unstable_holonomy(const CocycleSpec& c, const TorusPoint& x, const TorusPoint& y,
                              const HolonomyOptions& opt = {});
HolonomyMap extend_holonomy(const CocycleSpec& c, const TorusPoint& x, double s, const HolonomyOptions& opt = {});
AxiomReport verify_holonomy_axioms(const CocycleSpec& c, const std::vector<LeafTriple>& triples,
                                   const HolonomyOptions& opt = {});
FiTable product_bound_check(const CocycleSpec& c, const TorusPoint& x, const TorusPoint& y, int i_max,
                       const HolonomyOptions& opt = {});

/// Least-squares slope of log increment against i over the increments
/// that sit above round-off. NaN when fewer than three qualify.
double increment_decay_slope(const HolonomyMap& h);

/// Random triples on local stable leaves: x uniform, y and z at leaf
/// coordinates in [−max_leaf_dist, max_leaf_dist].
std::vector<LeafTriple> random_stable_triples(const ToralAutomorphism& f, int count, double max_leaf_dist,
                                              std::uint64_t seed);

}  // namespace coclab
