#pragma once

#include <span>
#include <vector>

#include "coclab/linalg.hpp"

namespace coclab {

/// A conformal structure on R^d: a symmetric positive-definite matrix of
/// determinant 1, i.e. a point of SL(d, R)/SO(d).
class ConformalStructure {
 public:
  /// Symmetrizes and rescales to determinant 1. Throws InvalidArgument for
  /// visibly asymmetric or non-positive-definite input.
  explicit ConformalStructure(const Mat& m);

  static ConformalStructure identity(int d);

  const Mat& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

 private:
  Mat m_;
};

/// √d/2 · ‖log spec(C1⁻¹C2)‖₂. Reduces to the base-point formula
/// dist(Id, C) = √d/2 · (Σ log² λ_i)^{1/2} and is invariant under act().
double distance(const ConformalStructure& c1, const ConformalStructure& c2);

/// A(C) = det(AᵀA)^{1/d} · A⁻ᵀ C A⁻¹. Throws SingularMatrix.
ConformalStructure act(const Mat& a, const ConformalStructure& c);

/// Point at parameter t on the geodesic from c1 (t = 0) to c2 (t = 1).
ConformalStructure geodesic_point(const ConformalStructure& c1, const ConformalStructure& c2, double t);

/// Riemannian log/exp in the whitened chart at `base`: tangent vectors are
/// traceless symmetric matrices W with target = base^{1/2} exp(W) base^{1/2}.
Mat whitened_log(const ConformalStructure& base, const ConformalStructure& target);
ConformalStructure whitened_exp(const ConformalStructure& base, const Mat& tangent);

/// Both sides of dist(σ, A(σ)) ≤ k(σ)·‖A − Id‖ with k(σ) = 3d‖C⁻¹‖‖C‖,
/// valid for ‖A − Id‖ ≤ (6‖C⁻¹‖‖C‖)⁻¹.
struct PerturbationBound {
  double lhs;
  double rhs;
  double threshold;
  bool holds() const { return lhs <= rhs; }
};

/// Throws HypothesisViolated when ‖A − Id‖ exceeds the threshold.
PerturbationBound perturbation_bound_check(const ConformalStructure& c, const Mat& a);

struct KarcherOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-10;
};

/// Minimizer of Σ wᵢ dist(·, Cᵢ)². Throws NoConvergence.
ConformalStructure karcher_mean(std::span<const ConformalStructure> structures, std::span<const double> weights,
                                const KarcherOptions& opt = {});

/// Equal weights.
ConformalStructure karcher_mean(std::span<const ConformalStructure> structures, const KarcherOptions& opt = {});

struct EnclosingBall {
  ConformalStructure center;
  double radius;
  int support;       // points at distance radius (within 1e-8)
  bool certified;    // support ≥ 2, or a single point with radius 0
};

struct BallOptions {
  int warm_start_iterations = 500;
  int max_refinements = 40;
};

/// Smallest ball containing a finite set; unique in nonpositive curvature.
/// Geodesic Bădoiu–Clarkson warm start followed by an active-set Newton
/// solve of the optimality system Σ wᵢ log_c(Cᵢ) = 0, dist(c, Cᵢ) = R on
/// the support. Throws NoConvergence.
EnclosingBall minimal_enclosing_ball(std::span<const ConformalStructure> structures, const BallOptions& opt = {});

}  // namespace coclab
