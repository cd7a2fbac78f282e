#pragma once

#include <functional>
#include <string>
#include <vector>

#include "coclab/expression.hpp"
#include "coclab/linalg.hpp"
#include "coclab/torus.hpp"

namespace coclab {

enum class CocycleKind { Constant, Example46, Example46Cover, Conformal, Expression, Pullback };

std::string_view to_string(CocycleKind kind);

/// A Hölder map x ↦ F(x) ∈ GL(d_f, R) over a toral automorphism, on the
/// trivial bundle (fibers identified with R^{d_f} everywhere).
class CocycleSpec {
 public:
  using Eval = std::function<Mat(const BaseVec&)>;

  /// Validates invertibility on a 16×16 construction grid.
  CocycleSpec(ToralAutomorphism base, int fiber_dim, double beta, CocycleKind kind, Eval eval,
              std::string description = {});

  const ToralAutomorphism& base() const { return base_; }
  int fiber_dim() const { return fiber_dim_; }
  double beta() const { return beta_; }
  CocycleKind kind() const { return kind_; }
  const std::string& description() const { return description_; }

  Mat at(const TorusPoint& x) const { return eval_(x.coords()); }
  Mat at(const BaseVec& coords) const { return eval_(coords); }

 private:
  ToralAutomorphism base_;
  int fiber_dim_;
  double beta_;
  CocycleKind kind_;
  Eval eval_;
  std::string description_;
};

/// Renormalized n-step product. The true product is exp(log_scale)·scaled.
struct IterateResult {
  Mat scaled;
  double log_scale = 0;
  double log_norm = 0;    // log ‖Fⁿ_x‖
  double log_conorm = 0;  // log ‖(Fⁿ_x)⁻¹‖⁻¹
  long n = 0;

  /// The product itself; entries may overflow to ±inf for long orbits.
  Mat matrix() const { return scaled * std::exp(log_scale); }
  double log_distortion() const { return log_norm - log_conorm; }
};

struct IterateOptions {
  long max_steps = 10'000'000;
  double cond_cap = 1e12;
};

/// Fⁿ_x = F(f^{n−1}x)⋯F(x) for n > 0; (F^{−n}_{fⁿx})⁻¹ for n < 0, built from
/// pointwise inverses along the backward orbit.
IterateResult iterate(const CocycleSpec& c, const TorusPoint& x, long n, const IterateOptions& opt = {});

struct Distortion {
  double K;
  double log_K;
};

/// K_F(x, n) = ‖Fⁿ_x‖·‖(Fⁿ_x)⁻¹‖.
Distortion quasiconformal_distortion(const CocycleSpec& c, const TorusPoint& x, long n,
                                     const IterateOptions& opt = {});

struct FiberBunching {
  double margin;  // max over grid of ‖F‖‖F⁻¹‖ν^β
  double theta;   // equal to margin; the geometric ratio for holonomy series
  TorusPoint worst;
  bool bunched() const { return margin < 1.0; }
};

/// `contraction` defaults to the stable rate ν of the base.
FiberBunching fiber_bunching_margin(const CocycleSpec& c, const std::vector<TorusPoint>& grid, double beta,
                                    double contraction = -1.0);

/// Empirical Hölder constant: max over sampled close pairs of
/// ‖F(x) − F(y)‖ / dist(x, y)^β.
double holder_constant(const CocycleSpec& c, int samples, std::uint64_t seed, double max_dist = 1e-2);

CocycleSpec constant_cocycle(const ToralAutomorphism& base, const Mat& a, double beta = 1.0);

/// Conformal with respect to the structure induced by `frame`:
/// F(x) = (1 + amplitude·cos 2πx₂)·B·R(2πx₁ + offset)·B⁻¹.
struct ConformalParams {
  double scale_amplitude = 0.3;
  double rotation_offset = 1.0;
  Mat2 frame = Mat2::Identity();
};
CocycleSpec conformal_cocycle(const ToralAutomorphism& base, const ConformalParams& params = {},
                              double beta = 1.0);

/// User cocycle with closed-form entries (row-major, d_f × d_f).
CocycleSpec expression_cocycle(const ToralAutomorphism& base, const std::vector<std::vector<Expression>>& entries,
                               double beta = 1.0);

/// F ∘ p on a finite cover.
CocycleSpec pullback(const CocycleSpec& c, const CoverLift& lift);

/// The two-dimensional example over a hyperbolic matrix congruent to the
/// identity mod 4: a cocycle on T² with one Lyapunov exponent for volume
/// but two at the fixed point 0, built from a diagonal cocycle on the
/// 4-cover R²/(4Z × Z) conjugated by a rotation field.
struct Example46 {
  double epsilon;
  CocycleSpec torus;   // F on R²/Z²
  CocycleSpec cover4;  // C̄(f̄x)·Ā(x)·C̄(x)⁻¹ on R²/(4Z × Z)
  CocycleSpec cover2;  // F pulled back to R²/(2Z × Z)
  CoverLift lift4;
  CoverLift lift2;

  double a(const BaseVec& x) const;   // 1 + ε cos πx₁
  double b(const BaseVec& x) const;   // 1 − ε cos πx₁
  Mat2 cbar(const BaseVec& x) const;  // R(πx₁/2)
  /// C̄(x)·Ā(x)·C̄(x)⁻¹ in closed form.
  Mat2 symmetric_part(const BaseVec& x) const;
};

/// Throws CongruenceViolated unless M ≡ Id (mod 4), EpsilonOutOfRange
/// unless 0 ≤ ε < 1.
Example46 example46(const ToralAutomorphism& base, double epsilon);

}  // namespace coclab
