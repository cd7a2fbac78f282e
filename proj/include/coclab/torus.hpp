#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coclab/linalg.hpp"

namespace coclab {

inline constexpr int kMaxBaseDim = 4;

/// Vector in the universal cover R^d of the base torus.
using BaseVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxBaseDim, 1>;

/// Diagonal lattice p₁Z × … × p_dZ. Periods must be powers of two up to 64
/// so that points can be held exactly in binary fixed point.
struct Lattice {
  std::vector<int> periods;

  static Lattice standard(int dim);

  int dim() const { return static_cast<int>(periods.size()); }
  int shortest_period() const;
  std::string id() const;  // e.g. "4Zx1Z"
  bool operator==(const Lattice&) const = default;
};

/// A point of R^d / L, stored as binary fixed point with kFracBits
/// fractional bits per coordinate. Addition and integer-matrix action
/// are exact modulo the lattice.
class TorusPoint {
 public:
  static constexpr int kFracBits = 58;

  TorusPoint() = default;

  /// Canonical representative of `coords` modulo the lattice.
  static TorusPoint from_coords(const Lattice& lattice, const BaseVec& coords);
  static TorusPoint origin(const Lattice& lattice);

  int dim() const { return dim_; }
  double coord(int i) const;
  BaseVec coords() const;
  std::uint64_t raw(int i) const { return raw_[i]; }
  int period(int i) const { return 1 << log2_period_[i]; }
  std::uint64_t mask(int i) const;

  /// Lattice periods must match (used as a precondition check).
  bool same_lattice(const TorusPoint& other) const;

  /// x + v mod L; exact up to rounding v to the fixed-point grid.
  TorusPoint translated(const BaseVec& v) const;

  /// Raw construction; values are reduced by the per-coordinate mask.
  static TorusPoint from_raw(const std::array<std::uint8_t, kMaxBaseDim>& log2_periods, int dim,
                             const std::array<std::uint64_t, kMaxBaseDim>& raw);

  const std::array<std::uint64_t, kMaxBaseDim>& raw_words() const { return raw_; }
  const std::array<std::uint8_t, kMaxBaseDim>& log2_periods() const { return log2_period_; }

  bool operator==(const TorusPoint& o) const {
    return dim_ == o.dim_ && raw_ == o.raw_ && log2_period_ == o.log2_period_;
  }

 private:
  std::array<std::uint64_t, kMaxBaseDim> raw_{};
  std::array<std::uint8_t, kMaxBaseDim> log2_period_{};
  int dim_ = 0;
};

/// y − x for the nearest lattice translate (coordinatewise, exact for
/// rectangular lattices).
BaseVec displacement(const TorusPoint& x, const TorusPoint& y);

/// Quotient Euclidean distance.
double torus_dist(const TorusPoint& x, const TorusPoint& y);

/// A point with rational coordinates num_i / den, reduced to [0, p_i).
struct RationalPoint {
  std::vector<std::int64_t> num;
  std::int64_t den = 1;

  BaseVec coords() const;
  TorusPoint to_point(const Lattice& lattice) const;
  bool operator==(const RationalPoint&) const = default;
};

/// Hyperbolic automorphism of R^d / L induced by an integer matrix.
class ToralAutomorphism {
 public:
  const IntMat& matrix() const { return matrix_; }
  const IntMat& inverse_matrix() const { return inverse_; }
  const Lattice& lattice() const { return lattice_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

  /// Eigen-splitting, available for d = 2.
  double lambda_u() const { return lambda_u_; }
  double lambda_s() const { return lambda_s_; }
  const BaseVec& v_u() const { return v_u_; }
  const BaseVec& v_s() const { return v_s_; }
  /// Contraction rate along stable leaves, |λ_s|.
  double nu() const { return nu_; }
  /// Contraction rate of f⁻¹ along unstable leaves, 1/|λ_u|.
  double nu_hat() const { return nu_hat_; }
  /// Local leaf radius r.
  double leaf_radius() const { return leaf_radius_; }
  /// Condition number of the eigenbasis [v_s v_u].
  double eigenbasis_condition() const { return eigenbasis_cond_; }

  TorusPoint step(const TorusPoint& x) const;
  TorusPoint step_back(const TorusPoint& x) const;
  RationalPoint step(const RationalPoint& x) const;

  friend ToralAutomorphism make_automorphism(const IntMat&, const Lattice&, double);

 private:
  IntMat matrix_;
  IntMat inverse_;
  Lattice lattice_;
  double lambda_u_ = 0, lambda_s_ = 0, nu_ = 0, nu_hat_ = 0;
  BaseVec v_u_, v_s_;
  double leaf_radius_ = 0.25;
  double eigenbasis_cond_ = 1;
};

/// Validates |det| = 1, lattice invariance and hyperbolicity. A
/// non-positive `leaf_radius` selects a quarter of the shortest period.
ToralAutomorphism make_automorphism(const IntMat& matrix, const Lattice& lattice,
                                    double leaf_radius = 0.0);

/// Convenience for 2×2 input.
ToralAutomorphism make_automorphism(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d,
                                    const Lattice& lattice = Lattice::standard(2));

/// fⁿx for any integer n, by modular matrix powers (no float drift).
TorusPoint apply(const ToralAutomorphism& f, const TorusPoint& x, long n);

/// x + t·v_s. Throws LeafRadiusExceeded when |t| > r.
TorusPoint stable_point(const ToralAutomorphism& f, const TorusPoint& x, double t);
TorusPoint unstable_point(const ToralAutomorphism& f, const TorusPoint& x, double t);

enum class LeafType { Stable, Unstable };

struct Leg {
  LeafType leaf;
  TorusPoint start;
  TorusPoint end;
  double length;  // signed leaf coordinate
};

/// Stable-then-unstable path from x to y inside one product chart.
std::vector<Leg> su_path(const ToralAutomorphism& f, const TorusPoint& x, const TorusPoint& y);

/// Coordinates (s, u) with y − x = s·v_s + u·v_u for the nearest translate.
Vec2 leaf_coordinates(const ToralAutomorphism& f, const TorusPoint& x, const TorusPoint& y);

/// |det(Mⁿ − Id)|; throws TooManyPeriodicPoints when it does not fit.
std::int64_t periodic_point_count(const ToralAutomorphism& f, int period);

/// All x with fⁿx = x, exactly. Throws TooManyPeriodicPoints above `cap`.
std::vector<RationalPoint> periodic_points(const ToralAutomorphism& f, int period,
                                           std::int64_t cap = 200000);

/// Exact check of fⁿp = p.
bool is_periodic(const ToralAutomorphism& f, const RationalPoint& p, int period);

/// The same matrix acting on a finite cover R^d / L' with L' ⊆ L.
struct CoverLift {
  ToralAutomorphism cover;
  Lattice base_lattice;

  TorusPoint project(const TorusPoint& x) const;
};

CoverLift cover_lift(const ToralAutomorphism& f, const Lattice& cover_lattice);

/// Uniform n×n grid of cell corners on the fundamental domain.
std::vector<TorusPoint> uniform_grid(const Lattice& lattice, int per_axis);

/// Same grid shifted by `offset` cells on every axis. Corner grids of a
/// power-of-two lattice consist of periodic points; an irrational offset
/// keeps every grid point off short periodic orbits.
std::vector<TorusPoint> uniform_grid(const Lattice& lattice, int per_axis, double offset);

inline constexpr double kGenericOffset = 0.41421356237309515;  // √2 − 1

}  // namespace coclab
