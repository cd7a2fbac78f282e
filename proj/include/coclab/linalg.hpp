#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace coclab {

/// Fiber dimension cap. Small matrices live on the stack.
inline constexpr int kMaxFiberDim = 6;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxFiberDim, kMaxFiberDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxFiberDim, 1>;
using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

/// Integer matrices for base automorphisms.
using IntMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Singular values in descending order.
Vec singular_values(const Mat& m);

/// Spectral norm (largest singular value).
double spectral_norm(const Mat& m);

/// ‖m‖·‖m⁻¹‖ = σ_max/σ_min; +inf for singular input.
double condition_number(const Mat& m);

/// Inverse with a conditioning guard; throws SingularFiberMap when
/// cond(m) exceeds `cond_cap`.
Mat checked_inverse(const Mat& m, double cond_cap = 1e12);

/// Rotation of the plane by `angle`.
Mat2 rotation(double angle);

/// Angle in [0, π) of the most expanded image direction of a 2×2 matrix
/// (top left singular vector), together with log(σ₁/σ₂).
struct LeadingLine {
  double angle;
  double log_gap;
};
LeadingLine leading_line(const Mat2& m);

/// Distance between lines through the origin given by angles (mod π).
double line_distance(double a, double b);

/// Angle reduced to [0, π).
double wrap_line_angle(double a);

/// Symmetric-matrix functions via eigen-decomposition. Input must be
/// symmetric positive definite (log/sqrt/pow) or symmetric (exp).
Mat spd_log(const Mat& s);
Mat sym_exp(const Mat& s);
Mat spd_pow(const Mat& s, double p);
Mat spd_sqrt(const Mat& s);
Mat spd_inv_sqrt(const Mat& s);

/// Integer matrix determinant (Bareiss, exact for small entries).
std::int64_t int_det(const IntMat& m);

/// Adjugate of a small integer matrix.
IntMat int_adjugate(const IntMat& m);

/// Integer matrix power (no overflow checking beyond int64 range checks).
IntMat int_pow(const IntMat& m, long n);

}  // namespace coclab
