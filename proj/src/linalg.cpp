#include "coclab/linalg.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "coclab/error.hpp"

namespace coclab {

Vec singular_values(const Mat& m) {
  if (m.rows() == 2 && m.cols() == 2) {
    // σ₁ ± σ₂ = |(a ± d, c ∓ b)| up to the sign of det; the hypot form
    // avoids cancellation for nearly conformal matrices.
    const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
    const double det = std::abs(a * d - b * c);
    double p = std::hypot(a + d, c - b);
    double q = std::hypot(a - d, c + b);
    if (p < q) std::swap(p, q);
    Vec s(2);
    s(0) = 0.5 * (p + q);
    s(1) = s(0) > 0 ? det / s(0) : 0.0;
    return s;
  }
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues();
}

double spectral_norm(const Mat& m) { return singular_values(m)(0); }

double condition_number(const Mat& m) {
  const Vec s = singular_values(m);
  const double lo = s(s.size() - 1);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / lo;
}

Mat checked_inverse(const Mat& m, double cond_cap) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "inverse of non-square matrix");
  const double k = condition_number(m);
  if (!(k <= cond_cap)) {
    throw Error(ErrorCode::SingularFiberMap, "condition number " + std::to_string(k) + " above cap");
  }
  if (m.rows() == 2) {
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    Mat inv(2, 2);
    inv << m(1, 1) / det, -m(0, 1) / det, -m(1, 0) / det, m(0, 0) / det;
    return inv;
  }
  return m.partialPivLu().inverse();
}

Mat2 rotation(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

double wrap_line_angle(double a) {
  constexpr double pi = std::numbers::pi;
  double r = std::fmod(a, pi);
  if (r < 0) r += pi;
  if (r >= pi) r -= pi;
  return r;
}

double line_distance(double a, double b) {
  constexpr double pi = std::numbers::pi;
  const double d = wrap_line_angle(a - b);
  return std::min(d, pi - d);
}

LeadingLine leading_line(const Mat2& m) {
  // Eigenvectors of m mᵀ = [[p, r], [r, q]].
  const double p = m.row(0).squaredNorm();
  const double q = m.row(1).squaredNorm();
  const double r = m.row(0).dot(m.row(1));
  const double angle = wrap_line_angle(0.5 * std::atan2(2 * r, p - q));
  const Vec s = singular_values(Mat(m));
  const double gap = s(1) > 0 ? std::log(s(0) / s(1)) : std::numeric_limits<double>::infinity();
  return {angle, gap};
}

namespace {

template <class Fn>
Mat spectral_apply(const Mat& s, Fn fn) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  Vec d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i) d(i) = fn(d(i));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

void require_positive(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0)) throw Error(ErrorCode::InvalidArgument, "matrix is not positive definite");
}

}  // namespace

Mat spd_log(const Mat& s) {
  require_positive(s);
  return spectral_apply(s, [](double v) { return std::log(v); });
}

Mat sym_exp(const Mat& s) {
  return spectral_apply(s, [](double v) { return std::exp(v); });
}

Mat spd_pow(const Mat& s, double p) {
  require_positive(s);
  return spectral_apply(s, [p](double v) { return std::pow(v, p); });
}

Mat spd_sqrt(const Mat& s) { return spd_pow(s, 0.5); }

Mat spd_inv_sqrt(const Mat& s) { return spd_pow(s, -0.5); }

std::int64_t int_det(const IntMat& m) {
  const auto n = m.rows();
  if (n != m.cols()) throw Error(ErrorCode::DimensionMismatch, "determinant of non-square matrix");
  if (n == 0) return 1;
  // Bareiss fraction-free elimination in 128-bit intermediates.
  std::vector<std::vector<__int128>> a(n, std::vector<__int128>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a[i][j] = m(i, j);
  __int128 prev = 1;
  int sign = 1;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (a[k][k] == 0) {
      Eigen::Index swap = -1;
      for (Eigen::Index i = k + 1; i < n; ++i)
        if (a[i][k] != 0) { swap = i; break; }
      if (swap < 0) return 0;
      std::swap(a[k], a[swap]);
      sign = -sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      for (Eigen::Index j = k + 1; j < n; ++j) {
        a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
      }
    }
    prev = a[k][k];
  }
  const __int128 det = sign * a[n - 1][n - 1];
  if (det > std::numeric_limits<std::int64_t>::max() || det < std::numeric_limits<std::int64_t>::min()) {
    throw Error(ErrorCode::InvalidArgument, "integer determinant overflows int64");
  }
  return static_cast<std::int64_t>(det);
}

IntMat int_adjugate(const IntMat& m) {
  const auto n = m.rows();
  IntMat adj(n, n);
  if (n == 1) {
    adj(0, 0) = 1;
    return adj;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      IntMat minor(n - 1, n - 1);
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == j) continue;
        for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
          if (c == i) continue;
          minor(rr, cc++) = m(r, c);
        }
        ++rr;
      }
      const std::int64_t cof = int_det(minor);
      adj(i, j) = ((i + j) % 2 == 0) ? cof : -cof;
    }
  }
  return adj;
}

IntMat int_pow(const IntMat& m, long n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "negative integer matrix power");
  IntMat result = IntMat::Identity(m.rows(), m.cols());
  IntMat base = m;
  auto mul = [](const IntMat& a, const IntMat& b) {
    IntMat c = IntMat::Zero(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        __int128 acc = 0;
        for (Eigen::Index k = 0; k < a.cols(); ++k) acc += static_cast<__int128>(a(i, k)) * b(k, j);
        if (acc > std::numeric_limits<std::int64_t>::max() || acc < std::numeric_limits<std::int64_t>::min()) {
          throw Error(ErrorCode::InvalidArgument, "integer matrix power overflows int64");
        }
        c(i, j) = static_cast<std::int64_t>(acc);
      }
    return c;
  };
  while (n > 0) {
    if (n & 1) result = mul(result, base);
    n >>= 1;
    if (n > 0) base = mul(base, base);
  }
  return result;
}

}  // namespace coclab
