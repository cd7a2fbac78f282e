#include <doctest.h>

#include <cmath>
#include <numbers>

#include "coclab/conformal.hpp"
#include "coclab/random.hpp"
#include "test_support.hpp"

using namespace coclab;
using testing::code_of;
using testing::mat2;

namespace {

Mat random_matrix(Rng& rng, int d) {
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  return a;
}

// Random invertible matrix with singular values in [1/2, 2].
Mat random_gl(Rng& rng, int d) {
  Eigen::JacobiSVD<Mat> svd(random_matrix(rng, d), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec s(d);
  for (int i = 0; i < d; ++i) s(i) = std::exp2(rng.uniform(-1, 1));
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

ConformalStructure random_structure(Rng& rng, int d) {
  const Mat a = random_matrix(rng, d);
  return ConformalStructure(a.transpose() * a + 0.1 * Mat::Identity(d, d));
}

Mat random_orthogonal(Rng& rng, int d) {
  Eigen::HouseholderQR<Mat> qr(random_matrix(rng, d));
  return qr.householderQ() * Mat::Identity(d, d);
}

// Closed-form distance to the identity from the eigenvalues of C.
double base_point_distance(const Mat& c) {
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  const double d = static_cast<double>(c.rows());
  return std::sqrt(d) / 2 * es.eigenvalues().array().log().matrix().norm();
}

Mat diag2(double a, double b) { return mat2(a, 0, 0, b); }

}  // namespace

TEST_CASE("distance") {
  const double e = std::numbers::e;
  const auto id = ConformalStructure::identity(2);
  CHECK(distance(id, ConformalStructure(diag2(e, 1 / e))) == doctest::Approx(1.0).epsilon(1e-14));

  Rng rng(1);
  for (int d : {2, 3, 4}) {
    for (int k = 0; k < 100; ++k) {
      const auto c1 = random_structure(rng, d), c2 = random_structure(rng, d), c3 = random_structure(rng, d);
      CHECK(distance(c1, c1) < 1e-12);
      CHECK(distance(ConformalStructure::identity(d), c1) ==
            doctest::Approx(base_point_distance(c1.matrix())).epsilon(1e-10));
      CHECK(std::abs(distance(c1, c2) - distance(c2, c1)) <= 1e-12 * (1 + distance(c1, c2)));
      CHECK(distance(c1, c3) <= distance(c1, c2) + distance(c2, c3) + 1e-10);
      const Mat a = random_matrix(rng, d);
      CHECK(distance(act(a, c1), act(a, c2)) == doctest::Approx(distance(c1, c2)).epsilon(1e-9));
    }
  }
  CHECK(code_of([] { distance(ConformalStructure::identity(2), ConformalStructure::identity(3)); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("structures are normalized on construction") {
  const ConformalStructure c(diag2(4, 9));
  CHECK(c.matrix().determinant() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.matrix()(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(code_of([] { ConformalStructure(diag2(1, -1)); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { ConformalStructure(mat2(1, 0.5, 0, 1)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("GL action") {
  Rng rng(2);
  const auto id = ConformalStructure::identity(2);
  const auto c = random_structure(rng, 2);
  CHECK((act(Mat::Identity(2, 2), c).matrix() - c.matrix()).norm() < 1e-12);
  CHECK((act(random_orthogonal(rng, 2), id).matrix() - id.matrix()).norm() < 1e-12);
  CHECK((act(diag2(2, 1), id).matrix() - diag2(0.5, 2)).norm() < 1e-14);
  CHECK(code_of([&] { act(mat2(1, 2, 2, 4), c); }) == ErrorCode::SingularMatrix);

  for (int d : {2, 3}) {
    for (int k = 0; k < 100; ++k) {
      const Mat a = random_gl(rng, d), b = random_gl(rng, d);
      const auto s = random_structure(rng, d);
      const Mat lhs = act(a * b, s).matrix();
      const Mat rhs = act(a, act(b, s)).matrix();
      CHECK((lhs - rhs).norm() <= 1e-10 * lhs.norm());
      CHECK(act(a, s).matrix().determinant() == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("perturbation bound") {
  const auto id = ConformalStructure::identity(2);
  const auto zero = perturbation_bound_check(id, Mat::Identity(2, 2));
  CHECK(zero.lhs < 1e-15);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.holds());

  const auto small = perturbation_bound_check(id, mat2(1.01, 0, 0, 1));
  CHECK(small.rhs == doctest::Approx(0.06));
  CHECK(small.holds());

  CHECK(code_of([&] { perturbation_bound_check(id, mat2(1.5, 0, 0, 1)); }) == ErrorCode::HypothesisViolated);

  // Random structures with condition number 4 and perturbations on the
  // hypothesis boundary.
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const Mat q = random_orthogonal(rng, 2);
    const ConformalStructure c(q * diag2(2, 0.5) * q.transpose());
    const Mat dir = random_matrix(rng, 2);
    const Mat a = Mat::Identity(2, 2) + dir / spectral_norm(dir) * (1.0 / 24.0) * (1 - 1e-12);
    const auto r = perturbation_bound_check(c, a);
    CHECK(r.threshold == doctest::Approx(1.0 / 24.0));
    CHECK(r.holds());
  }
}

TEST_CASE("Karcher mean") {
  const double e = std::numbers::e;
  const ConformalStructure c(diag2(e, 1 / e)), cinv(diag2(1 / e, e));
  std::vector<ConformalStructure> one = {c};
  CHECK((karcher_mean(one).matrix() - c.matrix()).norm() < 1e-12);

  std::vector<ConformalStructure> pair = {c, cinv};
  CHECK((karcher_mean(pair).matrix() - Mat::Identity(2, 2)).norm() < 1e-8);

  std::vector<ConformalStructure> mid = {c, ConformalStructure::identity(2)};
  CHECK((karcher_mean(mid).matrix() - diag2(std::sqrt(e), 1 / std::sqrt(e))).norm() < 1e-10);

  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    std::vector<ConformalStructure> s;
    std::vector<double> w;
    for (int i = 0; i < 5; ++i) {
      s.push_back(random_structure(rng, 3));
      w.push_back(rng.uniform(0.1, 1.0));
    }
    double total = 0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    const Mat a = random_matrix(rng, 3);
    std::vector<ConformalStructure> moved;
    for (const auto& x : s) moved.push_back(act(a, x));
    const Mat lhs = karcher_mean(moved, w).matrix();
    const Mat rhs = act(a, karcher_mean(s, w)).matrix();
    CHECK((lhs - rhs).norm() <= 1e-8 * rhs.norm());
  }

  std::vector<double> bad = {0.5, 0.6};
  CHECK(code_of([&] { karcher_mean(pair, bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("minimal enclosing ball") {
  Rng rng(5);
  const auto c1 = random_structure(rng, 2);
  std::vector<ConformalStructure> one = {c1};
  const auto b1 = minimal_enclosing_ball(one);
  CHECK(b1.radius == 0.0);
  CHECK(b1.certified);

  for (int k = 0; k < 20; ++k) {
    const auto a = random_structure(rng, 2), b = random_structure(rng, 2);
    std::vector<ConformalStructure> two = {a, b};
    const auto ball = minimal_enclosing_ball(two);
    // Geodesic midpoint A^{1/2}(A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}.
    const Mat ah = spd_sqrt(a.matrix()), aih = spd_inv_sqrt(a.matrix());
    const Mat midpoint = ah * spd_sqrt(aih * b.matrix() * aih) * ah;
    CHECK((ball.center.matrix() - midpoint).norm() < 1e-8 * midpoint.norm());
    CHECK(std::abs(distance(ball.center, a) - distance(ball.center, b)) < 1e-9);
    CHECK(ball.certified);
  }

  // Orbit of a structure under a cyclic group of rotations: the centre is
  // fixed by the group.
  for (int order : {3, 4, 5}) {
    const Mat q = rotation(2 * std::numbers::pi / order);
    const auto seed = ConformalStructure(mat2(3, 1, 1, 1));
    std::vector<ConformalStructure> orbit;
    Mat qk = Mat::Identity(2, 2);
    for (int i = 0; i < order; ++i) {
      orbit.push_back(act(qk, seed));
      qk = q * qk;
    }
    const auto ball = minimal_enclosing_ball(orbit);
    CHECK(distance(act(q, ball.center), ball.center) < 1e-8);
    CHECK(ball.certified);
  }

  for (int k = 0; k < 10; ++k) {
    std::vector<ConformalStructure> cloud;
    for (int i = 0; i < 12; ++i) cloud.push_back(random_structure(rng, 3));
    const auto ball = minimal_enclosing_ball(cloud);
    CHECK(ball.certified);
    CHECK(ball.support >= 2);
    for (const auto& p : cloud) CHECK(distance(ball.center, p) <= ball.radius + 1e-8);
    // Nudging the centre never shrinks the covering radius.
    for (int t = 0; t < 10; ++t) {
      Mat w = random_matrix(rng, 3);
      w = 0.5 * (w + w.transpose());
      w -= (w.trace() / 3) * Mat::Identity(3, 3);
      const auto moved = whitened_exp(ball.center, 1e-3 * w);
      double far = 0;
      for (const auto& p : cloud) far = std::max(far, distance(moved, p));
      CHECK(far >= ball.radius - 1e-9);
    }
  }
}

TEST_CASE("whitened chart round trip") {
  Rng rng(6);
  for (int k = 0; k < 50; ++k) {
    const auto a = random_structure(rng, 3), b = random_structure(rng, 3);
    const Mat w = whitened_log(a, b);
    CHECK(std::abs(w.trace()) < 1e-10);
    CHECK((whitened_exp(a, w).matrix() - b.matrix()).norm() < 1e-9 * b.matrix().norm());
    CHECK(distance(geodesic_point(a, b, 0.5), a) == doctest::Approx(0.5 * distance(a, b)).epsilon(1e-9));
  }
}
