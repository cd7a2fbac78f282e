#include <doctest.h>

#include <cmath>

#include "coclab/holonomy.hpp"
#include "coclab/random.hpp"
#include "test_support.hpp"

using namespace coclab;
using testing::code_of;
using testing::mat2;
using testing::tp;

namespace {

ToralAutomorphism cat_map() { return make_automorphism(2, 1, 1, 1); }
ToralAutomorphism example_base() { return make_automorphism(41, 32, 32, 25); }

double dist_to_id(const Mat& m) { return spectral_norm(m - Mat::Identity(m.rows(), m.cols())); }

}  // namespace

TEST_CASE("constant cocycles have trivial holonomy") {
  const auto f = cat_map();
  const auto c = constant_cocycle(f, mat2(1.2, 0.3, 0, 0.9));
  const HolonomySolver h(c);
  const TorusPoint x = tp(0.2, 0.4);
  const auto hs = h.stable(x, stable_point(f, x, 0.05));
  CHECK(dist_to_id(hs.matrix) < 1e-15);
  CHECK(hs.n_used <= 2);
  const auto hu = h.unstable(x, unstable_point(f, x, -0.05));
  CHECK(dist_to_id(hu.matrix) < 1e-15);
  CHECK(dist_to_id(h.extend(x, 3.7).matrix) < 1e-12);

  const auto report = h.verify_axioms(random_stable_triples(f, 20, 0.05, 1));
  CHECK(report.composition_defect < 1e-14);
  CHECK(report.equivariance_defect < 1e-15);
  CHECK(report.holder_constant < 1e-10);
}

TEST_CASE("holonomy from a point to itself is the identity") {
  const auto ex = example46(example_base(), 0.1);
  const HolonomySolver h(ex.torus);
  const TorusPoint x = tp(0.31, 0.77);
  CHECK(dist_to_id(h.stable(x, x).matrix) == 0.0);
  CHECK(dist_to_id(h.unstable(x, x).matrix) == 0.0);
}

TEST_CASE("example holonomies are Hölder in the leaf distance") {
  const auto ex = example46(example_base(), 0.1);
  const auto& f = ex.torus.base();
  HolonomyOptions opt;
  opt.tol = 1e-10;
  const HolonomySolver h(ex.torus, opt);
  CHECK(h.theta(LeafType::Stable) < 0.02);
  CHECK(h.theta(LeafType::Unstable) < 0.02);

  Rng rng(3);
  double c_small = 0, c_large = 0;
  for (int k = 0; k < 200; ++k) {
    const TorusPoint x = tp(rng.uniform(), rng.uniform());
    const double sign = rng.uniform() < 0.5 ? -1 : 1;
    for (LeafType leaf : {LeafType::Stable, LeafType::Unstable}) {
      const auto point = [&](double t) {
        return leaf == LeafType::Stable ? stable_point(f, x, t) : unstable_point(f, x, t);
      };
      const auto hold = [&](const TorusPoint& y) {
        return leaf == LeafType::Stable ? h.stable(x, y) : h.unstable(x, y);
      };
      const auto near = hold(point(sign * 1e-3));
      CHECK(near.tail_bound < 1e-10);
      c_small = std::max(c_small, dist_to_id(near.matrix) / 1e-3);
      c_large = std::max(c_large, dist_to_id(hold(point(sign * 1e-1)).matrix) / 1e-1);
      const double slope = increment_decay_slope(near);
      if (std::isfinite(slope)) CHECK(slope <= std::log(near.theta) + 0.05);
    }
  }
  // Both constants measure the same Lipschitz bound.
  CHECK(c_small > 0);
  CHECK(c_small <= 1.5 * c_large + 1e-12);
  CHECK(c_large < 500);
}

TEST_CASE("holonomy axioms on the example") {
  const auto ex = example46(example_base(), 0.1);
  const HolonomySolver h(ex.torus);
  const auto report = h.verify_axioms(random_stable_triples(ex.torus.base(), 100, 1e-2, 17));
  CHECK(report.triples == 100);
  CHECK(report.composition_defect < 1e-8);
  CHECK(report.equivariance_defect < 1e-8);
  CHECK(report.uniqueness_defect < 1.0);
  CHECK(report.passed(1e-8));
}

TEST_CASE("tightening the tolerance stays within the certificate") {
  const auto ex = example46(example_base(), 0.2);
  const auto& f = ex.torus.base();
  const HolonomySolver h(ex.torus);
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    const TorusPoint x = tp(rng.uniform(), rng.uniform());
    const double t = rng.uniform(-0.05, 0.05);
    const auto coarse = h.along_leaf(x, t, LeafType::Stable, 1e-6);
    const auto fine = h.along_leaf(x, t, LeafType::Stable, 1e-7);
    CHECK(spectral_norm(coarse.matrix - fine.matrix) <= coarse.tail_bound + 1e-15);
    const auto half = h.along_leaf(x, t, LeafType::Stable, 0.5e-6);
    CHECK(spectral_norm(coarse.matrix - half.matrix) <= coarse.tail_bound + 1e-15);
  }
}

TEST_CASE("extended holonomies") {
  const auto ex = example46(example_base(), 0.1);
  const auto& f = ex.torus.base();
  const HolonomySolver h(ex.torus);
  const TorusPoint x = tp(0.4, 0.15);

  const auto local = h.stable(x, stable_point(f, x, 0.01));
  const auto ext0 = h.extend(x, 0.01);
  CHECK(spectral_norm(local.matrix - ext0.matrix) < 1e-12);

  const auto far = h.extend(x, 7.3);
  for (int extra : {1, 2, 3}) CHECK(spectral_norm(h.extend(x, 7.3, extra).matrix - far.matrix) < 1e-9);
}

TEST_CASE("precondition failures") {
  const auto f = cat_map();
  CHECK(code_of([&] { HolonomySolver(constant_cocycle(f, mat2(10, 0, 0, 0.1))); }) == ErrorCode::NotFiberBunched);
  const auto ex = example46(example_base(), 0.1);
  const HolonomySolver h(ex.torus);
  const TorusPoint x = tp(0.1, 0.1);
  CHECK(code_of([&] { h.stable(x, tp(0.12, 0.1)); }) == ErrorCode::NotOnLeaf);
  CHECK(code_of([&] { h.unstable(x, stable_point(ex.torus.base(), x, 0.01)); }) == ErrorCode::NotOnLeaf);
}

TEST_CASE("product bound table") {
  const auto f = cat_map();
  const TorusPoint x = tp(0.3, 0.6);
  const TorusPoint y = stable_point(f, x, 0.02);

  const auto conf = conformal_cocycle(f, ConformalParams{0.0, 1.0, Mat2::Identity()});
  const auto t_conf = product_bound_check(conf, x, y, 30);
  for (const auto& row : t_conf.rows) {
    CHECK(row.product == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(row.log_bound >= -1e-12);
  }

  const auto c = constant_cocycle(f, mat2(1.3, 0, 0, 1));
  const auto t_const = product_bound_check(c, x, y, 30);
  // θ is inflated by 5% over K(A)ν, so the ratio is 1.05^{-i}.
  CHECK(t_const.c0 == doctest::Approx(1.0).epsilon(1e-12));

  const auto ex = example46(example_base(), 0.1);
  const TorusPoint ye = stable_point(ex.torus.base(), x, 0.02);
  const auto t_ex = product_bound_check(ex.torus, x, ye, 200);
  CHECK(t_ex.rows.size() == 201);
  CHECK(t_ex.c0 < 10);
  CHECK(t_ex.c0 >= 1.0 - 1e-12);
}
