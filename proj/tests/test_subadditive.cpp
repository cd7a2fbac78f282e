#include <doctest.h>

#include <cmath>
#include <numbers>

#include "coclab/random.hpp"
#include "coclab/subadditive.hpp"
#include "test_support.hpp"

using namespace coclab;
using testing::code_of;
using testing::mat2;
using testing::tp;

namespace {

ToralAutomorphism cat_map() { return make_automorphism(2, 1, 1, 1); }
ToralAutomorphism example_base() { return make_automorphism(41, 32, 32, 25); }

// K of [[1, n], [0, 1]]: det 1, so K = σ_max² = (n² + 2 + n√(n² + 4)) / 2.
double unipotent_k(double n) { return (n * n + 2 + n * std::sqrt(n * n + 4)) / 2; }

}  // namespace

TEST_CASE("Birkhoff averages") {
  const auto f = cat_map();
  const TorusPoint x = tp(0.1234, 0.5678);
  CHECK(birkhoff_average(f, [](const BaseVec&) { return 2.5; }, x, 100) == 2.5);
  const auto phi = [](const BaseVec& v) { return std::cos(2 * std::numbers::pi * v(0)); };
  CHECK(birkhoff_average(f, phi, x, 1) == doctest::Approx(phi(x.coords())));
  CHECK(std::abs(birkhoff_average(f, phi, x, 1'000'000)) < 5e-3);
}

TEST_CASE("negative levels") {
  const auto f = cat_map();
  const auto grid = uniform_grid(f.lattice(), 16);
  const auto minus_n = pointwise_family(f, [](const TorusPoint&, long n) { return -static_cast<double>(n); });
  CHECK(find_negative_level(minus_n, grid, 10) == 1);

  const auto contracting = log_norm_family(constant_cocycle(f, mat2(0.5, 0, 0, 1.0 / 3)));
  const auto scan = negative_level_scan(contracting, grid, 10);
  CHECK(scan.found);
  CHECK(scan.level == 1);
  CHECK(scan.max_by_level.front() == doctest::Approx(-std::log(2.0)).epsilon(1e-14));

  const auto conf = log_distortion_family(conformal_cocycle(f), 0.01);
  CHECK(find_negative_level(conf, grid, 10) == 1);

  // Level 3 family: a_n = 2.5 − n.
  const auto shifted = pointwise_family(f, [](const TorusPoint&, long n) { return 2.5 - static_cast<double>(n); });
  CHECK(find_negative_level(shifted, grid, 10) == 3);

  const auto positive = pointwise_family(f, [](const TorusPoint&, long) { return 1.0; });
  CHECK(code_of([&] { find_negative_level(positive, grid, 20); }) == ErrorCode::NotFound);
  const auto miss = negative_level_scan(positive, grid, 20);
  CHECK_FALSE(miss.found);
  CHECK(miss.max_by_level.size() == 20);
}

TEST_CASE("adding grid points never lowers the level") {
  // A bump near (0.3, 0.3) delays the level there.
  const auto fam = pointwise_family(cat_map(), [](const TorusPoint& x, long n) {
    const bool bump = torus_dist(x, tp(0.3, 0.3)) < 0.01;
    return (bump ? 5.5 : 0.5) - static_cast<double>(n);
  });
  const auto coarse = uniform_grid(Lattice::standard(2), 8);
  auto fine = coarse;
  fine.push_back(tp(0.3, 0.3));
  CHECK(find_negative_level(fam, coarse, 50) == 1);
  CHECK(find_negative_level(fam, fine, 50) == 6);
  CHECK(find_negative_level(fam, coarse, 50) <= find_negative_level(fam, fine, 50));
}

TEST_CASE("subadditivity spot checks") {
  const auto ex = example46(example_base(), 0.2);
  CHECK(subadditivity_defect(log_norm_family(ex.torus), 200, 20, 1) <= 1e-9);
  CHECK(subadditivity_defect(log_distortion_family(ex.torus, 0.7), 200, 20, 2) <= 1e-9);
  CHECK(subadditivity_defect(log_distortion_family(ex.torus, -0.3), 200, 20, 3) <= 1e-9);
}

TEST_CASE("distortion growth certificates") {
  const auto f = cat_map();
  const auto grid = uniform_grid(f.lattice(), 8);

  const auto conf = distortion_growth_certificate(conformal_cocycle(f), 0.0, 0.05, grid, 64);
  CHECK(conf.c_eps == 1.0);
  CHECK(conf.pass);

  const auto uni = distortion_growth_certificate(constant_cocycle(f, mat2(1, 1, 0, 1)), 0.0, 0.05, grid, 400);
  double oracle = 1;
  for (int n = 1; n <= 400; ++n) oracle = std::max(oracle, unipotent_k(n) * std::exp(-0.05 * n));
  CHECK(uni.c_eps == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(uni.pass);

  const auto ex = example46(example_base(), 0.1);
  auto with_zero = uniform_grid(Lattice::standard(2), 8);  // contains the origin
  const auto bad = distortion_growth_certificate(ex.torus, 0.0, 0.05, with_zero, 64);
  CHECK_FALSE(bad.pass);
  CHECK(std::abs(bad.rate - std::log(11.0 / 9.0)) < 1e-3);
  CHECK(bad.worst == tp(0, 0));

  const auto looser = distortion_growth_certificate(ex.torus, 0.0, 0.1, with_zero, 64);
  CHECK(looser.c_eps <= bad.c_eps);
}

TEST_CASE("default grid") {
  const auto g = default_grid(cat_map());
  CHECK(g.periods_included == 4);
  CHECK(g.points.size() == 4096 + 1 + 5 + 16 + 45);
  const auto e = default_grid(example_base());
  CHECK(e.periods_included == 2);
}
