#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "coclab/random.hpp"
#include "coclab/reduction.hpp"
#include "test_support.hpp"

using namespace coclab;
using testing::code_of;
using testing::mat2;
using testing::pt;
using testing::tp;

namespace {

constexpr double kPi = std::numbers::pi;

ToralAutomorphism cat_map() { return make_automorphism(2, 1, 1, 1); }
ToralAutomorphism example_base() { return make_automorphism(41, 32, 32, 25); }

}  // namespace

TEST_CASE("pair geometry") {
  const auto p = make_pair_of_lines(2.0, 0.5);
  CHECK(p.first == doctest::Approx(0.5));
  CHECK(p.second == doctest::Approx(2.0));
  CHECK(pair_distance(p, make_pair_of_lines(0.5 + kPi, 2.0)) < 1e-15);
  CHECK(pair_distance(p, make_pair_of_lines(0.6, 2.0)) == doctest::Approx(0.1));
  // Image of the x-axis under a shear through angle atan(1).
  CHECK(line_image(mat2(1, 0, 1, 1), 0.0) == doctest::Approx(kPi / 4));
  const auto q = push_pair(Mat(rotation(0.3)), p);
  CHECK(pair_distance(q, make_pair_of_lines(0.8, 2.3)) < 1e-14);
}

TEST_CASE("diagonal constant cocycles have the axes as pair") {
  const auto c = constant_cocycle(cat_map(), mat2(2, 0, 0, 1));
  const auto d = detect_line_pair(c, tp(0.3, 0.6));
  REQUIRE(d.ok);
  CHECK(d.pair.first < 1e-12);
  CHECK(std::abs(d.pair.second - kPi / 2) < 1e-12);
  CHECK(d.clusters == 2);
  const auto field = invariant_line_pair_field(c, uniform_grid(Lattice::standard(2), 4), 1e-8);
  CHECK(field.residual < 1e-12);
}

TEST_CASE("rotations have no invariant pair") {
  const auto c = constant_cocycle(cat_map(), Mat(rotation(1.0)));
  PairOptions opt;
  opt.max_steps = 2000;
  CHECK_FALSE(detect_line_pair(c, tp(0.1, 0.2), opt).ok);
  CHECK(code_of([&] { invariant_line_pair_field(c, uniform_grid(Lattice::standard(2), 2), 1e-8, opt); }) ==
        ErrorCode::NoInvariantPair);
}

// Images of these grid points start walks that lean far toward one line
// (first) or visit the other line only between crossings (second).
TEST_CASE("example pair after deep or one-sided walks") {
  const auto ex = example46(example_base(), 0.1);
  const auto grid = uniform_grid(Lattice::standard(2), 64, kGenericOffset);
  for (std::size_t i : {2890u, 3145u}) {
    const TorusPoint y = ex.torus.base().step(grid[i]);
    const auto d = detect_line_pair(ex.torus, y);
    REQUIRE(d.ok);
    CHECK(d.clusters == 2);
    const double t = kPi * y.coord(0) / 2;
    CHECK(pair_distance(d.pair, make_pair_of_lines(t, t + kPi / 2)) < 1e-8);
  }
}

TEST_CASE("example pair follows the rotation field") {
  const auto ex = example46(example_base(), 0.1);
  const auto grid = uniform_grid(Lattice::standard(2), 8, kGenericOffset);
  const auto field = invariant_line_pair_field(ex.torus, grid, 1e-8);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = kPi * grid[i].coord(0) / 2;
    CHECK(pair_distance(field.pairs[i], make_pair_of_lines(t, t + kPi / 2)) < 1e-6);
  }
  std::ostringstream csv;
  write_pair_csv(csv, field);
  CHECK(csv.str().rfind("x1,x2,angle1,angle2,residual\n", 0) == 0);
}

TEST_CASE("pair monodromy swaps along the first circle only") {
  const auto ex = example46(example_base(), 0.1);
  const auto around_first = pair_monodromy(ex.torus, tp(0.1, 0.3), 0, 16);
  CHECK(around_first.swapped);
  CHECK(around_first.max_jump < 0.2);
  CHECK(around_first.min_separation == doctest::Approx(kPi / 2).epsilon(1e-6));
  CHECK_FALSE(pair_monodromy(ex.torus, tp(0.1, 0.3), 1, 16).swapped);
}

TEST_CASE("conformal cocycles have the frame structure") {
  ConformalParams params;
  params.frame = mat2(1, 0.5, 0, 1);
  const auto c = conformal_cocycle(cat_map(), params);
  const auto field =
      invariant_conformal_structure(c, ConformalStructure::identity(2), uniform_grid(Lattice::standard(2), 3));
  const Mat b = params.frame;
  const ConformalStructure expected(Mat((b * b.transpose()).inverse()));
  for (const auto& s : field.structures) CHECK(distance(s, expected) < 1e-7);
  CHECK(field.max_defect < 1e-8);
  // cond(B R B⁻¹) peaks at cond(B)².
  const double cond_b = condition_number(b);
  CHECK(field.max_distortion <= cond_b * cond_b * (1 + 1e-12));
  CHECK(field.max_distortion > 2);
}

TEST_CASE("orthogonal constants preserve the identity structure") {
  const auto c = constant_cocycle(cat_map(), Mat(rotation(1.0)));
  const auto field =
      invariant_conformal_structure(c, ConformalStructure::identity(2), uniform_grid(Lattice::standard(2), 2));
  for (const auto& s : field.structures) CHECK(distance(s, ConformalStructure::identity(2)) < 1e-12);
}

TEST_CASE("the example is not quasiconformal on long windows") {
  const auto ex = example46(example_base(), 0.1);
  CHECK(code_of([&] {
          invariant_conformal_structure(ex.torus, ConformalStructure::identity(2),
                                        uniform_grid(Lattice::standard(2), 4));
        }) == ErrorCode::NotQuasiconformalOnWindow);
}

TEST_CASE("coboundary of a known transfer function") {
  const auto f = cat_map();
  const auto g = [](const BaseVec& x) { return 2 + std::cos(2 * kPi * x(0)); };
  const auto a = [&](const BaseVec& x) { return 2 * g(f.step(TorusPoint::from_coords(f.lattice(), x)).coords()) / g(x); };
  const auto r = coboundary_solve(a, f, tp(0.123, 0.456));
  CHECK(r.c == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(r.periodic_gap < 1e-12);
  const double ratio0 = std::exp(r.log_psi[0]) / g(r.orbit[0].coords());
  double worst = 0;
  for (std::size_t k = 0; k < r.orbit.size(); ++k)
    worst = std::max(worst, std::abs(std::exp(r.log_psi[k]) / g(r.orbit[k].coords()) / ratio0 - 1));
  CHECK(worst < 1e-6);
  CHECK(coboundary_roundtrip_defect(a, r) < 1e-9);
  // |∇ log g| ≤ 2π/√3 bounds the Hölder slope.
  CHECK(r.holder_pairs > 0);
  CHECK(r.holder_constant < 2 * kPi / std::sqrt(3.0) + 0.1);
}

TEST_CASE("constant coboundaries give a flat transfer function") {
  const auto f = cat_map();
  CoboundaryOptions opt;
  opt.anchor = 3.0;
  opt.orbit_length = 1000;
  const auto r = coboundary_solve([](const BaseVec&) { return 1.7; }, f, tp(0.2, 0.7), opt);
  CHECK(r.c == doctest::Approx(std::log(1.7)));
  for (double l : r.log_psi) CHECK(std::abs(l - std::log(3.0)) < 1e-12);
}

TEST_CASE("periodic data obstruct non-coboundaries") {
  const auto f = cat_map();
  const auto a = [](const BaseVec& x) { return 1 + 0.1 * std::cos(2 * kPi * x(0)); };
  CHECK(code_of([&] { coboundary_solve(a, f, tp(0.2, 0.7)); }) == ErrorCode::ObstructionNonzero);
  const auto r = coboundary_analysis(a, f, tp(0.2, 0.7));
  CHECK(r.obstructed);
  CHECK(r.periodic_gap > 0.01);
}

TEST_CASE("flag normalization of a scaled shear") {
  const auto c = constant_cocycle(cat_map(), mat2(2, 2, 0, 2));
  const auto e1 = [](const BaseVec&) { return Vec2(1, 0); };
  CoboundaryOptions opt;
  opt.orbit_length = 1000;
  const auto fs = flag_factor_normalize(c, e1, uniform_grid(Lattice::standard(2), 4), opt);
  for (std::size_t i = 0; i < fs.grid.size(); ++i) {
    CHECK(fs.a1[i] == doctest::Approx(2));
    CHECK(fs.a2[i] == doctest::Approx(2));
    CHECK(fs.phi[i] == doctest::Approx(0.5));
  }
  CHECK(fs.line_defect < 1e-15);
  CHECK(fs.factor_defect < 1e-12);
}

TEST_CASE("unequal factor rates are an obstruction") {
  const auto c = constant_cocycle(cat_map(), mat2(2, 0, 0, 1));
  const auto e1 = [](const BaseVec&) { return Vec2(1, 0); };
  CoboundaryOptions opt;
  opt.orbit_length = 1000;
  const auto fs = flag_factor_analysis(c, e1, uniform_grid(Lattice::standard(2), 2), opt);
  CHECK(fs.obstructed);
  CHECK(fs.log_ratio_constant == doctest::Approx(-std::log(2.0)));
  CHECK(code_of([&] { flag_factor_normalize(c, e1, uniform_grid(Lattice::standard(2), 2), opt); }) ==
        ErrorCode::ObstructionNonzero);
}

TEST_CASE("example flag on the cover is obstructed at periodic points") {
  const auto ex = example46(example_base(), 0.1);
  const auto line = [&](const BaseVec& x) { return Vec2(ex.cbar(x).col(0)); };
  CoboundaryOptions opt;
  opt.orbit_length = 1'000'000;
  const auto fs = flag_factor_analysis(ex.cover4, line, uniform_grid(ex.cover4.base().lattice(), 4), opt);
  CHECK(fs.line_defect < 1e-12);
  for (std::size_t i = 0; i < fs.grid.size(); ++i) {
    CHECK(fs.a1[i] == doctest::Approx(ex.a(fs.grid[i].coords())).epsilon(1e-12));
    CHECK(fs.a2[i] == doctest::Approx(ex.b(fs.grid[i].coords())).epsilon(1e-12));
  }
  CHECK(fs.obstructed);
  CHECK(fs.ratio.periodic_gap > 0.1);
  CHECK(std::abs(fs.ratio.birkhoff_mean) < 1e-3);
}

TEST_CASE("polynomial growth exponents") {
  const auto grid = uniform_grid(Lattice::standard(2), 2);
  const auto ns = geometric_n_list(4, 12);
  CHECK(ns.front() == 16);
  CHECK(ns.back() == 4096);
  const auto shear = polynomial_growth_fit(constant_cocycle(cat_map(), mat2(1, 1, 0, 1)), grid, ns);
  CHECK(shear.norm_slope == doctest::Approx(1).epsilon(0.05));
  CHECK(shear.distortion_slope == doctest::Approx(2).epsilon(0.05));
  Mat j = Mat::Identity(3, 3);
  j(0, 1) = j(1, 2) = 1;
  const auto jordan = polynomial_growth_fit(constant_cocycle(cat_map(), j), grid, ns);
  CHECK(jordan.norm_slope == doctest::Approx(2).epsilon(0.05));
  const auto rot = polynomial_growth_fit(constant_cocycle(cat_map(), Mat(rotation(0.4))), grid, ns);
  CHECK(std::abs(rot.norm_slope) < 1e-12);
  CHECK(std::abs(rot.distortion_slope) < 1e-12);
  CHECK(code_of([&] { polynomial_growth_fit(constant_cocycle(cat_map(), j), grid, {8}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("projective images are K-Lipschitz") {
  const auto ex = example46(example_base(), 0.1);
  Rng rng(11);
  double worst = 0;
  for (int k = 0; k < 500; ++k) {
    const TorusPoint x = tp(rng.uniform(), rng.uniform());
    const long n = 1 + static_cast<long>(rng.uniform() * 30);
    const double xi = rng.uniform() * kPi, eta = rng.uniform() * kPi;
    const auto s = grassmann_lipschitz_check(ex.torus, x, n, xi, eta);
    CHECK(s.lhs <= s.rhs * (1 + 1e-9) + 1e-15);
    worst = std::max(worst, s.ratio);
  }
  CHECK(worst <= 1 + 1e-9);
  CHECK(worst > 0.1);
}
