#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "coclab/lyapunov.hpp"
#include "coclab/random.hpp"
#include "test_support.hpp"

using namespace coclab;
using testing::code_of;
using testing::mat2;
using testing::tp;

namespace {

ToralAutomorphism cat_map() { return make_automorphism(2, 1, 1, 1); }
ToralAutomorphism example_base() { return make_automorphism(41, 32, 32, 25); }

// ∫₀¹ log(1 + ε cos 2πt) dt by the trapezoid rule, spectrally accurate for
// periodic integrands.
double log_average_quadrature(double eps, int nodes = 4096) {
  double sum = 0;
  for (int k = 0; k < nodes; ++k) sum += std::log(1 + eps * std::cos(2 * std::numbers::pi * k / nodes));
  return sum / nodes;
}

}  // namespace

TEST_CASE("quadrature oracle matches the closed form") {
  CHECK(log_average_quadrature(0.1) == doctest::Approx(std::log((1 + std::sqrt(1 - 0.01)) / 2)).epsilon(1e-12));
  CHECK(log_average_quadrature(0.1) == doctest::Approx(-0.0025094).epsilon(1e-4));
}

TEST_CASE("top and bottom exponents") {
  const auto f = cat_map();
  const auto diag = constant_cocycle(f, mat2(2, 0, 0, 0.5));
  for (long n : {1L, 10L, 1000L}) {
    const auto e = top_bottom_exponents(diag, tp(0.2, 0.3), n);
    CHECK(e.top == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(e.bottom == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  }

  // Scalar times rotation: both exponents equal the Birkhoff mean of log a.
  ConformalParams params;
  params.scale_amplitude = 0.3;
  const auto conf = conformal_cocycle(f, params);
  const TorusPoint x = tp(0.123, 0.456);
  const long n = 2000;
  double birkhoff = 0;
  TorusPoint p = x;
  for (long k = 0; k < n; ++k) {
    birkhoff += std::log(1 + 0.3 * std::cos(2 * std::numbers::pi * p.coord(1)));
    p = f.step(p);
  }
  birkhoff /= n;
  const auto e = top_bottom_exponents(conf, x, n);
  CHECK(e.top == doctest::Approx(birkhoff).epsilon(1e-10));
  CHECK(e.bottom == doctest::Approx(birkhoff).epsilon(1e-10));
}

TEST_CASE("example exponents agree almost everywhere") {
  const auto ex = example46(example_base(), 0.1);
  const double oracle = log_average_quadrature(0.1);
  const auto e = top_bottom_exponents(ex.torus, tp(0.3141, 0.2718), 1'000'000);
  CHECK(std::abs(e.top - oracle) < 5e-3);
  CHECK(std::abs(e.bottom - oracle) < 5e-3);
  CHECK(e.top >= e.bottom);
  CHECK(std::abs(e.top - e.bottom) < 5e-3);
}

TEST_CASE("full spectrum") {
  const auto f = cat_map();
  Mat a = Mat::Zero(3, 3);
  a.diagonal() << 3, 2, 1;
  const auto s = full_spectrum(constant_cocycle(f, a), tp(0.1, 0.1), 50);
  REQUIRE(s.exponents.size() == 3);
  CHECK(s.exponents[0] == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(s.exponents[1] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(std::abs(s.exponents[2]) < 1e-14);

  const auto ex = example46(example_base(), 0.3);
  const auto t = full_spectrum(ex.torus, tp(0.77, 0.11), 20000);
  double sum = 0;
  for (double v : t.exponents) sum += v;
  CHECK(std::abs(sum - t.log_det_rate) < 1e-8);
  CHECK(t.exponents[0] >= t.exponents[1]);

  // Top and bottom agree with the norm-based estimate on simple cocycles.
  const auto diag = constant_cocycle(f, mat2(2, 0, 0, 0.5));
  const auto sd = full_spectrum(diag, tp(0.5, 0.25), 10000);
  const auto tb = top_bottom_exponents(diag, tp(0.5, 0.25), 10000);
  CHECK(std::abs(sd.exponents.front() - tb.top) < 1e-6);
  CHECK(std::abs(sd.exponents.back() - tb.bottom) < 1e-6);

  // History columns: logK/n = top − bottom, rows at 1, 2, 4, … and n.
  CHECK(t.convergence_history.front().n == 1);
  CHECK(t.convergence_history.back().n == 20000);
  for (const auto& row : t.convergence_history) CHECK(row.log_k_over_n == doctest::Approx(row.top - row.bottom));
  std::ostringstream csv;
  write_history_csv(csv, t.convergence_history);
  CHECK(csv.str().rfind("n,lambda_plus,lambda_minus,logK_over_n\n", 0) == 0);
}

TEST_CASE("periodic exponents at the fixed point") {
  const auto start = std::chrono::steady_clock::now();
  const auto ex = example46(example_base(), 0.1);
  const RationalPoint zero{{0, 0}, 1};
  const auto e = periodic_exponents(ex.torus, zero, 1);
  CHECK(std::abs(e[0] - std::log(1.1)) < 1e-12);
  CHECK(std::abs(e[1] - std::log(0.9)) < 1e-12);
  CHECK(e[0] == doctest::Approx(0.0953102).epsilon(1e-6));
  CHECK(e[1] == doctest::Approx(-0.1053605).epsilon(1e-6));
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));

  CHECK(code_of([&] { periodic_exponents(ex.torus, RationalPoint{{1, 0}, 3}, 1); }) == ErrorCode::NotPeriodic);
}

TEST_CASE("periodic exponents of constant and conformal cocycles") {
  const auto f = cat_map();
  const auto c = constant_cocycle(f, mat2(3, 1, 0, 0.5));
  const auto conf = conformal_cocycle(f);
  for (int n = 1; n <= 3; ++n) {
    for (const auto& p : periodic_points(f, n)) {
      const auto e = periodic_exponents(c, p, n);
      CHECK(e[0] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
      CHECK(e[1] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
      const auto g = periodic_exponents(conf, p, n);
      CHECK(std::abs(g[0] - g[1]) < 1e-12);
    }
  }
}

TEST_CASE("periodic exponents are constant along the orbit") {
  const auto ex = example46(example_base(), 0.2);
  const auto& f = ex.torus.base();
  int checked = 0;
  for (const auto& p : periodic_points(f, 2)) {
    if (checked++ > 40) break;
    const auto e = periodic_exponents(ex.torus, p, 2);
    const auto e2 = periodic_exponents(ex.torus, f.step(p), 2);
    CHECK(std::abs(e[0] - e2[0]) < 1e-9);
    CHECK(std::abs(e[1] - e2[1]) < 1e-9);
  }
}

TEST_CASE("one exponent test") {
  const auto f = cat_map();
  const auto conf = one_exponent_test(conformal_cocycle(f), 4, 1e-9);
  CHECK(conf.pass);
  CHECK(conf.gap < 1e-12);

  const auto uni = one_exponent_test(constant_cocycle(f, mat2(1, 1, 0, 1)), 4, 1e-9);
  CHECK(uni.pass);
  CHECK(uni.gap < 1e-9);

  const auto ex = example46(example_base(), 0.1);
  const auto r = one_exponent_test(ex.torus, 1, 1e-6);
  CHECK_FALSE(r.pass);
  CHECK(r.gap == doctest::Approx(std::log(1.1 / 0.9)).epsilon(1e-12));
  CHECK(r.gap == doctest::Approx(0.2007).epsilon(1e-3));
  CHECK(r.worst.num == std::vector<std::int64_t>{0, 0});
  CHECK(r.worst_period == 1);
}
