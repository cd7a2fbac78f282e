#include "coclab/cocycle.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "coclab/error.hpp"
#include "coclab/random.hpp"

namespace coclab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRenormHigh = 1e30;
constexpr double kRenormLow = 1e-30;

void renormalize(Mat& m, double& log_scale) {
  const double s = m.cwiseAbs().maxCoeff();
  if (s > kRenormHigh || (s < kRenormLow && s > 0)) {
    m /= s;
    log_scale += std::log(s);
  }
}

}  // namespace

std::string_view to_string(CocycleKind kind) {
  switch (kind) {
    case CocycleKind::Constant: return "constant";
    case CocycleKind::Example46: return "example46";
    case CocycleKind::Example46Cover: return "example46_cover";
    case CocycleKind::Conformal: return "conformal";
    case CocycleKind::Expression: return "expression";
    case CocycleKind::Pullback: return "pullback";
  }
  return "unknown";
}

CocycleSpec::CocycleSpec(ToralAutomorphism base, int fiber_dim, double beta, CocycleKind kind, Eval eval,
                         std::string description)
    : base_(std::move(base)),
      fiber_dim_(fiber_dim),
      beta_(beta),
      kind_(kind),
      eval_(std::move(eval)),
      description_(std::move(description)) {
  if (fiber_dim_ < 1 || fiber_dim_ > kMaxFiberDim) {
    throw Error(ErrorCode::InvalidArgument, "fiber dimension must be in [1, " + std::to_string(kMaxFiberDim) + "]");
  }
  if (!(beta_ > 0 && beta_ <= 1)) throw Error(ErrorCode::InvalidArgument, "Hölder exponent must lie in (0, 1]");
  for (const auto& x : uniform_grid(base_.lattice(), base_.dim() == 2 ? 16 : 4)) {
    const Mat m = at(x);
    if (m.rows() != fiber_dim_ || m.cols() != fiber_dim_) {
      throw Error(ErrorCode::DimensionMismatch, "fiber map has wrong shape");
    }
    if (!(condition_number(m) < 1e12)) {
      throw Error(ErrorCode::SingularFiberMap, "fiber map is singular on the construction grid");
    }
  }
}

IterateResult iterate(const CocycleSpec& c, const TorusPoint& x, long n, const IterateOptions& opt) {
  if (std::abs(n) > opt.max_steps) {
    throw Error(ErrorCode::InvalidArgument, "|n| exceeds the configured iterate bound");
  }
  const int d = c.fiber_dim();
  const auto& f = c.base();
  IterateResult r;
  r.n = n;
  Mat prod = Mat::Identity(d, d);  // Fⁿ_x up to scale
  Mat inv = Mat::Identity(d, d);   // (Fⁿ_x)⁻¹ up to scale
  double prod_scale = 0, inv_scale = 0;
  TorusPoint p = x;
  if (n >= 0) {
    for (long k = 0; k < n; ++k) {
      const Mat fx = c.at(p);
      prod = fx * prod;
      inv = inv * checked_inverse(fx, opt.cond_cap);
      renormalize(prod, prod_scale);
      renormalize(inv, inv_scale);
      p = f.step(p);
    }
  } else {
    for (long k = 0; k < -n; ++k) {
      p = f.step_back(p);
      const Mat fx = c.at(p);
      prod = checked_inverse(fx, opt.cond_cap) * prod;
      inv = inv * fx;
      renormalize(prod, prod_scale);
      renormalize(inv, inv_scale);
    }
  }
  r.scaled = prod;
  r.log_scale = prod_scale;
  r.log_norm = std::log(spectral_norm(prod)) + prod_scale;
  r.log_conorm = -(std::log(spectral_norm(inv)) + inv_scale);
  return r;
}

Distortion quasiconformal_distortion(const CocycleSpec& c, const TorusPoint& x, long n,
                                     const IterateOptions& opt) {
  const IterateResult r = iterate(c, x, n, opt);
  const double log_k = std::max(0.0, r.log_distortion());
  return {std::exp(log_k), log_k};
}

FiberBunching fiber_bunching_margin(const CocycleSpec& c, const std::vector<TorusPoint>& grid, double beta,
                                    double contraction) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "fiber bunching grid is empty");
  const double nu = contraction > 0 ? contraction : c.base().nu();
  const double nu_beta = std::pow(nu, beta);
  FiberBunching out{0.0, 0.0, grid.front()};
  for (const auto& x : grid) {
    const double m = condition_number(c.at(x)) * nu_beta;
    if (m > out.margin) {
      out.margin = m;
      out.worst = x;
    }
  }
  out.theta = out.margin;
  return out;
}

double holder_constant(const CocycleSpec& c, int samples, std::uint64_t seed, double max_dist) {
  Rng rng(seed);
  const auto& lattice = c.base().lattice();
  const int d = lattice.dim();
  double worst = 0;
  for (int s = 0; s < samples; ++s) {
    BaseVec xc(d), dir(d);
    for (int i = 0; i < d; ++i) {
      xc(i) = lattice.periods[i] * rng.uniform();
      dir(i) = rng.normal();
    }
    const double r = max_dist * std::pow(10.0, -3.0 * rng.uniform());
    const TorusPoint x = TorusPoint::from_coords(lattice, xc);
    const TorusPoint y = x.translated(dir.normalized() * r);
    const double dist = torus_dist(x, y);
    if (dist == 0) continue;
    worst = std::max(worst, spectral_norm(c.at(x) - c.at(y)) / std::pow(dist, c.beta()));
  }
  return worst;
}

CocycleSpec constant_cocycle(const ToralAutomorphism& base, const Mat& a, double beta) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "constant cocycle needs a square matrix");
  return CocycleSpec(base, static_cast<int>(a.rows()), beta, CocycleKind::Constant,
                     [a](const BaseVec&) { return a; }, "constant");
}

CocycleSpec conformal_cocycle(const ToralAutomorphism& base, const ConformalParams& params, double beta) {
  if (!(std::abs(params.scale_amplitude) < 1)) {
    throw Error(ErrorCode::InvalidArgument, "conformal scale amplitude must be below 1 in modulus");
  }
  if (base.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "conformal example needs a 2-torus");
  const Mat2 frame = params.frame;
  if (std::abs(frame.determinant()) < 1e-12) throw Error(ErrorCode::SingularMatrix, "conformal frame is singular");
  const Mat2 frame_inv = frame.inverse();
  const double amp = params.scale_amplitude, offset = params.rotation_offset;
  return CocycleSpec(
      base, 2, beta, CocycleKind::Conformal,
      [=](const BaseVec& x) -> Mat {
        const double s = 1.0 + amp * std::cos(2 * kPi * x(1));
        return Mat(s * frame * rotation(2 * kPi * x(0) + offset) * frame_inv);
      },
      "conformal");
}

CocycleSpec expression_cocycle(const ToralAutomorphism& base, const std::vector<std::vector<Expression>>& entries,
                               double beta) {
  const auto d = static_cast<int>(entries.size());
  for (const auto& row : entries) {
    if (static_cast<int>(row.size()) != d) throw Error(ErrorCode::DimensionMismatch, "expression matrix not square");
  }
  if (base.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "expressions are written in x1, x2");
  return CocycleSpec(
      base, d, beta, CocycleKind::Expression,
      [entries, d](const BaseVec& x) {
        Mat m(d, d);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) m(i, j) = entries[i][j].eval(x(0), x(1));
        return m;
      },
      "expression");
}

CocycleSpec pullback(const CocycleSpec& c, const CoverLift& lift) {
  const auto periods = lift.base_lattice.periods;
  return CocycleSpec(
      lift.cover, c.fiber_dim(), c.beta(), CocycleKind::Pullback,
      [c, periods](const BaseVec& x) {
        BaseVec y = x;
        for (int i = 0; i < y.size(); ++i) y(i) = std::fmod(y(i), static_cast<double>(periods[i]));
        return c.at(y);
      },
      "pullback of " + c.description());
}

double Example46::a(const BaseVec& x) const { return 1.0 + epsilon * std::cos(kPi * x(0)); }

double Example46::b(const BaseVec& x) const { return 1.0 - epsilon * std::cos(kPi * x(0)); }

Mat2 Example46::cbar(const BaseVec& x) const { return rotation(0.5 * kPi * x(0)); }

Mat2 Example46::symmetric_part(const BaseVec& x) const {
  const double c2 = std::cos(2 * kPi * x(0)), s2 = std::sin(2 * kPi * x(0));
  Mat2 m;
  m << 2 + epsilon * (1 + c2), epsilon * s2, epsilon * s2, 2 - epsilon * (1 + c2);
  return 0.5 * m;
}

Example46 example46(const ToralAutomorphism& base, double epsilon) {
  if (base.dim() != 2 || base.lattice() != Lattice::standard(2)) {
    throw Error(ErrorCode::InvalidArgument, "example base must act on R²/Z²");
  }
  if (!(epsilon >= 0 && epsilon < 1)) throw Error(ErrorCode::EpsilonOutOfRange, "epsilon must lie in [0, 1)");
  const IntMat& m = base.matrix();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const std::int64_t r = m(i, j) - (i == j ? 1 : 0);
      if (r % 4 != 0) throw Error(ErrorCode::CongruenceViolated, "base matrix is not congruent to Id mod 4");
    }

  const double row0 = static_cast<double>(m(0, 0) - 1), row1 = static_cast<double>(m(0, 1));
  const double m00 = static_cast<double>(m(0, 0)), m01 = static_cast<double>(m(0, 1));
  const double eps = epsilon;

  auto symmetric = [eps](double x1) {
    const double c2 = std::cos(2 * kPi * x1), s2 = std::sin(2 * kPi * x1);
    Mat2 s;
    s << 2 + eps * (1 + c2), eps * s2, eps * s2, 2 - eps * (1 + c2);
    return Mat2(0.5 * s);
  };

  // On T²: rotation by (π/2)·((M − Id) row 1 · x) times C̄ĀC̄⁻¹.
  CocycleSpec torus(
      base, 2, 1.0, CocycleKind::Example46,
      [=](const BaseVec& x) -> Mat {
        return Mat(rotation(0.5 * kPi * (row0 * x(0) + row1 * x(1))) * symmetric(x(0)));
      },
      "example46");

  CoverLift lift4 = cover_lift(base, Lattice{{4, 1}});
  CoverLift lift2 = cover_lift(base, Lattice{{2, 1}});

  // On the 4-cover: C̄(f̄x)·Ā(x)·C̄(x)⁻¹ with f̄x reduced mod 4Z × Z.
  CocycleSpec cover4(
      lift4.cover, 2, 1.0, CocycleKind::Example46Cover,
      [=](const BaseVec& x) -> Mat {
        double fx1 = std::fmod(m00 * x(0) + m01 * x(1), 4.0);
        if (fx1 < 0) fx1 += 4.0;
        const double a = 1.0 + eps * std::cos(kPi * x(0));
        const double b = 1.0 - eps * std::cos(kPi * x(0));
        const Mat2 abar = Eigen::Vector2d(a, b).asDiagonal();
        return Mat(rotation(0.5 * kPi * fx1) * abar * rotation(0.5 * kPi * x(0)).transpose());
      },
      "example46 on the 4-cover");

  CocycleSpec cover2 = pullback(torus, lift2);
  return Example46{epsilon, std::move(torus), std::move(cover4), std::move(cover2), std::move(lift4),
                   std::move(lift2)};
}

}  // namespace coclab
