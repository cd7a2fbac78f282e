#include "coclab/torus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

#include "coclab/error.hpp"

namespace coclab {

namespace {

constexpr long double kScale = 288230376151711744.0L;  // 2^58

int log2_exact(int p) {
  if (p <= 0 || p > 64 || !std::has_single_bit(static_cast<unsigned>(p))) {
    throw Error(ErrorCode::UnsupportedLattice,
                "lattice period " + std::to_string(p) + " is not a power of two in [1, 64]");
  }
  return std::countr_zero(static_cast<unsigned>(p));
}

std::uint64_t mask_for(int log2_period) {
  const int bits = TorusPoint::kFracBits + log2_period;
  return bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
}

// Fixed-point image of q ∈ [0, p).
std::uint64_t to_fixed(long double q, std::uint64_t mask) {
  const long double scaled = std::nearbyintl(q * kScale);
  if (scaled >= 18446744073709551616.0L) return 0;
  return static_cast<std::uint64_t>(scaled) & mask;
}

long double reduce(long double v, int period) {
  long double q = v - period * std::floor(v / period);
  if (q >= period) q -= period;
  if (q < 0) q += period;
  return q;
}

// Signed representative of a masked difference.
std::int64_t signed_wrap(std::uint64_t d, int log2_period) {
  const int shift = 64 - (TorusPoint::kFracBits + log2_period);
  return static_cast<std::int64_t>(d << shift) >> shift;
}

using UMat = std::vector<std::uint64_t>;  // row-major, wrapping arithmetic mod 2^64

UMat to_umat(const IntMat& m) {
  const auto d = m.rows();
  UMat u(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) u[i * d + j] = static_cast<std::uint64_t>(m(i, j));
  return u;
}

UMat umat_mul(const UMat& a, const UMat& b, int d) {
  UMat c(d * d, 0);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < d; ++j) c[i * d + j] += a[i * d + k] * b[k * d + j];
  return c;
}

UMat umat_pow(const IntMat& m, unsigned long n) {
  const int d = static_cast<int>(m.rows());
  UMat result(d * d, 0);
  for (int i = 0; i < d; ++i) result[i * d + i] = 1;
  UMat base = to_umat(m);
  while (n > 0) {
    if (n & 1) result = umat_mul(result, base, d);
    n >>= 1;
    if (n > 0) base = umat_mul(base, base, d);
  }
  return result;
}

TorusPoint act(const UMat& m, const TorusPoint& x) {
  const int d = x.dim();
  std::array<std::uint64_t, kMaxBaseDim> out{};
  for (int i = 0; i < d; ++i) {
    std::uint64_t acc = 0;
    for (int j = 0; j < d; ++j) acc += m[i * d + j] * x.raw(j);
    out[i] = acc;
  }
  return TorusPoint::from_raw(x.log2_periods(), d, out);
}

// Image of a lattice period vector stays in the lattice: M_ij p_j ≡ 0 (mod p_i).
bool preserves_lattice(const IntMat& m, const Lattice& lattice) {
  const auto d = m.rows();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const std::int64_t v = m(i, j) * lattice.periods[j];
      if (v % lattice.periods[i] != 0) return false;
    }
  return true;
}

}  // namespace

Lattice Lattice::standard(int dim) { return Lattice{std::vector<int>(dim, 1)}; }

int Lattice::shortest_period() const { return *std::min_element(periods.begin(), periods.end()); }

std::string Lattice::id() const {
  std::string s;
  for (std::size_t i = 0; i < periods.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(periods[i]) + "Z";
  }
  return s;
}

TorusPoint TorusPoint::from_coords(const Lattice& lattice, const BaseVec& coords) {
  if (coords.size() != lattice.dim() || lattice.dim() > kMaxBaseDim || lattice.dim() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "point dimension does not match lattice");
  }
  TorusPoint p;
  p.dim_ = lattice.dim();
  for (int i = 0; i < p.dim_; ++i) {
    p.log2_period_[i] = static_cast<std::uint8_t>(log2_exact(lattice.periods[i]));
    p.raw_[i] = to_fixed(reduce(coords(i), lattice.periods[i]), p.mask(i));
  }
  return p;
}

TorusPoint TorusPoint::origin(const Lattice& lattice) {
  return from_coords(lattice, BaseVec::Zero(lattice.dim()));
}

TorusPoint TorusPoint::from_raw(const std::array<std::uint8_t, kMaxBaseDim>& log2_periods, int dim,
                                const std::array<std::uint64_t, kMaxBaseDim>& raw) {
  TorusPoint p;
  p.dim_ = dim;
  p.log2_period_ = log2_periods;
  for (int i = 0; i < dim; ++i) p.raw_[i] = raw[i] & p.mask(i);
  return p;
}

std::uint64_t TorusPoint::mask(int i) const { return mask_for(log2_period_[i]); }

double TorusPoint::coord(int i) const {
  return static_cast<double>(static_cast<long double>(raw_[i]) / kScale);
}

BaseVec TorusPoint::coords() const {
  BaseVec v(dim_);
  for (int i = 0; i < dim_; ++i) v(i) = coord(i);
  return v;
}

bool TorusPoint::same_lattice(const TorusPoint& other) const {
  return dim_ == other.dim_ && log2_period_ == other.log2_period_;
}

TorusPoint TorusPoint::translated(const BaseVec& v) const {
  if (v.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "translation dimension");
  TorusPoint p = *this;
  for (int i = 0; i < dim_; ++i) {
    p.raw_[i] = (p.raw_[i] + to_fixed(reduce(v(i), period(i)), mask(i))) & mask(i);
  }
  return p;
}

BaseVec displacement(const TorusPoint& x, const TorusPoint& y) {
  if (!x.same_lattice(y)) throw Error(ErrorCode::DimensionMismatch, "points on different lattices");
  BaseVec d(x.dim());
  for (int i = 0; i < x.dim(); ++i) {
    const std::uint64_t diff = (y.raw(i) - x.raw(i)) & x.mask(i);
    d(i) = static_cast<double>(static_cast<long double>(signed_wrap(diff, x.log2_periods()[i])) / kScale);
  }
  return d;
}

double torus_dist(const TorusPoint& x, const TorusPoint& y) { return displacement(x, y).norm(); }

BaseVec RationalPoint::coords() const {
  BaseVec v(static_cast<Eigen::Index>(num.size()));
  for (std::size_t i = 0; i < num.size(); ++i) {
    v(i) = static_cast<double>(static_cast<long double>(num[i]) / static_cast<long double>(den));
  }
  return v;
}

TorusPoint RationalPoint::to_point(const Lattice& lattice) const {
  if (static_cast<int>(num.size()) != lattice.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "rational point dimension");
  }
  BaseVec v(lattice.dim());
  std::array<std::uint8_t, kMaxBaseDim> logs{};
  std::array<std::uint64_t, kMaxBaseDim> raw{};
  for (int i = 0; i < lattice.dim(); ++i) {
    logs[i] = static_cast<std::uint8_t>(log2_exact(lattice.periods[i]));
    // num/den · 2^58, rounded, computed in 128-bit integers.
    const unsigned __int128 scaled = (static_cast<unsigned __int128>(num[i]) << TorusPoint::kFracBits);
    const unsigned __int128 q = (scaled + static_cast<unsigned __int128>(den) / 2) / static_cast<unsigned __int128>(den);
    raw[i] = static_cast<std::uint64_t>(q);
  }
  return TorusPoint::from_raw(logs, lattice.dim(), raw);
}

TorusPoint ToralAutomorphism::step(const TorusPoint& x) const {
  const int d = x.dim();
  std::array<std::uint64_t, kMaxBaseDim> out{};
  for (int i = 0; i < d; ++i) {
    std::uint64_t acc = 0;
    for (int j = 0; j < d; ++j) acc += static_cast<std::uint64_t>(matrix_(i, j)) * x.raw(j);
    out[i] = acc;
  }
  return TorusPoint::from_raw(x.log2_periods(), d, out);
}

TorusPoint ToralAutomorphism::step_back(const TorusPoint& x) const {
  const int d = x.dim();
  std::array<std::uint64_t, kMaxBaseDim> out{};
  for (int i = 0; i < d; ++i) {
    std::uint64_t acc = 0;
    for (int j = 0; j < d; ++j) acc += static_cast<std::uint64_t>(inverse_(i, j)) * x.raw(j);
    out[i] = acc;
  }
  return TorusPoint::from_raw(x.log2_periods(), d, out);
}

RationalPoint ToralAutomorphism::step(const RationalPoint& x) const {
  const int d = dim();
  RationalPoint out{std::vector<std::int64_t>(d), x.den};
  for (int i = 0; i < d; ++i) {
    const __int128 modulus = static_cast<__int128>(lattice_.periods[i]) * x.den;
    __int128 acc = 0;
    for (int j = 0; j < d; ++j) acc += static_cast<__int128>(matrix_(i, j)) * x.num[j];
    acc %= modulus;
    if (acc < 0) acc += modulus;
    out.num[i] = static_cast<std::int64_t>(acc);
  }
  return out;
}

ToralAutomorphism make_automorphism(const IntMat& matrix, const Lattice& lattice, double leaf_radius) {
  const auto d = matrix.rows();
  if (d != matrix.cols() || d != lattice.dim() || d < 1 || d > kMaxBaseDim) {
    throw Error(ErrorCode::DimensionMismatch, "matrix and lattice dimensions differ");
  }
  for (int p : lattice.periods) log2_exact(p);
  const std::int64_t det = int_det(matrix);
  if (det != 1 && det != -1) {
    throw Error(ErrorCode::NotUnimodular, "|det M| = " + std::to_string(std::abs(det)) + " != 1");
  }
  IntMat inverse = int_adjugate(matrix) * det;  // det = ±1 ⇒ M⁻¹ = det·adj(M)
  if (!preserves_lattice(matrix, lattice) || !preserves_lattice(inverse, lattice)) {
    throw Error(ErrorCode::LatticeNotInvariant, "matrix does not preserve lattice " + lattice.id());
  }

  ToralAutomorphism f;
  f.matrix_ = matrix;
  f.inverse_ = inverse;
  f.lattice_ = lattice;
  f.leaf_radius_ = leaf_radius > 0 ? leaf_radius : 0.25 * lattice.shortest_period();

  if (d == 2) {
    const double tr = static_cast<double>(matrix(0, 0) + matrix(1, 1));
    if (std::abs(tr) <= 2.0) {
      throw Error(ErrorCode::NotHyperbolic, "|trace| = " + std::to_string(std::abs(tr)) + " <= 2");
    }
    const double disc = std::sqrt(tr * tr - 4.0 * static_cast<double>(det));
    const double big = 0.5 * (std::abs(tr) + disc) * (tr < 0 ? -1.0 : 1.0);
    f.lambda_u_ = big;
    f.lambda_s_ = static_cast<double>(det) / big;
    auto eigvec = [&](double lambda) {
      const double a = static_cast<double>(matrix(0, 0)), b = static_cast<double>(matrix(0, 1));
      const double c = static_cast<double>(matrix(1, 0)), dd = static_cast<double>(matrix(1, 1));
      BaseVec v(2);
      // Pick the better-conditioned row of (M − λ) for the null vector.
      if (std::abs(b) + std::abs(lambda - a) >= std::abs(c) + std::abs(lambda - dd)) {
        v << b, lambda - a;
      } else {
        v << lambda - dd, c;
      }
      v.normalize();
      if (v(0) < 0 || (v(0) == 0 && v(1) < 0)) v = -v;
      return v;
    };
    f.v_u_ = eigvec(f.lambda_u_);
    f.v_s_ = eigvec(f.lambda_s_);
    f.nu_ = std::abs(f.lambda_s_);
    f.nu_hat_ = 1.0 / std::abs(f.lambda_u_);
    Mat basis(2, 2);
    basis << f.v_s_(0), f.v_u_(0), f.v_s_(1), f.v_u_(1);
    f.eigenbasis_cond_ = condition_number(basis);
  } else {
    Eigen::MatrixXd md = matrix.cast<double>();
    Eigen::EigenSolver<Eigen::MatrixXd> es(md, false);
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double m = std::abs(es.eigenvalues()(i));
      if (std::abs(m - 1.0) < 1e-9) throw Error(ErrorCode::NotHyperbolic, "eigenvalue on the unit circle");
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    if (lo >= 1.0 || hi <= 1.0) throw Error(ErrorCode::NotHyperbolic, "no contracting or expanding direction");
    f.nu_ = lo < 1.0 ? lo : 0;
    f.nu_hat_ = 1.0 / hi;
  }
  return f;
}

ToralAutomorphism make_automorphism(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d,
                                    const Lattice& lattice) {
  IntMat m(2, 2);
  m << a, b, c, d;
  return make_automorphism(m, lattice);
}

TorusPoint apply(const ToralAutomorphism& f, const TorusPoint& x, long n) {
  if (x.dim() != f.dim()) throw Error(ErrorCode::DimensionMismatch, "point dimension");
  if (n == 0) return x;
  if (n == 1) return f.step(x);
  if (n == -1) return f.step_back(x);
  const UMat power = n > 0 ? umat_pow(f.matrix(), static_cast<unsigned long>(n))
                           : umat_pow(f.inverse_matrix(), static_cast<unsigned long>(-n));
  return act(power, x);
}

namespace {

void require_planar(const ToralAutomorphism& f) {
  if (f.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "leaf operations need a 2-torus");
}

}  // namespace

TorusPoint stable_point(const ToralAutomorphism& f, const TorusPoint& x, double t) {
  require_planar(f);
  if (std::abs(t) > f.leaf_radius()) {
    throw Error(ErrorCode::LeafRadiusExceeded,
                "|t| = " + std::to_string(std::abs(t)) + " > r = " + std::to_string(f.leaf_radius()));
  }
  return x.translated(t * f.v_s());
}

TorusPoint unstable_point(const ToralAutomorphism& f, const TorusPoint& x, double t) {
  require_planar(f);
  if (std::abs(t) > f.leaf_radius()) {
    throw Error(ErrorCode::LeafRadiusExceeded,
                "|t| = " + std::to_string(std::abs(t)) + " > r = " + std::to_string(f.leaf_radius()));
  }
  return x.translated(t * f.v_u());
}

Vec2 leaf_coordinates(const ToralAutomorphism& f, const TorusPoint& x, const TorusPoint& y) {
  require_planar(f);
  const BaseVec delta = displacement(x, y);
  Mat2 basis;
  basis << f.v_s()(0), f.v_u()(0), f.v_s()(1), f.v_u()(1);
  return basis.partialPivLu().solve(Vec2(delta(0), delta(1)));
}

std::vector<Leg> su_path(const ToralAutomorphism& f, const TorusPoint& x, const TorusPoint& y) {
  const Vec2 su = leaf_coordinates(f, x, y);
  if (std::abs(su(0)) > f.leaf_radius() || std::abs(su(1)) > f.leaf_radius()) {
    throw Error(ErrorCode::OutsideProductChart, "points are not in one product chart");
  }
  const TorusPoint corner = x.translated(su(0) * f.v_s());
  return {Leg{LeafType::Stable, x, corner, su(0)}, Leg{LeafType::Unstable, corner, y, su(1)}};
}

std::int64_t periodic_point_count(const ToralAutomorphism& f, int period) {
  if (period < 1) throw Error(ErrorCode::InvalidArgument, "period must be >= 1");
  try {
    IntMat a = int_pow(f.matrix(), period);
    a -= IntMat::Identity(f.dim(), f.dim());
    return std::abs(int_det(a));
  } catch (const Error&) {
    throw Error(ErrorCode::TooManyPeriodicPoints, "period " + std::to_string(period) + " count overflows");
  }
}

std::vector<RationalPoint> periodic_points(const ToralAutomorphism& f, int period, std::int64_t cap) {
  const std::int64_t count = periodic_point_count(f, period);
  if (count > cap) {
    throw Error(ErrorCode::TooManyPeriodicPoints,
                std::to_string(count) + " points of period " + std::to_string(period) + " exceed cap " +
                    std::to_string(cap));
  }
  const int d = f.dim();
  const auto& p = f.lattice().periods;
  // Solutions of (Mⁿ − Id)x ∈ L. With x = P·u, u ∈ R^d/Z^d, they are
  // B⁻¹Z^d / Z^d for the integer matrix B = P⁻¹(Mⁿ − Id)P, i.e. the
  // subgroup of (Z/|det B|)^d generated by the columns of ±adj(B).
  IntMat a = int_pow(f.matrix(), period) - IntMat::Identity(d, d);
  IntMat b(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) b(i, j) = a(i, j) * p[j] / p[i];
  const std::int64_t det = int_det(b);
  const std::int64_t m = std::abs(det);
  const IntMat adj = int_adjugate(b);
  const std::int64_t sign = det < 0 ? -1 : 1;

  auto mod = [m](__int128 v) {
    v %= m;
    if (v < 0) v += m;
    return static_cast<std::int64_t>(v);
  };
  std::vector<std::vector<std::int64_t>> gens(d, std::vector<std::int64_t>(d));
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) gens[j][i] = mod(static_cast<__int128>(sign) * adj(i, j));

  std::set<std::vector<std::int64_t>> seen;
  std::deque<std::vector<std::int64_t>> queue;
  std::vector<std::int64_t> zero(d, 0);
  seen.insert(zero);
  queue.push_back(zero);
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (const auto& g : gens) {
      std::vector<std::int64_t> v(d);
      for (int i = 0; i < d; ++i) v[i] = mod(static_cast<__int128>(u[i]) + g[i]);
      if (seen.insert(v).second) queue.push_back(std::move(v));
    }
  }
  if (static_cast<std::int64_t>(seen.size()) != m) {
    throw Error(ErrorCode::InvalidArgument, "periodic point enumeration inconsistent with determinant");
  }
  std::vector<RationalPoint> points;
  points.reserve(seen.size());
  for (const auto& u : seen) {
    RationalPoint r{std::vector<std::int64_t>(d), m};
    for (int i = 0; i < d; ++i) r.num[i] = u[i] * p[i];
    points.push_back(std::move(r));
  }
  return points;
}

bool is_periodic(const ToralAutomorphism& f, const RationalPoint& p, int period) {
  RationalPoint q = p;
  for (int i = 0; i < period; ++i) q = f.step(q);
  return q == p;
}

TorusPoint CoverLift::project(const TorusPoint& x) const {
  std::array<std::uint8_t, kMaxBaseDim> logs{};
  for (int i = 0; i < base_lattice.dim(); ++i) {
    logs[i] = static_cast<std::uint8_t>(std::countr_zero(static_cast<unsigned>(base_lattice.periods[i])));
  }
  return TorusPoint::from_raw(logs, x.dim(), x.raw_words());
}

CoverLift cover_lift(const ToralAutomorphism& f, const Lattice& cover_lattice) {
  if (cover_lattice.dim() != f.dim()) throw Error(ErrorCode::DimensionMismatch, "cover lattice dimension");
  for (int i = 0; i < f.dim(); ++i) {
    if (cover_lattice.periods[i] % f.lattice().periods[i] != 0) {
      throw Error(ErrorCode::InvalidArgument, "cover lattice is not a sublattice");
    }
  }
  return CoverLift{make_automorphism(f.matrix(), cover_lattice, f.leaf_radius()), f.lattice()};
}

std::vector<TorusPoint> uniform_grid(const Lattice& lattice, int per_axis) {
  return uniform_grid(lattice, per_axis, 0.0);
}

std::vector<TorusPoint> uniform_grid(const Lattice& lattice, int per_axis, double offset) {
  if (per_axis < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least one point per axis");
  const int d = lattice.dim();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_axis);
  std::vector<TorusPoint> grid;
  grid.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    BaseVec c(d);
    std::size_t rest = idx;
    for (int i = d - 1; i >= 0; --i) {
      c(i) = lattice.periods[i] * (static_cast<double>(rest % per_axis) + offset) / per_axis;
      rest /= per_axis;
    }
    grid.push_back(TorusPoint::from_coords(lattice, c));
  }
  return grid;
}

}  // namespace coclab
