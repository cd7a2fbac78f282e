#include "coclab/holonomy.hpp"

#include <cmath>
#include <limits>

#include "coclab/error.hpp"
#include "coclab/random.hpp"

namespace coclab {

namespace {

// Increments smaller than this fraction of the running sum are round-off.
constexpr double kRoundoffFloor = 1e-15;

}  // namespace

HolonomySolver::HolonomySolver(const CocycleSpec& c, const HolonomyOptions& opt) : c_(c), opt_(opt) {
  if (c.base().dim() != 2) throw Error(ErrorCode::DimensionMismatch, "holonomies need a 2-torus base");
  const auto grid = uniform_grid(c.base().lattice(), opt.bunching_grid);
  const FiberBunching s = fiber_bunching_margin(c, grid, c.beta(), c.base().nu());
  const FiberBunching u = fiber_bunching_margin(c, grid, c.beta(), c.base().nu_hat());
  theta_s_ = s.theta * opt.theta_inflation;
  theta_u_ = u.theta * opt.theta_inflation;
  if (!(theta_s_ < 1.0) || !(theta_u_ < 1.0)) {
    throw Error(ErrorCode::NotFiberBunched, "bunching ratio " + std::to_string(std::max(theta_s_, theta_u_)) +
                                                " (with safety factor) is not below 1");
  }
}

HolonomyMap HolonomySolver::along_leaf(const TorusPoint& x, double t, LeafType leaf, double tol,
                                       int min_terms) const {
  const auto& f = c_.base();
  const int d = c_.fiber_dim();
  const bool stable_leaf = leaf == LeafType::Stable;
  const BaseVec dir = stable_leaf ? f.v_s() : f.v_u();
  const double rate = stable_leaf ? f.lambda_s() : 1.0 / f.lambda_u();
  const double theta = stable_leaf ? theta_s_ : theta_u_;
  const double dist_beta = std::pow(std::abs(t), c_.beta());

  HolonomyMap h;
  h.from = x;
  h.to = x.translated(t * dir);
  h.leaf = leaf;
  h.theta = theta;
  h.leaf_distance = t;
  h.matrix = Mat::Identity(d, d);
  if (t == 0.0) return h;

  // Maps along the directed orbit: F over f for stable leaves, F(f⁻¹·)⁻¹
  // over f⁻¹ for unstable ones.
  auto next_point = [&](const TorusPoint& p) { return stable_leaf ? f.step(p) : f.step_back(p); };
  auto fiber_map = [&](const TorusPoint& p, const TorusPoint& p_next) -> Mat {
    return stable_leaf ? c_.at(p) : checked_inverse(c_.at(p_next));
  };

  Mat fx = Mat::Identity(d, d);       // Fⁱ_x
  Mat fy_inv = Mat::Identity(d, d);   // (Fⁱ_y)⁻¹
  TorusPoint xi = x;
  double disp = t;
  double c5 = 0;
  for (int i = 0;; ++i) {
    if (i >= opt_.max_terms) {
      throw Error(ErrorCode::ToleranceUnreachable,
                  "tail bound still above " + std::to_string(tol) + " after " + std::to_string(i) + " terms");
    }
    const TorusPoint yi = xi.translated(disp * dir);
    const TorusPoint xn = next_point(xi);
    const double disp_next = disp * rate;
    const TorusPoint yn = xn.translated(disp_next * dir);
    const Mat gx = fiber_map(xi, xn);
    const Mat gy = fiber_map(yi, yn);
    const Mat r = checked_inverse(gy) * gx - Mat::Identity(d, d);
    const Mat inc = fy_inv * r * fx;
    const double inc_norm = spectral_norm(inc);
    h.matrix += inc;
    h.increments.push_back(inc_norm);
    h.n_used = i + 1;
    if (inc_norm > kRoundoffFloor * spectral_norm(h.matrix)) {
      c5 = std::max(c5, inc_norm / (dist_beta * std::pow(theta, i)));
    }
    fx = gx * fx;
    fy_inv = fy_inv * checked_inverse(gy);
    xi = xn;
    disp = disp_next;

    h.c5 = c5;
    h.tail_bound = c5 * dist_beta * std::pow(theta, i + 1) / (1.0 - theta);
    if (h.tail_bound < tol && h.n_used >= min_terms) break;
  }
  return h;
}

namespace {

double on_leaf_coordinate(const ToralAutomorphism& f, const TorusPoint& x, const TorusPoint& y, LeafType leaf,
                          double leaf_tol) {
  if (!x.same_lattice(y)) throw Error(ErrorCode::DimensionMismatch, "points on different lattices");
  const Vec2 su = leaf_coordinates(f, x, y);
  const double along = leaf == LeafType::Stable ? su(0) : su(1);
  const double across = leaf == LeafType::Stable ? su(1) : su(0);
  if (std::abs(across) > leaf_tol) {
    throw Error(ErrorCode::NotOnLeaf, "transverse offset " + std::to_string(across) + " exceeds leaf tolerance");
  }
  if (std::abs(along) > f.leaf_radius()) {
    throw Error(ErrorCode::NotOnLeaf, "point is outside the local leaf of radius " + std::to_string(f.leaf_radius()));
  }
  return along;
}

}  // namespace

HolonomyMap HolonomySolver::stable(const TorusPoint& x, const TorusPoint& y) const {
  const double t = on_leaf_coordinate(c_.base(), x, y, LeafType::Stable, opt_.leaf_tol);
  HolonomyMap h = along_leaf(x, t, LeafType::Stable, opt_.tol);
  h.to = y;
  return h;
}

HolonomyMap HolonomySolver::unstable(const TorusPoint& x, const TorusPoint& y) const {
  const double t = on_leaf_coordinate(c_.base(), x, y, LeafType::Unstable, opt_.leaf_tol);
  HolonomyMap h = along_leaf(x, t, LeafType::Unstable, opt_.tol);
  h.to = y;
  return h;
}

HolonomyMap HolonomySolver::extend(const TorusPoint& x, double s, int extra_steps) const {
  const auto& f = c_.base();
  const int d = c_.fiber_dim();
  int m = 0;
  double local = s;
  while (std::abs(local) > f.leaf_radius()) {
    if (++m > opt_.max_extension_steps) {
      throw Error(ErrorCode::LeafEscape, "leaf point does not enter the local chart within the step cap");
    }
    local *= f.lambda_s();
  }
  m += extra_steps;
  Mat fx = Mat::Identity(d, d);
  Mat fy = Mat::Identity(d, d);
  TorusPoint xi = x;
  double disp = s;
  for (int i = 0; i < m; ++i) {
    const TorusPoint yi = xi.translated(disp * f.v_s());
    fx = c_.at(xi) * fx;
    fy = c_.at(yi) * fy;
    xi = f.step(xi);
    disp *= f.lambda_s();
  }
  HolonomyMap inner = along_leaf(xi, disp, LeafType::Stable, opt_.tol);
  HolonomyMap h = inner;
  h.from = x;
  h.to = x.translated(s * f.v_s());
  h.leaf_distance = s;
  h.matrix = checked_inverse(fy) * inner.matrix * fx;
  // The pulled-back tail is bounded through the conditioning of the outer factors.
  h.tail_bound = inner.tail_bound * spectral_norm(checked_inverse(fy)) * spectral_norm(fx);
  return h;
}

AxiomReport HolonomySolver::verify_axioms(const std::vector<LeafTriple>& triples) const {
  const auto& f = c_.base();
  AxiomReport rep;
  for (const auto& tr : triples) {
    const HolonomyMap hxy = stable(tr.x, tr.y);
    const HolonomyMap hyz = stable(tr.y, tr.z);
    const HolonomyMap hxz = stable(tr.x, tr.z);
    rep.composition_defect =
        std::max(rep.composition_defect, spectral_norm(hyz.matrix * hxy.matrix - hxz.matrix));

    const HolonomyMap hf = stable(f.step(tr.x), f.step(tr.y));
    const Mat pulled = checked_inverse(c_.at(tr.y)) * hf.matrix * c_.at(tr.x);
    rep.equivariance_defect = std::max(rep.equivariance_defect, spectral_norm(hxy.matrix - pulled));

    const double dist = std::abs(hxy.leaf_distance);
    if (dist > 0) {
      const double ratio = spectral_norm(hxy.matrix - Mat::Identity(c_.fiber_dim(), c_.fiber_dim())) /
                           std::pow(dist, c_.beta());
      rep.holder_constant = std::max(rep.holder_constant, ratio);
      const HolonomyMap doubled =
          along_leaf(tr.x, hxy.leaf_distance, LeafType::Stable, opt_.tol, 2 * hxy.n_used);
      const double diff = spectral_norm(doubled.matrix - hxy.matrix);
      const double allowance = 2.0 * hxy.tail_bound;
      if (allowance > 0) {
        rep.uniqueness_defect = std::max(rep.uniqueness_defect, diff / allowance);
      } else if (diff > 0) {
        rep.uniqueness_defect = std::max(rep.uniqueness_defect, diff > 1e-15 ? 2.0 : 0.0);
      }
    }
    ++rep.triples;
  }
  return rep;
}

FiTable HolonomySolver::product_bound_table(const TorusPoint& x, const TorusPoint& y, int i_max) const {
  const auto& f = c_.base();
  const double t = on_leaf_coordinate(f, x, y, LeafType::Stable, opt_.leaf_tol);
  const int d = c_.fiber_dim();
  FiTable table;
  Mat fx = Mat::Identity(d, d), fy_inv = Mat::Identity(d, d);
  double log_fx = 0, log_fy_inv = 0;
  TorusPoint xi = x;
  double disp = t;
  const double log_theta = std::log(theta_s_);
  const double log_nu = std::log(f.nu());
  for (int i = 0; i <= i_max; ++i) {
    const double log_product = std::log(spectral_norm(fy_inv)) + log_fy_inv + std::log(spectral_norm(fx)) + log_fx;
    const double log_bound = i * log_theta - c_.beta() * i * log_nu;
    table.rows.push_back({i, std::exp(log_product), log_product, log_bound});
    table.c0 = std::max(table.c0, std::exp(log_product - log_bound));
    const TorusPoint yi = xi.translated(disp * f.v_s());
    fx = c_.at(xi) * fx;
    fy_inv = fy_inv * checked_inverse(c_.at(yi));
    for (auto [m, log_scale] : {std::pair{&fx, &log_fx}, std::pair{&fy_inv, &log_fy_inv}}) {
      const double s = m->cwiseAbs().maxCoeff();
      if (s > 1e30 || s < 1e-30) {
        *m /= s;
        *log_scale += std::log(s);
      }
    }
    xi = f.step(xi);
    disp *= f.lambda_s();
  }
  return table;
}

HolonomyMap stable_holonomy(const CocycleSpec& c, const TorusPoint& x, const TorusPoint& y,
                            const HolonomyOptions& opt) {
  return HolonomySolver(c, opt).stable(x, y);
}

HolonomyMap unstable_holonomy(const CocycleSpec& c, const TorusPoint& x, const TorusPoint& y,
                              const HolonomyOptions& opt) {
  return HolonomySolver(c, opt).unstable(x, y);
}

HolonomyMap extend_holonomy(const CocycleSpec& c, const TorusPoint& x, double s, const HolonomyOptions& opt) {
  return HolonomySolver(c, opt).extend(x, s);
}

AxiomReport verify_holonomy_axioms(const CocycleSpec& c, const std::vector<LeafTriple>& triples,
                                   const HolonomyOptions& opt) {
  return HolonomySolver(c, opt).verify_axioms(triples);
}

FiTable product_bound_check(const CocycleSpec& c, const TorusPoint& x, const TorusPoint& y, int i_max,
                       const HolonomyOptions& opt) {
  return HolonomySolver(c, opt).product_bound_table(x, y, i_max);
}

double increment_decay_slope(const HolonomyMap& h) {
  std::vector<std::pair<double, double>> pts;
  double top = 0;
  for (double v : h.increments) top = std::max(top, v);
  for (std::size_t i = 0; i < h.increments.size(); ++i) {
    const double v = h.increments[i];
    if (v > 1e-13 * std::max(1.0, top) && v > 0) pts.emplace_back(static_cast<double>(i), std::log(v));
  }
  if (pts.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (auto [a, b] : pts) {
    mx += a;
    my += b;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0, sxx = 0;
  for (auto [a, b] : pts) {
    sxy += (a - mx) * (b - my);
    sxx += (a - mx) * (a - mx);
  }
  return sxy / sxx;
}

std::vector<LeafTriple> random_stable_triples(const ToralAutomorphism& f, int count, double max_leaf_dist,
                                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LeafTriple> out;
  out.reserve(count);
  const auto& lattice = f.lattice();
  for (int k = 0; k < count; ++k) {
    BaseVec c(2);
    c << lattice.periods[0] * rng.uniform(), lattice.periods[1] * rng.uniform();
    const TorusPoint x = TorusPoint::from_coords(lattice, c);
    const double ty = rng.uniform(-max_leaf_dist, max_leaf_dist);
    const double tz = rng.uniform(-max_leaf_dist, max_leaf_dist);
    // z is placed relative to x so that all three share x's leaf chart.
    out.push_back({x, stable_point(f, x, ty), stable_point(f, x, tz)});
  }
  return out;
}

}  // namespace coclab
