#include "coclab/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "coclab/error.hpp"
#include "coclab/parallel.hpp"

namespace coclab {

namespace {

constexpr double kPi = std::numbers::pi;

void rescale(Mat& m, double& log_scale) {
  const double s = m.cwiseAbs().maxCoeff();
  if (s > 1e30 || (s < 1e-30 && s > 0)) {
    m /= s;
    log_scale += std::log(s);
  }
}

void require_planar_fiber(const CocycleSpec& c) {
  if (c.fiber_dim() != 2) throw Error(ErrorCode::DimensionMismatch, "line fields need a two-dimensional fiber");
}

// Runs body(i) for every index and rethrows the failure with the lowest
// index, so the reported error does not depend on thread scheduling.
template <class Body>
void ordered_parallel_for(std::size_t n, Body&& body) {
  std::vector<std::optional<Error>> errors(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      body(i);
    } catch (const Error& e) {
      errors[i] = e;
    }
  });
  for (auto& e : errors)
    if (e) throw *e;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pairs of lines

LinePair make_pair_of_lines(double a, double b) {
  a = wrap_line_angle(a);
  b = wrap_line_angle(b);
  if (b < a) std::swap(a, b);
  return {a, b};
}

double pair_distance(const LinePair& p, const LinePair& q) {
  const double straight = std::max(line_distance(p.first, q.first), line_distance(p.second, q.second));
  const double crossed = std::max(line_distance(p.first, q.second), line_distance(p.second, q.first));
  return std::min(straight, crossed);
}

double line_image(const Mat& m, double angle) {
  const double x = m(0, 0) * std::cos(angle) + m(0, 1) * std::sin(angle);
  const double y = m(1, 0) * std::cos(angle) + m(1, 1) * std::sin(angle);
  return wrap_line_angle(std::atan2(y, x));
}

LinePair push_pair(const Mat& m, const LinePair& p) {
  return make_pair_of_lines(line_image(m, p.first), line_image(m, p.second));
}

namespace {

// Running product P ← P·M of 2×2 matrices kept as R(angle)·diag(1, e^{−gap})·V
// up to scale. Plain accumulation forgets the weak direction once the gap
// has been large, so a later shrinking gap would report a wrong line.
struct GradedProduct {
  double angle = 0;
  double gap = 0;
  Mat2 v = Mat2::Identity();

  void mul(const Mat2& m) {
    const Mat2 vm = v * m;
    const double w = std::exp(-gap);
    const Eigen::RowVector2d r1 = vm.row(0), r2 = w * vm.row(1);
    const double t = 0.5 * std::atan2(2 * r1.dot(r2), r1.squaredNorm() - r2.squaredNorm());
    const Eigen::RowVector2d top = std::cos(t) * r1 + std::sin(t) * r2;
    const double n1 = top.norm();
    const double det = vm.determinant();
    gap = std::max(0.0, 2 * std::log(n1) + gap - std::log(std::abs(det)));
    v.row(0) = top / n1;
    v.row(1) = (det < 0 ? -1.0 : 1.0) * Eigen::RowVector2d(-v(0, 1), v(0, 0));
    angle = wrap_line_angle(angle + t);
  }
};

}  // namespace

PairDetection detect_line_pair(const CocycleSpec& c, const TorusPoint& x, const PairOptions& opt) {
  require_planar_fiber(c);
  // Relative rounding of one cocycle evaluation, with headroom. Every step
  // spent leaning toward one line feeds its rounding, magnified by e^{gap},
  // into the other line, so exposure is a sum over the walk, not a maximum.
  constexpr double kRounding = 1e-14;
  struct Cluster {
    double angle;
    double gap;
    double error;
  };
  struct Stream {
    GradedProduct g;
    std::vector<double> exposure;  // Σ e^{gap} of readings per cluster
    double prev_angle = 0;
    bool has_prev = false;
    // Recent low-gap readings. A line visited only for single steps between
    // crossings is still confirmed when two visits agree.
    std::vector<double> recent;
    std::size_t next_slot = 0;
  };
  constexpr std::size_t kRecent = 64;
  std::vector<Cluster> clusters;
  Stream past, future;

  auto observe = [&](Stream& s) {
    const double angle = s.g.angle, gap = s.g.gap;
    double drift = s.has_prev ? line_distance(s.prev_angle, angle) : kPi;
    s.prev_angle = angle;
    s.has_prev = gap > 0;
    if (gap >= opt.settled_gap && drift > opt.settled_drift) {
      for (double a : s.recent) drift = std::min(drift, line_distance(a, angle));
      if (s.recent.size() < kRecent)
        s.recent.push_back(angle);
      else
        s.recent[s.next_slot++ % kRecent] = angle;
    }
    const bool settled = gap >= opt.settled_gap && drift <= opt.settled_drift;
    if (!(gap >= opt.min_gap) && !settled) return;
    std::size_t k = 0;
    while (k < clusters.size() && !(line_distance(clusters[k].angle, angle) < opt.cluster_radius)) ++k;
    if (k == clusters.size()) {
      // The expanded direction approaches its line like e^{-2 gap}, so an
      // unsettled low-gap reading may sit anywhere near the true pair. Nor
      // may the line be below the rounding left by earlier excursions.
      if (!settled && gap < opt.found_gap) return;
      double total = 0;
      for (double e : s.exposure) total += e;
      if (kRounding * total / std::min(1.0, gap) >= opt.cluster_radius) return;
      clusters.push_back({angle, gap, std::numeric_limits<double>::infinity()});
    }
    s.exposure.resize(clusters.size(), 0.0);
    double opposite = 0;
    for (std::size_t j = 0; j < clusters.size(); ++j)
      if (j != k) opposite += s.exposure[j];
    s.exposure[k] += std::exp(gap);
    const double error = 4 * drift + kRounding * opposite / std::min(1.0, gap);
    if (error < clusters[k].error) clusters[k] = {angle, gap, error};
  };

  const auto& f = c.base();
  TorusPoint back = x, ahead = x;
  PairDetection out;
  for (long k = 1; k <= opt.max_steps; ++k) {
    // Products arriving at x expand the line that dominated the past.
    back = f.step_back(back);
    past.g.mul(Mat2(c.at(back)));
    observe(past);
    // Inverse products leaving x expand the line that is weaker in the future.
    future.g.mul(Mat2(checked_inverse(c.at(ahead))));
    ahead = f.step(ahead);
    observe(future);

    out.steps = k;
    if (clusters.size() > 2) break;
    if (clusters.size() == 2 && clusters[0].error <= opt.target_error && clusters[1].error <= opt.target_error) break;
  }
  out.clusters = static_cast<int>(clusters.size());
  if (clusters.size() == 2 && std::isfinite(clusters[0].error) && std::isfinite(clusters[1].error)) {
    out.ok = true;
    out.pair = make_pair_of_lines(clusters[0].angle, clusters[1].angle);
    const int i = wrap_line_angle(clusters[0].angle) == out.pair.first ? 0 : 1;
    out.gap_first = clusters[i].gap;
    out.gap_second = clusters[1 - i].gap;
    out.error_first = clusters[i].error;
    out.error_second = clusters[1 - i].error;
  }
  return out;
}

LinePairField line_pair_scan(const CocycleSpec& c, const std::vector<TorusPoint>& grid, double tol,
                             const PairOptions& opt) {
  require_planar_fiber(c);
  LinePairField field;
  field.grid = grid;
  field.pairs.resize(grid.size());
  field.defects.assign(grid.size(), std::numeric_limits<double>::infinity());
  std::vector<char> found(grid.size(), 0);
  ordered_parallel_for(grid.size(), [&](std::size_t i) {
    const PairDetection here = detect_line_pair(c, grid[i], opt);
    if (!here.ok) return;
    field.pairs[i] = here.pair;
    const PairDetection there = detect_line_pair(c, c.base().step(grid[i]), opt);
    if (!there.ok) return;
    found[i] = 1;
    field.defects[i] = pair_distance(push_pair(c.at(grid[i]), here.pair), there.pair);
  });
  field.residual = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!found[i]) ++field.failures;
    field.residual = std::max(field.residual, field.defects[i]);
  }
  field.ok = field.failures == 0 && field.residual < tol;
  return field;
}

LinePairField invariant_line_pair_field(const CocycleSpec& c, const std::vector<TorusPoint>& grid, double tol,
                                        const PairOptions& opt) {
  LinePairField field = line_pair_scan(c, grid, tol, opt);
  if (field.failures > 0) {
    throw Error(ErrorCode::NoInvariantPair,
                std::to_string(field.failures) + " grid points without a stable pair of lines");
  }
  if (!(field.residual < tol)) {
    throw Error(ErrorCode::NoInvariantPair, "invariance residual " + std::to_string(field.residual) + " above tolerance");
  }
  return field;
}

Monodromy pair_monodromy(const CocycleSpec& c, const TorusPoint& x, int axis, int steps, const PairOptions& opt) {
  require_planar_fiber(c);
  if (axis < 0 || axis >= x.dim()) throw Error(ErrorCode::InvalidArgument, "loop axis out of range");
  if (steps < 4) throw Error(ErrorCode::InvalidArgument, "monodromy loop needs at least 4 steps");
  std::vector<LinePair> pairs(steps + 1);
  ordered_parallel_for(pairs.size(), [&](std::size_t k) {
    BaseVec shift = BaseVec::Zero(x.dim());
    shift(axis) = static_cast<double>(x.period(axis)) * static_cast<double>(k) / steps;
    const PairDetection d = detect_line_pair(c, x.translated(shift), opt);
    if (!d.ok) throw Error(ErrorCode::NoInvariantPair, "no pair of lines along the monodromy loop");
    pairs[k] = d.pair;
  });
  Monodromy m;
  m.min_separation = kPi;
  double tracked = pairs[0].first;
  for (int k = 0; k <= steps; ++k) {
    m.min_separation = std::min(m.min_separation, line_distance(pairs[k].first, pairs[k].second));
    if (k == 0) continue;
    const double d1 = line_distance(tracked, pairs[k].first), d2 = line_distance(tracked, pairs[k].second);
    m.max_jump = std::max(m.max_jump, std::min(d1, d2));
    tracked = d1 <= d2 ? pairs[k].first : pairs[k].second;
  }
  m.swapped = line_distance(tracked, pairs[0].second) < line_distance(tracked, pairs[0].first);
  return m;
}

void write_pair_csv(std::ostream& out, const LinePairField& field) {
  out << "x1,x2,angle1,angle2,residual\n";
  out.precision(17);
  for (std::size_t i = 0; i < field.grid.size(); ++i) {
    out << field.grid[i].coord(0) << ',' << field.grid[i].coord(1) << ',' << field.pairs[i].first << ','
        << field.pairs[i].second << ',' << field.defects[i] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Invariant conformal structures

namespace {

struct Window {
  ConformalStructure center;
  double max_distortion;
};

Window window_barycenter(const CocycleSpec& c, const ConformalStructure& tau0, const TorusPoint& x,
                         const StructureOptions& opt) {
  const int d = c.fiber_dim();
  if (tau0.dim() != d) throw Error(ErrorCode::DimensionMismatch, "base structure dimension");
  if (opt.window < 0) throw Error(ErrorCode::InvalidArgument, "window must be nonnegative");
  std::vector<ConformalStructure> pulled;
  pulled.reserve(opt.window + 1);
  Mat prod = Mat::Identity(d, d);
  double scale = 0, worst = 1;
  TorusPoint p = x;
  for (int k = 0; k <= opt.window; ++k) {
    const double k_dist = condition_number(prod);
    worst = std::max(worst, k_dist);
    if (!(k_dist <= opt.distortion_cap)) {
      throw Error(ErrorCode::NotQuasiconformalOnWindow,
                  "K(x, " + std::to_string(k) + ") = " + std::to_string(k_dist) + " exceeds the cap");
    }
    // (Fᵏ_x)* τ₀: the structure at fᵏx pulled back to x.
    pulled.emplace_back(Mat(prod.transpose() * tau0.matrix() * prod));
    prod = c.at(p) * prod;
    rescale(prod, scale);
    p = c.base().step(p);
  }
  if (opt.barycenter == Barycenter::KarcherMean) return {karcher_mean(pulled), worst};
  return {minimal_enclosing_ball(pulled).center, worst};
}

}  // namespace

ConformalStructure structure_at(const CocycleSpec& c, const ConformalStructure& tau0, const TorusPoint& x,
                                const StructureOptions& opt) {
  return window_barycenter(c, tau0, x, opt).center;
}

StructureField invariant_conformal_structure(const CocycleSpec& c, const ConformalStructure& tau0,
                                             const std::vector<TorusPoint>& grid, const StructureOptions& opt) {
  StructureField field;
  field.grid = grid;
  field.defects.assign(grid.size(), 0.0);
  std::vector<std::optional<ConformalStructure>> taus(grid.size());
  std::vector<double> distortion(grid.size(), 1.0);
  ordered_parallel_for(grid.size(), [&](std::size_t i) {
    const Window here = window_barycenter(c, tau0, grid[i], opt);
    const Window there = window_barycenter(c, tau0, c.base().step(grid[i]), opt);
    field.defects[i] = distance(act(c.at(grid[i]), here.center), there.center);
    distortion[i] = std::max(here.max_distortion, there.max_distortion);
    taus[i] = here.center;
  });
  for (std::size_t i = 0; i < grid.size(); ++i) {
    field.structures.push_back(*taus[i]);
    field.max_defect = std::max(field.max_defect, field.defects[i]);
    field.max_distortion = std::max(field.max_distortion, distortion[i]);
  }
  if (!(field.max_defect < opt.tol)) {
    throw Error(ErrorCode::NoConvergence,
                "invariance defect " + std::to_string(field.max_defect) + " above tolerance");
  }
  return field;
}

// ---------------------------------------------------------------------------
// Coboundaries

namespace {

double periodic_log_average(const std::function<double(const BaseVec&)>& a, const ToralAutomorphism& f,
                            const RationalPoint& p, int period) {
  double sum = 0;
  RationalPoint q = p;
  for (int k = 0; k < period; ++k) {
    sum += std::log(a(q.coords()));
    q = f.step(q);
  }
  return sum / period;
}

// 95th percentile of |Δ log ψ| / dist^β over orbit pairs closer than r,
// found by bucketing the points into cells of side r.
void holder_diagnostic(CoboundaryResult& res, const Lattice& lat, const CoboundaryOptions& opt) {
  const std::size_t m = std::min<std::size_t>(res.orbit.size(), static_cast<std::size_t>(opt.holder_samples));
  const int dim = lat.dim();
  const double r = opt.holder_radius;
  std::vector<long> cells(dim);
  for (int i = 0; i < dim; ++i) cells[i] = std::max(1L, static_cast<long>(std::floor(lat.periods[i] / r)));
  auto cell_of = [&](const TorusPoint& p) {
    std::vector<long> idx(dim);
    for (int i = 0; i < dim; ++i)
      idx[i] = std::min(cells[i] - 1, static_cast<long>(p.coord(i) / lat.periods[i] * cells[i]));
    return idx;
  };
  auto key = [&](const std::vector<long>& idx) {
    long k = 0;
    for (int i = 0; i < dim; ++i) k = k * cells[i] + ((idx[i] % cells[i]) + cells[i]) % cells[i];
    return k;
  };
  std::unordered_map<long, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < m; ++i) buckets[key(cell_of(res.orbit[i]))].push_back(i);

  std::vector<double> ratios;
  std::vector<long> offset(dim, -1);
  for (std::size_t i = 0; i < m; ++i) {
    const auto base_idx = cell_of(res.orbit[i]);
    // Visit the 3^dim neighbouring cells.
    std::fill(offset.begin(), offset.end(), -1);
    while (true) {
      std::vector<long> idx = base_idx;
      for (int a = 0; a < dim; ++a) idx[a] += offset[a];
      auto it = buckets.find(key(idx));
      if (it != buckets.end()) {
        for (std::size_t j : it->second) {
          if (j <= i) continue;
          const double dist = torus_dist(res.orbit[i], res.orbit[j]);
          if (dist > 0 && dist < r)
            ratios.push_back(std::abs(res.log_psi[i] - res.log_psi[j]) / std::pow(dist, opt.beta));
        }
      }
      int a = 0;
      while (a < dim && offset[a] == 1) offset[a++] = -1;
      if (a == dim) break;
      ++offset[a];
    }
  }
  res.holder_pairs = static_cast<long>(ratios.size());
  if (ratios.empty()) return;
  const std::size_t q = std::min(ratios.size() - 1, static_cast<std::size_t>(0.95 * ratios.size()));
  std::nth_element(ratios.begin(), ratios.begin() + static_cast<long>(q), ratios.end());
  res.holder_constant = ratios[q];
}

}  // namespace

CoboundaryResult coboundary_analysis(const std::function<double(const BaseVec&)>& a, const ToralAutomorphism& f,
                                     const TorusPoint& seed, const CoboundaryOptions& opt) {
  if (opt.orbit_length < 1) throw Error(ErrorCode::InvalidArgument, "orbit length must be positive");
  if (!(opt.anchor > 0)) throw Error(ErrorCode::InvalidArgument, "anchor must be positive");
  CoboundaryResult res;

  // The constant comes from periodic data: for a coboundary every periodic
  // orbit average of log a equals it exactly.
  std::vector<std::pair<RationalPoint, std::pair<int, double>>> averages;
  std::int64_t used = 0;
  for (int n = 1; n <= opt.max_period; ++n) {
    std::int64_t count = 0;
    try {
      count = periodic_point_count(f, n);
    } catch (const Error&) {
      break;
    }
    if (used + count > opt.periodic_cap) break;
    for (const auto& p : periodic_points(f, n, opt.periodic_cap))
      averages.push_back({p, {n, periodic_log_average(a, f, p, n)}});
    used += count;
  }
  if (averages.empty()) throw Error(ErrorCode::TooManyPeriodicPoints, "no periodic period fits under the cap");
  double sum = 0;
  for (const auto& e : averages) sum += e.second.second;
  res.c = sum / static_cast<double>(averages.size());
  res.periodic_points = static_cast<long>(averages.size());
  for (const auto& e : averages) {
    const double g = std::abs(e.second.second - res.c);
    if (g > res.periodic_gap || res.worst_period == 0) {
      res.periodic_gap = std::max(res.periodic_gap, g);
      res.worst = e.first;
      res.worst_period = e.second.first;
    }
  }
  res.obstructed = !(res.periodic_gap <= opt.tol);

  res.orbit.reserve(opt.orbit_length + 1);
  res.log_psi.reserve(opt.orbit_length + 1);
  TorusPoint p = seed;
  double log_psi = std::log(opt.anchor), birkhoff = 0;
  for (long k = 0; k <= opt.orbit_length; ++k) {
    res.orbit.push_back(p);
    res.log_psi.push_back(log_psi);
    if (k == opt.orbit_length) break;
    const double la = std::log(a(p.coords()));
    birkhoff += la;
    log_psi += la - res.c;
    p = f.step(p);
  }
  res.birkhoff_mean = birkhoff / static_cast<double>(opt.orbit_length);
  holder_diagnostic(res, f.lattice(), opt);
  return res;
}

CoboundaryResult coboundary_solve(const std::function<double(const BaseVec&)>& a, const ToralAutomorphism& f,
                                  const TorusPoint& seed, const CoboundaryOptions& opt) {
  CoboundaryResult res = coboundary_analysis(a, f, seed, opt);
  if (res.obstructed) {
    throw Error(ErrorCode::ObstructionNonzero,
                "periodic averages of log a spread by " + std::to_string(res.periodic_gap) + " (period " +
                    std::to_string(res.worst_period) + ")");
  }
  return res;
}

double coboundary_roundtrip_defect(const std::function<double(const BaseVec&)>& a, const CoboundaryResult& r) {
  double worst = 0;
  for (std::size_t k = 0; k + 1 < r.orbit.size(); ++k) {
    const double av = a(r.orbit[k].coords());
    const double rebuilt = std::exp(r.c + r.log_psi[k + 1] - r.log_psi[k]);
    worst = std::max(worst, std::abs(rebuilt - av) / av);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Flag normalization

FlagStructure flag_factor_analysis(const CocycleSpec& c, const std::function<Vec2(const BaseVec&)>& line,
                                   const std::vector<TorusPoint>& grid, const CoboundaryOptions& opt) {
  require_planar_fiber(c);
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "flag grid is empty");
  const auto& f = c.base();
  auto unit_line = [&](const BaseVec& x) {
    const Vec2 e = line(x);
    const double n = e.norm();
    if (!(n > 0)) throw Error(ErrorCode::InvalidArgument, "line field vanishes");
    return Vec2(e / n);
  };
  // Scalings on E¹ and on the quotient E²/E¹ with Euclidean-induced metrics.
  auto scalings = [&](const BaseVec& x) {
    const Mat fx = c.at(x);
    const double a1 = (Mat2(fx) * unit_line(x)).norm();
    return std::pair{a1, std::abs(fx.determinant()) / a1};
  };

  FlagStructure fs;
  fs.grid = grid;
  for (const auto& x : grid) {
    const Vec2 e = unit_line(x.coords());
    const Vec2 image = Mat2(c.at(x)) * e;
    const Vec2 next = unit_line(f.step(x).coords());
    fs.line_defect = std::max(fs.line_defect, line_distance(std::atan2(image(1), image(0)), std::atan2(next(1), next(0))));
    const auto [a1, a2] = scalings(x.coords());
    fs.lines.push_back(e);
    fs.a1.push_back(a1);
    fs.a2.push_back(a2);
    fs.phi.push_back(1.0 / a1);
  }

  const auto ratio = [&](const BaseVec& x) {
    const auto [a1, a2] = scalings(x);
    return a2 / a1;
  };
  BaseVec seed(f.dim());
  for (int i = 0; i < f.dim(); ++i) seed(i) = (std::sqrt(2.0 + i) - 1.0) * f.lattice().periods[i];
  fs.ratio = coboundary_analysis(ratio, f, TorusPoint::from_coords(f.lattice(), seed), opt);
  fs.log_ratio_constant = fs.ratio.c;
  // A nonzero constant means the two factors grow at different rates: no
  // scalar normalizer makes both isometric.
  fs.obstructed = fs.ratio.obstructed || std::abs(fs.ratio.c) > opt.tol;

  // φ = 1/a₁ makes the E¹ factor isometric; the quotient factor of φF is
  // then e^c in the metric rescaled by 1/ψ.
  for (std::size_t k = 0; k + 1 < fs.ratio.orbit.size(); ++k) {
    const double q = ratio(fs.ratio.orbit[k].coords()) * std::exp(fs.ratio.log_psi[k] - fs.ratio.log_psi[k + 1]);
    fs.factor_defect = std::max(fs.factor_defect, std::abs(q - 1.0));
  }
  return fs;
}

FlagStructure flag_factor_normalize(const CocycleSpec& c, const std::function<Vec2(const BaseVec&)>& line,
                                    const std::vector<TorusPoint>& grid, const CoboundaryOptions& opt) {
  FlagStructure fs = flag_factor_analysis(c, line, grid, opt);
  if (fs.obstructed) {
    throw Error(ErrorCode::ObstructionNonzero, "factor scalings are not cohomologous: periodic spread " +
                                                   std::to_string(fs.ratio.periodic_gap) + ", log ratio constant " +
                                                   std::to_string(fs.log_ratio_constant));
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Growth fits and projective Lipschitz bounds

std::vector<long> geometric_n_list(int lo, int hi) {
  std::vector<long> out;
  for (int k = lo; k <= hi; ++k) out.push_back(1L << k);
  return out;
}

namespace {

double slope(const std::vector<long>& n, const std::vector<double>& y) {
  const std::size_t m = n.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += std::log(static_cast<double>(n[i]));
    sy += y[i];
  }
  sx /= m;
  sy /= m;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = std::log(static_cast<double>(n[i])) - sx;
    num += dx * (y[i] - sy);
    den += dx * dx;
  }
  return num / den;
}

}  // namespace

GrowthFit polynomial_growth_fit(const CocycleSpec& c, const std::vector<TorusPoint>& grid,
                                const std::vector<long>& n_list) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "growth grid is empty");
  if (n_list.size() < 2) throw Error(ErrorCode::InvalidArgument, "growth fit needs at least two orbit lengths");
  if (!std::is_sorted(n_list.begin(), n_list.end()) || n_list.front() < 1)
    throw Error(ErrorCode::InvalidArgument, "orbit lengths must be positive and increasing");

  const int d = c.fiber_dim();
  const std::size_t m = n_list.size();
  std::vector<std::vector<double>> norms(grid.size()), dists(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    Mat prod = Mat::Identity(d, d), inv = Mat::Identity(d, d);
    double ps = 0, is = 0;
    TorusPoint p = grid[g];
    std::size_t next = 0;
    for (long k = 1; next < m; ++k) {
      const Mat fx = c.at(p);
      prod = fx * prod;
      inv = inv * checked_inverse(fx);
      rescale(prod, ps);
      rescale(inv, is);
      p = c.base().step(p);
      if (k == n_list[next]) {
        const double ln = std::log(spectral_norm(prod)) + ps;
        const double li = std::log(spectral_norm(inv)) + is;
        norms[g].push_back(ln);
        dists[g].push_back(std::max(0.0, ln + li));
        ++next;
      }
    }
  });
  GrowthFit fit;
  fit.n = n_list;
  fit.max_log_norm.assign(m, -std::numeric_limits<double>::infinity());
  fit.max_log_k.assign(m, 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (std::size_t i = 0; i < m; ++i) {
      fit.max_log_norm[i] = std::max(fit.max_log_norm[i], norms[g][i]);
      fit.max_log_k[i] = std::max(fit.max_log_k[i], dists[g][i]);
    }
  fit.norm_slope = slope(n_list, fit.max_log_norm);
  fit.distortion_slope = slope(n_list, fit.max_log_k);
  return fit;
}

LipschitzSample grassmann_lipschitz_check(const CocycleSpec& c, const TorusPoint& x, long n, double xi, double eta,
                                          double constant) {
  require_planar_fiber(c);
  const IterateResult r = iterate(c, x, n);
  const double k = std::exp(std::max(0.0, r.log_distortion()));
  const double lhs = line_distance(line_image(r.scaled, xi), line_image(r.scaled, eta));
  const double base = line_distance(xi, eta);
  LipschitzSample s;
  s.lhs = lhs;
  s.rhs = constant * k * base;
  s.ratio = base > 0 ? lhs / (k * base) : 0.0;
  return s;
}

}  // namespace coclab
