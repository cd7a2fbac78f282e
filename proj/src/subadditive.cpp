#include "coclab/subadditive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "coclab/error.hpp"
#include "coclab/parallel.hpp"
#include "coclab/random.hpp"

namespace coclab {

namespace {

void rescale(Mat& m, double& log_scale) {
  const double s = m.cwiseAbs().maxCoeff();
  if (s > 1e30 || (s < 1e-30 && s > 0)) {
    m /= s;
    log_scale += std::log(s);
  }
}

// Running log‖Fᵏ_x‖ and log‖(Fᵏ_x)⁻¹‖ for k = 1..n (n < 0 walks backwards).
struct NormSequence {
  std::vector<double> log_norm, log_inv_norm;
};

NormSequence norm_sequence(const CocycleSpec& c, const TorusPoint& x, long n) {
  const int d = c.fiber_dim();
  const long len = std::abs(n);
  NormSequence out;
  out.log_norm.resize(len);
  out.log_inv_norm.resize(len);
  Mat prod = Mat::Identity(d, d), inv = Mat::Identity(d, d);
  double ps = 0, is = 0;
  TorusPoint p = x;
  for (long k = 0; k < len; ++k) {
    if (n > 0) {
      const Mat fx = c.at(p);
      prod = fx * prod;
      inv = inv * checked_inverse(fx);
      p = c.base().step(p);
    } else {
      p = c.base().step_back(p);
      const Mat fx = c.at(p);
      prod = checked_inverse(fx) * prod;
      inv = inv * fx;
    }
    rescale(prod, ps);
    rescale(inv, is);
    out.log_norm[k] = std::log(spectral_norm(prod)) + ps;
    out.log_inv_norm[k] = std::log(spectral_norm(inv)) + is;
  }
  return out;
}

}  // namespace

SubadditiveFamily log_norm_family(const CocycleSpec& c, long n_max) {
  return {[c](const TorusPoint& x, long n) { return norm_sequence(c, x, n).log_norm; }, c.base(), n_max,
          "log norm"};
}

SubadditiveFamily log_distortion_family(const CocycleSpec& c, double rate, long n_max) {
  return {[c, rate](const TorusPoint& x, long n) {
            const NormSequence s = norm_sequence(c, x, n);
            std::vector<double> out(n);
            for (long k = 0; k < n; ++k)
              out[k] = std::max(0.0, s.log_norm[k] + s.log_inv_norm[k]) - rate * static_cast<double>(k + 1);
            return out;
          },
          c.base(), n_max, "log distortion minus linear rate"};
}

SubadditiveFamily pointwise_family(const ToralAutomorphism& base, std::function<double(const TorusPoint&, long)> value,
                                   long n_max, std::string description) {
  return {[value](const TorusPoint& x, long n) {
            std::vector<double> out(n);
            for (long k = 0; k < n; ++k) out[k] = value(x, k + 1);
            return out;
          },
          base, n_max, std::move(description)};
}

double birkhoff_average(const ToralAutomorphism& f, const std::function<double(const BaseVec&)>& phi,
                        const TorusPoint& x, long n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "Birkhoff average needs n ≥ 1");
  double sum = 0;
  TorusPoint p = x;
  for (long i = 0; i < n; ++i) {
    sum += phi(p.coords());
    p = f.step(p);
  }
  return sum / static_cast<double>(n);
}

double subadditivity_defect(const SubadditiveFamily& fam, int samples, long max_len, std::uint64_t seed) {
  Rng rng(seed);
  const Lattice& lat = fam.base.lattice();
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    BaseVec v(lat.dim());
    for (int i = 0; i < lat.dim(); ++i) v(i) = rng.uniform() * lat.periods[i];
    const TorusPoint x = TorusPoint::from_coords(lat, v);
    const long n = 1 + static_cast<long>(rng.next() % static_cast<std::uint64_t>(max_len));
    const long k = 1 + static_cast<long>(rng.next() % static_cast<std::uint64_t>(max_len));
    const double whole = fam.at(x, n + k);
    const double parts = fam.at(x, k) + fam.at(apply(fam.base, x, k), n);
    worst = std::max(worst, whole - parts);
  }
  return worst;
}

LevelScan negative_level_scan(const SubadditiveFamily& fam, const std::vector<TorusPoint>& grid, long n_max) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "level search grid is empty");
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "level cap must be positive");
  LevelScan scan;
  // Evaluate in doubling blocks so an early level does not pay for n_max.
  long evaluated = 0;
  std::vector<double> running;
  for (long block = 1; evaluated < n_max; block *= 2) {
    const long upto = std::min(n_max, std::max(block, evaluated + 1));
    std::vector<std::vector<double>> seqs(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { seqs[i] = fam.sequence(grid[i], upto); });
    for (long n = evaluated; n < upto; ++n) {
      double m = -std::numeric_limits<double>::infinity();
      for (const auto& s : seqs) m = std::max(m, s[n]);
      scan.max_by_level.push_back(m);
      if (m < 0) {
        scan.found = true;
        scan.level = n + 1;
        return scan;
      }
    }
    evaluated = upto;
  }
  return scan;
}

long find_negative_level(const SubadditiveFamily& fam, const std::vector<TorusPoint>& grid, long n_max) {
  const LevelScan scan = negative_level_scan(fam, grid, n_max);
  if (!scan.found) {
    throw Error(ErrorCode::NotFound, "no negative level up to N = " + std::to_string(n_max) +
                                         " (max a_N = " + std::to_string(scan.max_by_level.back()) + ")");
  }
  return scan.level;
}

GrowthCertificate distortion_growth_certificate(const CocycleSpec& c, double xi, double eps,
                                                const std::vector<TorusPoint>& grid, long n_max) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "certificate grid is empty");
  if (n_max < 2) throw Error(ErrorCode::InvalidArgument, "certificate needs n_max ≥ 2");
  const double rate = xi + eps;
  // Per grid point: log K(x, n) for |n| = 1..n_max, max over both signs.
  std::vector<std::vector<double>> log_k(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    std::vector<double> row(n_max + 1, 0.0);
    for (long sign : {1L, -1L}) {
      const NormSequence s = norm_sequence(c, grid[i], sign * n_max);
      for (long k = 0; k < n_max; ++k)
        row[k + 1] = std::max(row[k + 1], std::max(0.0, s.log_norm[k] + s.log_inv_norm[k]));
    }
    log_k[i] = std::move(row);
  });

  GrowthCertificate cert;
  cert.max_log_k.assign(n_max + 1, 0.0);
  double log_c = 0, log_c_half = 0;  // n = 0 contributes K = 1
  double best_rate = -1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (long n = 1; n <= n_max; ++n) {
      const double v = log_k[i][n];
      cert.max_log_k[n] = std::max(cert.max_log_k[n], v);
      const double weighted = v - rate * static_cast<double>(n);
      log_c = std::max(log_c, weighted);
      if (2 * n <= n_max) log_c_half = std::max(log_c_half, weighted);
    }
    const double r = log_k[i][n_max] / static_cast<double>(n_max);
    if (r > best_rate) {
      best_rate = r;
      cert.worst = grid[i];
    }
  }
  cert.log_c_eps = log_c;
  cert.c_eps = std::exp(log_c);
  cert.c_eps_half = std::exp(log_c_half);
  cert.pass = log_c - log_c_half < std::log(1.01);
  cert.rate = best_rate;
  return cert;
}

DefaultGrid default_grid(const ToralAutomorphism& f, int per_axis, int max_period, std::int64_t periodic_cap) {
  DefaultGrid g;
  g.points = uniform_grid(f.lattice(), per_axis);
  std::int64_t used = 0;
  for (int n = 1; n <= max_period; ++n) {
    std::int64_t count = 0;
    try {
      count = periodic_point_count(f, n);
    } catch (const Error&) {
      break;
    }
    if (used + count > periodic_cap) break;
    for (const auto& p : periodic_points(f, n, periodic_cap)) g.points.push_back(p.to_point(f.lattice()));
    used += count;
    g.periods_included = n;
  }
  return g;
}

void write_level_csv(std::ostream& out, const std::vector<double>& max_by_level) {
  out << "n,max_a_n\n";
  out.precision(17);
  for (std::size_t i = 0; i < max_by_level.size(); ++i) out << i + 1 << ',' << max_by_level[i] << '\n';
}

}  // namespace coclab
