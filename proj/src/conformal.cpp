#include "coclab/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <optional>
#include <numeric>
#include <set>

#include "coclab/error.hpp"

namespace coclab {

namespace {

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

void require_same_dim(const ConformalStructure& a, const ConformalStructure& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "conformal structures of different dimension");
}

double squared_scale(int d) { return 0.25 * d; }  // dist² = (d/4)·‖W‖_F²

// Orthonormal (Frobenius) basis of traceless symmetric d×d matrices.
std::vector<Mat> traceless_basis(int d) {
  std::vector<Mat> basis;
  for (int k = 1; k < d; ++k) {
    Mat h = Mat::Zero(d, d);
    const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) h(i, i) = s;
    h(k, k) = -k * s;
    basis.push_back(h);
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Mat e = Mat::Zero(d, d);
      e(i, j) = e(j, i) = 1.0 / std::sqrt(2.0);
      basis.push_back(e);
    }
  return basis;
}

Eigen::VectorXd to_coords(const Mat& w, const std::vector<Mat>& basis) {
  Eigen::VectorXd xi(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t a = 0; a < basis.size(); ++a) xi(a) = (w.cwiseProduct(basis[a])).sum();
  return xi;
}

Mat from_coords(const Eigen::VectorXd& xi, const std::vector<Mat>& basis, int d) {
  Mat w = Mat::Zero(d, d);
  for (std::size_t a = 0; a < basis.size(); ++a) w += xi(a) * basis[a];
  return w;
}

}  // namespace

ConformalStructure::ConformalStructure(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() < 1) throw Error(ErrorCode::DimensionMismatch, "structure must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw Error(ErrorCode::InvalidArgument, "conformal structure is not symmetric");
  }
  Mat s = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0)) throw Error(ErrorCode::InvalidArgument, "conformal structure is not positive definite");
  double log_det = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) log_det += std::log(es.eigenvalues()(i));
  m_ = s * std::exp(-log_det / static_cast<double>(s.rows()));
}

ConformalStructure ConformalStructure::identity(int d) { return ConformalStructure(Mat::Identity(d, d)); }

double distance(const ConformalStructure& c1, const ConformalStructure& c2) {
  require_same_dim(c1, c2);
  if (c1.dim() == 2) {
    // Closed form: √M = (M + √det·I)/√(tr M + 2√det), then the symmetric
    // eigenvalues of C1^{-1/2} C2 C1^{-1/2} without cancellation.
    const Mat2 m = c1.matrix();
    const double sd = std::sqrt(m.determinant());
    const Mat2 root = (m + sd * Mat2::Identity()) / std::sqrt(m.trace() + 2 * sd);
    const Mat2 inv_root = root.inverse();
    const Mat2 n = inv_root * Mat2(c2.matrix()) * inv_root;
    const double mean = 0.5 * (n(0, 0) + n(1, 1));
    const double half = std::hypot(0.5 * (n(0, 0) - n(1, 1)), 0.5 * (n(0, 1) + n(1, 0)));
    const double l1 = std::log(mean + half), l2 = std::log(mean - half);
    return std::sqrt(2.0) / 2.0 * std::hypot(l1, l2);
  }
  // Generalized problem C2 v = λ C1 v has the spectrum of C1⁻¹C2.
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(c2.matrix(), c1.matrix(), Eigen::EigenvaluesOnly);
  double sum = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = std::log(es.eigenvalues()(i));
    sum += l * l;
  }
  return std::sqrt(static_cast<double>(c1.dim())) / 2.0 * std::sqrt(sum);
}

ConformalStructure act(const Mat& a, const ConformalStructure& c) {
  if (a.rows() != c.dim() || a.cols() != c.dim()) throw Error(ErrorCode::DimensionMismatch, "action dimension");
  const auto lu = a.fullPivLu();
  if (!lu.isInvertible() || !(condition_number(a) < 1e14)) {
    throw Error(ErrorCode::SingularMatrix, "acting matrix is singular");
  }
  const Mat inv = lu.inverse();
  // The det(AᵀA)^{1/d} factor is absorbed by the det-1 renormalization.
  return ConformalStructure(symmetrize(inv.transpose() * c.matrix() * inv));
}

Mat whitened_log(const ConformalStructure& base, const ConformalStructure& target) {
  require_same_dim(base, target);
  const Mat s = spd_inv_sqrt(base.matrix());
  Mat w = spd_log(symmetrize(s * target.matrix() * s));
  w -= (w.trace() / base.dim()) * Mat::Identity(base.dim(), base.dim());
  return w;
}

ConformalStructure whitened_exp(const ConformalStructure& base, const Mat& tangent) {
  const Mat r = spd_sqrt(base.matrix());
  return ConformalStructure(symmetrize(r * sym_exp(symmetrize(tangent)) * r));
}

ConformalStructure geodesic_point(const ConformalStructure& c1, const ConformalStructure& c2, double t) {
  return whitened_exp(c1, t * whitened_log(c1, c2));
}

PerturbationBound perturbation_bound_check(const ConformalStructure& c, const Mat& a) {
  const int d = c.dim();
  if (a.rows() != d || a.cols() != d) throw Error(ErrorCode::DimensionMismatch, "perturbation dimension");
  const double cond = spectral_norm(c.matrix()) * spectral_norm(c.matrix().inverse());
  const double threshold = 1.0 / (6.0 * cond);
  const double delta = spectral_norm(a - Mat::Identity(d, d));
  if (delta > threshold) {
    throw Error(ErrorCode::HypothesisViolated,
                "‖A − Id‖ = " + std::to_string(delta) + " exceeds " + std::to_string(threshold));
  }
  return {distance(c, act(a, c)), 3.0 * d * cond * delta, threshold};
}

ConformalStructure karcher_mean(std::span<const ConformalStructure> structures, std::span<const double> weights,
                                const KarcherOptions& opt) {
  if (structures.empty() || structures.size() != weights.size()) {
    throw Error(ErrorCode::InvalidArgument, "karcher mean needs matching nonempty structures and weights");
  }
  double total = 0;
  for (double w : weights) {
    if (!(w > 0)) throw Error(ErrorCode::InvalidArgument, "karcher weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "karcher weights must sum to 1");
  for (const auto& s : structures) require_same_dim(s, structures.front());
  if (structures.size() == 1) return structures.front();

  auto objective = [&](const ConformalStructure& c) {
    double f = 0;
    for (std::size_t i = 0; i < structures.size(); ++i) {
      const double dd = distance(c, structures[i]);
      f += weights[i] * dd * dd;
    }
    return f;
  };
  ConformalStructure current = structures.front();
  double f_current = objective(current);
  for (int it = 0; it < opt.max_iterations; ++it) {
    Mat grad = Mat::Zero(current.dim(), current.dim());
    for (std::size_t i = 0; i < structures.size(); ++i) grad += weights[i] * whitened_log(current, structures[i]);
    if (grad.norm() < opt.gradient_tol) return current;
    double step = 1.0;
    for (int halving = 0;; ++halving) {
      ConformalStructure trial = whitened_exp(current, step * grad);
      const double f_trial = objective(trial);
      if (f_trial <= f_current + 1e-14 * (1.0 + f_current) || halving >= 40) {
        current = trial;
        f_current = f_trial;
        break;
      }
      step *= 0.5;
    }
  }
  throw Error(ErrorCode::NoConvergence, "karcher iteration did not reach the gradient tolerance");
}

ConformalStructure karcher_mean(std::span<const ConformalStructure> structures, const KarcherOptions& opt) {
  std::vector<double> w(structures.size(), 1.0 / static_cast<double>(structures.size()));
  double sum = std::accumulate(w.begin(), w.end(), 0.0);
  w.back() += 1.0 - sum;
  return karcher_mean(structures, std::span<const double>(w), opt);
}

namespace {

struct ActiveSetSolution {
  ConformalStructure center;
  std::vector<double> weights;
  double radius_sq;
  bool converged;
};

// Newton/Gauss–Newton on the optimality system for a fixed support set.
ActiveSetSolution solve_support(std::span<const ConformalStructure> pts, const std::vector<int>& support,
                                const ConformalStructure& start, const std::vector<Mat>& basis) {
  const int d = start.dim();
  const int m = static_cast<int>(basis.size());
  const int s = static_cast<int>(support.size());
  const double q = squared_scale(d);

  Eigen::VectorXd xi = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(s, 1.0 / s);
  double r2 = 0;
  for (int i : support) r2 += std::pow(distance(start, pts[i]), 2) / s;

  auto logs_at = [&](const Eigen::VectorXd& coords) {
    const ConformalStructure c = whitened_exp(start, from_coords(coords, basis, d));
    std::vector<Eigen::VectorXd> out;
    out.reserve(s);
    for (int i : support) out.push_back(to_coords(whitened_log(c, pts[i]), basis));
    return out;
  };
  auto residual = [&](const std::vector<Eigen::VectorXd>& logs, const Eigen::VectorXd& wv, double rr) {
    Eigen::VectorXd r(m + s + 1);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < s; ++k) g += wv(k) * logs[k];
    r.head(m) = g;
    for (int k = 0; k < s; ++k) r(m + k) = q * logs[k].squaredNorm() - rr;
    r(m + s) = wv.sum() - 1.0;
    return r;
  };

  auto logs = logs_at(xi);
  Eigen::VectorXd res = residual(logs, w, r2);
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    if (res.norm() < 1e-13) {
      converged = true;
      break;
    }
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m + s + 1, m + s + 1);
    const double h = 1e-6;
    for (int a = 0; a < m; ++a) {
      Eigen::VectorXd xp = xi, xm = xi;
      xp(a) += h;
      xm(a) -= h;
      jac.col(a) = (residual(logs_at(xp), w, r2) - residual(logs_at(xm), w, r2)) / (2 * h);
    }
    for (int k = 0; k < s; ++k) {
      jac.block(0, m + k, m, 1) = logs[k];
      jac(m + s, m + k) = 1.0;
    }
    for (int k = 0; k < s; ++k) jac(m + k, m + s) = -1.0;
    Eigen::VectorXd delta = jac.completeOrthogonalDecomposition().solve(-res);
    // Trust region on the centre move.
    const double move = delta.head(m).norm(), cap = 0.5 * std::sqrt(std::max(r2, 1e-12)) + 1e-3;
    if (!std::isfinite(move)) break;
    if (move > cap) delta *= cap / move;

    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const Eigen::VectorXd xi_t = xi + step * delta.head(m);
      const Eigen::VectorXd w_t = w + step * delta.segment(m, s);
      const double r2_t = r2 + step * delta(m + s);
      std::vector<Eigen::VectorXd> logs_t;
      Eigen::VectorXd res_t;
      try {
        logs_t = logs_at(xi_t);
        res_t = residual(logs_t, w_t, r2_t);
      } catch (const Error&) {
        step *= 0.5;
        continue;
      }
      if (res_t.norm() < res.norm()) {
        xi = xi_t;
        w = w_t;
        r2 = r2_t;
        logs = std::move(logs_t);
        res = res_t;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      converged = res.norm() < 1e-11;
      break;
    }
  }
  return {whitened_exp(start, from_coords(xi, basis, d)), std::vector<double>(w.data(), w.data() + s), r2,
          converged};
}

}  // namespace

EnclosingBall minimal_enclosing_ball(std::span<const ConformalStructure> structures, const BallOptions& opt) {
  if (structures.empty()) throw Error(ErrorCode::InvalidArgument, "enclosing ball of an empty set");
  if (structures.size() == 1) return {structures.front(), 0.0, 1, true};
  const int d = structures.front().dim();
  for (const auto& s : structures) require_same_dim(s, structures.front());
  const int n = static_cast<int>(structures.size());

  auto distances_from = [&](const ConformalStructure& c) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = distance(c, structures[i]);
    return out;
  };

  // Geodesic Bădoiu–Clarkson: step toward the farthest point by 1/(k+1).
  ConformalStructure center = structures.front();
  std::vector<double> dist = distances_from(center);
  for (int k = 1; k <= opt.warm_start_iterations; ++k) {
    const int far = static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    if (dist[far] == 0) break;
    center = geodesic_point(center, structures[far], 1.0 / (k + 1));
    dist = distances_from(center);
  }
  double radius = *std::max_element(dist.begin(), dist.end());
  if (radius < 1e-12 || d < 2) {
    return {center, radius, n, true};
  }

  const auto basis = traceless_basis(d);
  const std::size_t cap = basis.size() + 1;
  // Start from the farthest point and the point farthest from it; nearly
  // coincident starters make the support system singular.
  const int first = static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
  int second = first == 0 ? 1 : 0;
  double spread = -1;
  for (int i = 0; i < n; ++i) {
    const double s = distance(structures[i], structures[first]);
    if (s > spread) {
      spread = s;
      second = i;
    }
  }
  std::vector<int> support{first, second};
  std::sort(support.begin(), support.end());

  auto finish = [](const ConformalStructure& c, const std::vector<double>& dd) {
    const double max_d = *std::max_element(dd.begin(), dd.end());
    int count = 0;
    for (double v : dd)
      if (v >= max_d - 1e-8) ++count;
    return EnclosingBall{c, max_d, count, count >= 2};
  };
  auto exhaustive = [&](std::vector<int> candidates) -> std::optional<EnclosingBall> {
    std::sort(candidates.begin(), candidates.end());
    const int k = static_cast<int>(candidates.size());
    if (k > 16) return std::nullopt;
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
      const int bits = std::popcount(mask);
      if (bits < 2 || bits > static_cast<int>(cap)) continue;
      std::vector<int> trial;
      for (int b = 0; b < k; ++b)
        if (mask & (1u << b)) trial.push_back(candidates[b]);
      const ActiveSetSolution t = solve_support(structures, trial, center, basis);
      if (!t.converged || *std::min_element(t.weights.begin(), t.weights.end()) < -1e-10) continue;
      const double r = std::sqrt(std::max(0.0, t.radius_sq));
      const std::vector<double> dd = distances_from(t.center);
      if (*std::max_element(dd.begin(), dd.end()) <= r + 1e-10) return finish(t.center, dd);
    }
    return std::nullopt;
  };

  std::set<std::vector<int>> seen;
  std::vector<int> pool;
  int newest = -1;
  for (int round = 0; round < opt.max_refinements; ++round) {
    if (support.size() == 1) {
      // A single support point cannot pin a nonzero radius; add the next farthest.
      int best = -1;
      for (int i = 0; i < n; ++i)
        if (distance(structures[i], structures[support[0]]) >= 1e-12 && (best < 0 || dist[i] > dist[best])) best = i;
      if (best < 0) break;
      support.push_back(best);
      std::sort(support.begin(), support.end());
    }
    for (int i : support)
      if (std::find(pool.begin(), pool.end(), i) == pool.end()) pool.push_back(i);
    if (!seen.insert(support).second) {
      // The pivoting cycles; settle it by trying every support drawn from
      // the points visited so far.
      if (auto ball = exhaustive(pool)) return *ball;
      break;
    }
    ActiveSetSolution sol = solve_support(structures, support, center, basis);
    auto neg = std::min_element(sol.weights.begin(), sol.weights.end());
    if (!sol.converged && newest >= 0 && support.size() > 2) {
      // The new point overfills the support: swap out the member whose
      // removal leaves a feasible system with the largest radius.
      std::vector<int> best;
      double best_r2 = -1;
      for (int j : support) {
        if (j == newest) continue;
        std::vector<int> trial;
        for (int i : support)
          if (i != j) trial.push_back(i);
        const ActiveSetSolution t = solve_support(structures, trial, center, basis);
        if (!t.converged || *std::min_element(t.weights.begin(), t.weights.end()) < -1e-10) continue;
        // Prefer swaps whose ball still holds the removed point.
        const bool holds = distance(t.center, structures[j]) <= std::sqrt(std::max(0.0, t.radius_sq)) + 1e-11;
        const double score = t.radius_sq + (holds ? 1e6 : 0.0);
        if (score > best_r2) {
          best = trial;
          best_r2 = score;
        }
      }
      newest = -1;
      if (!best.empty()) {
        support = best;
        continue;
      }
    }
    if (!sol.converged) {
      // Degenerate support: drop the least-weighted point.
      if (support.size() <= 2) break;
      support.erase(support.begin() + (neg - sol.weights.begin()));
      continue;
    }
    if (*neg < -1e-10) {
      support.erase(support.begin() + (neg - sol.weights.begin()));
      continue;
    }
    const double r = std::sqrt(std::max(0.0, sol.radius_sq));
    const std::vector<double> dd = distances_from(sol.center);
    int worst = -1;
    for (int i = 0; i < n; ++i) {
      if (std::find(support.begin(), support.end(), i) != support.end()) continue;
      if (dd[i] > r + 1e-11 && (worst < 0 || dd[i] > dd[worst])) worst = i;
    }
    if (worst >= 0) {
      newest = worst;
      support.push_back(worst);
      std::sort(support.begin(), support.end());
      center = sol.center;
      dist = dd;
      continue;
    }
    return finish(sol.center, dd);
  }
  throw Error(ErrorCode::NoConvergence, "enclosing-ball refinement did not settle");
}

}  // namespace coclab
