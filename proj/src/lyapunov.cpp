#include "coclab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "coclab/error.hpp"
#include "coclab/parallel.hpp"

namespace coclab {

ExponentPair top_bottom_exponents(const CocycleSpec& c, const TorusPoint& x, long n, const IterateOptions& opt) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "orbit length must be positive");
  const IterateResult r = iterate(c, x, n, opt);
  return {r.log_norm / static_cast<double>(n), r.log_conorm / static_cast<double>(n), n};
}

namespace {

void rescale(Mat& m, double& log_scale) {
  const double s = m.cwiseAbs().maxCoeff();
  if (s > 1e30 || (s < 1e-30 && s > 0)) {
    m /= s;
    log_scale += std::log(s);
  }
}

}  // namespace

SpectrumEstimate full_spectrum(const CocycleSpec& c, const TorusPoint& x, long n, const IterateOptions& opt) {
  const int d = c.fiber_dim();
  if (n < d) throw Error(ErrorCode::InvalidArgument, "orbit length must be at least the fiber dimension");
  if (n > opt.max_steps) throw Error(ErrorCode::InvalidArgument, "orbit length exceeds the iterate bound");

  SpectrumEstimate est;
  est.orbit_length = n;
  est.x0 = x;

  Mat q = Mat::Identity(d, d);
  Eigen::VectorXd log_r = Eigen::VectorXd::Zero(d);
  double log_det = 0;
  // Forward and inverse products for the norm-based history columns.
  Mat prod = Mat::Identity(d, d), inv = Mat::Identity(d, d);
  double prod_scale = 0, inv_scale = 0;

  TorusPoint p = x;
  long next_sample = 1;
  for (long k = 1; k <= n; ++k) {
    const Mat fx = c.at(p);
    log_det += std::log(std::abs(fx.determinant()));
    Eigen::HouseholderQR<Mat> qr(fx * q);
    const Mat rm = qr.matrixQR().triangularView<Eigen::Upper>();
    q = qr.householderQ() * Mat::Identity(d, d);
    for (int i = 0; i < d; ++i) log_r(i) += std::log(std::abs(rm(i, i)));

    prod = fx * prod;
    inv = inv * checked_inverse(fx, opt.cond_cap);
    rescale(prod, prod_scale);
    rescale(inv, inv_scale);
    p = c.base().step(p);

    if (k == next_sample || k == n) {
      const double nn = static_cast<double>(k);
      const double top = (std::log(spectral_norm(prod)) + prod_scale) / nn;
      const double bottom = -(std::log(spectral_norm(inv)) + inv_scale) / nn;
      est.convergence_history.push_back({k, top, bottom, top - bottom});
      if (k == next_sample) next_sample *= 2;
    }
  }
  const double nn = static_cast<double>(n);
  est.exponents.resize(d);
  for (int i = 0; i < d; ++i) est.exponents[i] = log_r(i) / nn;
  std::sort(est.exponents.begin(), est.exponents.end(), std::greater<>());
  est.log_det_rate = log_det / nn;
  return est;
}

std::vector<double> periodic_exponents(const CocycleSpec& c, const RationalPoint& p, int period) {
  if (period < 1) throw Error(ErrorCode::InvalidArgument, "period must be positive");
  const auto& f = c.base();
  if (!is_periodic(f, p, period)) throw Error(ErrorCode::NotPeriodic, "point is not fixed by the given power");
  const int d = c.fiber_dim();
  Mat prod = Mat::Identity(d, d);
  double log_scale = 0;
  RationalPoint q = p;
  for (int k = 0; k < period; ++k) {
    prod = c.at(q.coords()) * prod;
    rescale(prod, log_scale);
    q = f.step(q);
  }
  Eigen::EigenSolver<Mat> es(prod, false);
  std::vector<double> out(d);
  for (int i = 0; i < d; ++i) out[i] = (std::log(std::abs(es.eigenvalues()(i))) + log_scale) / period;
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

OneExponentReport one_exponent_test(const CocycleSpec& c, int max_period, double tol, std::int64_t cap) {
  if (max_period < 1) throw Error(ErrorCode::InvalidArgument, "maximal period must be positive");
  OneExponentReport report;
  bool first = true;
  for (int n = 1; n <= max_period; ++n) {
    const auto pts = periodic_points(c.base(), n, cap);
    std::vector<double> gaps(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
      const auto e = periodic_exponents(c, pts[i], n);
      gaps[i] = e.front() - e.back();
    });
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (first || gaps[i] > report.gap) {
        report.gap = gaps[i];
        report.worst = pts[i];
        report.worst_period = n;
        first = false;
      }
    }
    report.points_checked += static_cast<long>(pts.size());
  }
  report.pass = report.gap <= tol;
  return report;
}

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows) {
  out << "n,lambda_plus,lambda_minus,logK_over_n\n";
  out.precision(17);
  for (const auto& r : rows) out << r.n << ',' << r.top << ',' << r.bottom << ',' << r.log_k_over_n << '\n';
}

}  // namespace coclab
