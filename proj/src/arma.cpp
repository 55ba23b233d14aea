#include "clubkit/arma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "clubkit/errors.hpp"

namespace clubkit {

namespace {

constexpr double kGridStep = 0.05;
constexpr int kBrentBits = 40;

struct Filtered {
  Eigen::VectorXd w;   // x filtered by 1/(1 - theta L)
  Eigen::MatrixXd z;   // lagged x, same filter, one column per lag
};

Filtered filter(std::span<const double> x, int p, int start, double theta) {
  const int n = static_cast<int>(x.size());
  const int m = n - start;
  // The last column carries the presample innovation: its effect on eta_t decays
  // as theta^(t-start) (scaled by 1/theta so theta = 0 stays well posed), and at
  // theta = 1 it is a level intercept.
  Filtered f{Eigen::VectorXd(m), Eigen::MatrixXd(m, p + 1)};
  double g = 1.0;
  double w_prev = 0.0;
  Eigen::RowVectorXd z_prev = Eigen::RowVectorXd::Zero(p);
  for (int i = 0; i < m; ++i) {
    const int t = start + i;
    w_prev = x[t] + theta * w_prev;
    f.w[i] = w_prev;
    for (int k = 0; k < p; ++k) {
      z_prev[k] = x[t - k - 1] + theta * z_prev[k];
      f.z(i, k) = z_prev[k];
    }
    f.z(i, p) = g;
    g *= theta;
  }
  return f;
}

struct Solved {
  double css;
  Eigen::VectorXd phi;
  Eigen::VectorXd resid;
};

Solved solve(const Filtered& f, int p) {
  if (f.z.cols() == 0) return {f.w.squaredNorm(), Eigen::VectorXd(0), f.w};
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(f.z);
  if (qr.rank() < f.z.cols()) throw Error(Errc::NonConvergence, "lagged design is rank deficient");
  Eigen::VectorXd phi = qr.solve(f.w);
  Eigen::VectorXd resid = f.w - f.z * phi;
  return {resid.squaredNorm(), phi.head(p), std::move(resid)};
}

void check_length(std::span<const double> x, int p, int start) {
  if (p < 0) throw Error(Errc::InvalidConfig, "negative AR order");
  if (start < p) throw Error(Errc::InvalidConfig, "conditioning start must be >= p");
  if (static_cast<int>(x.size()) <= std::max(p + 2, start + 1))
    throw Error(Errc::SeriesTooShort, "series of length " + std::to_string(x.size()) + " too short for ARMA(" +
                                          std::to_string(p) + ",1)");
}

}  // namespace

double profile_css(std::span<const double> x, int p, int start, double theta, std::vector<double>* phi_out) {
  check_length(x, p, start);
  auto s = solve(filter(x, p, start, theta), p);
  if (phi_out) phi_out->assign(s.phi.data(), s.phi.data() + s.phi.size());
  return s.css;
}

double hannan_rissanen_theta(std::span<const double> x, int p) {
  const int n = static_cast<int>(x.size());
  const int h = std::min(std::max(p + 2, static_cast<int>(std::sqrt(static_cast<double>(n)))), n / 3);
  if (h < 1 || n - h - 1 <= p + 1) return 0.5;
  // long autoregression
  Eigen::MatrixXd a(n - h, h);
  Eigen::VectorXd b(n - h);
  for (int t = h; t < n; ++t) {
    b[t - h] = x[t];
    for (int k = 0; k < h; ++k) a(t - h, k) = x[t - k - 1];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_long(a);
  if (qr_long.rank() < h) return 0.5;
  const Eigen::VectorXd e_tail = b - a * qr_long.solve(b);
  std::vector<double> e(n, 0.0);
  for (int t = h; t < n; ++t) e[t] = e_tail[t - h];
  // x_t on x_{t-1..t-p} and e_{t-1}
  const int first = h + 1;
  Eigen::MatrixXd c(n - first, p + 1);
  Eigen::VectorXd d(n - first);
  for (int t = first; t < n; ++t) {
    d[t - first] = x[t];
    for (int k = 0; k < p; ++k) c(t - first, k) = x[t - k - 1];
    c(t - first, p) = e[t - 1];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c);
  if (qr.rank() < p + 1) return 0.5;
  const double coef = qr.solve(d)[p];
  if (!std::isfinite(coef)) return 0.5;
  return std::clamp(-coef, 0.0, 1.0);
}

ArmaFit fit_arma(std::span<const double> x, int p) { return fit_arma(x, p, p); }

ArmaFit fit_arma(std::span<const double> x, int p, int start) {
  check_length(x, p, start);
  auto objective = [&](double theta) { return solve(filter(x, p, start, theta), p).css; };

  double best_theta = 0.0;
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double theta) {
    const double v = objective(theta);
    if (v < best) {
      best = v;
      best_theta = theta;
    }
  };
  const int steps = static_cast<int>(std::lround(1.0 / kGridStep));
  for (int g = 0; g <= steps; ++g) consider(g * kGridStep);
  consider(hannan_rissanen_theta(x, p));
  if (!std::isfinite(best)) throw Error(Errc::NonConvergence, "CSS objective is not finite");

  const double lo = std::max(0.0, best_theta - kGridStep);
  const double hi = std::min(1.0, best_theta + kGridStep);
  std::uintmax_t max_iter = 200;
  auto [theta_b, css_b] = boost::math::tools::brent_find_minima(objective, lo, hi, kBrentBits, max_iter);
  if (max_iter >= 200 || !std::isfinite(css_b)) throw Error(Errc::NonConvergence, "Brent search did not converge");
  if (css_b < best) {
    best = css_b;
    best_theta = theta_b;
  }

  auto s = solve(filter(x, p, start, best_theta), p);
  ArmaFit fit;
  fit.p = p;
  fit.phi.assign(s.phi.data(), s.phi.data() + s.phi.size());
  fit.theta = best_theta;
  fit.residuals.assign(s.resid.data(), s.resid.data() + s.resid.size());
  fit.start = start;
  fit.css = s.css;
  fit.sigma2_eta = s.css / static_cast<double>(s.resid.size());
  return fit;
}

int select_lag_aic(std::span<const double> x, int p_max) {
  if (p_max < 0) throw Error(Errc::InvalidConfig, "negative p_max");
  if (static_cast<int>(x.size()) < 4 * (p_max + 1))
    throw Error(Errc::SeriesTooShort, "lag search up to " + std::to_string(p_max) + " needs at least " +
                                          std::to_string(4 * (p_max + 1)) + " observations");
  if (p_max == 0) return 0;
  int best_p = 0;
  double best_aic = std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(static_cast<int>(x.size()) - p_max);
  for (int p = 0; p <= p_max; ++p) {
    double css = 0.0;
    try {
      css = fit_arma(x, p, p_max).css;
    } catch (const Error& e) {
      if (e.code() != Errc::NonConvergence || p == 0) throw;
      continue;
    }
    const double aic = n * std::log(std::max(css / n, std::numeric_limits<double>::min())) + 2.0 * (p + 1);
    if (aic < best_aic) {
      best_aic = aic;
      best_p = p;
    }
  }
  return best_p;
}

std::vector<double> center_residuals(std::span<const double> residuals) {
  if (residuals.empty()) throw Error(Errc::EmptyInput, "no residuals to centre");
  const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / static_cast<double>(residuals.size());
  std::vector<double> out(residuals.begin(), residuals.end());
  for (double& v : out) v -= mean;
  return out;
}

std::vector<double> center_residuals(const ArmaFit& fit) { return center_residuals(fit.residuals); }

std::vector<double> difference(std::span<const double> y) {
  if (y.size() < 2) throw Error(Errc::SeriesTooShort, "need two observations to difference");
  std::vector<double> out(y.size() - 1);
  for (std::size_t t = 0; t + 1 < y.size(); ++t) out[t] = y[t + 1] - y[t];
  return out;
}

}  // namespace clubkit
