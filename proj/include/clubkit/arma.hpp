#pragma once

#include <span>
#include <vector>

namespace clubkit {

/// ARMA(p,1) for a differenced series x_t:
///   x_t = sum_k phi_k x_{t-k} + eta_t - theta eta_{t-1}
/// fitted by conditional sum of squares, conditioning on the first `start`
/// observations (start >= p) with eta_{start-1} = 0.
struct ArmaFit {
  int p = 0;
  std::vector<double> phi;
  double theta = 0.0;              // in [0, 1]
  std::vector<double> residuals;   // eta_t for t = start .. n-1
  int start = 0;                   // index in x of residuals[0]
  double sigma2_eta = 0.0;         // css / residuals.size()
  double css = 0.0;
};

/// Conditional sum of squares at a given theta, with phi profiled out by OLS.
/// Returns the minimising phi through `phi_out` when non-null.
double profile_css(std::span<const double> x, int p, int start, double theta, std::vector<double>* phi_out = nullptr);

/// Hannan-Rissanen starting value for theta (long-AR residual regression),
/// clamped to [0, 1].
double hannan_rissanen_theta(std::span<const double> x, int p);

/// CSS fit. Needs x.size() > p + 2; conditions on the first p observations.
ArmaFit fit_arma(std::span<const double> x, int p);
/// CSS fit conditioning on the first `start` observations.
ArmaFit fit_arma(std::span<const double> x, int p, int start);

/// AIC = n log(css/n) + 2(p+1) over p in [0, p_max] on the common sample that
/// conditions on the first p_max observations. Ties go to the smaller p.
/// Needs x.size() >= 4 (p_max + 1).
int select_lag_aic(std::span<const double> x, int p_max);

/// Residuals minus their mean.
std::vector<double> center_residuals(std::span<const double> residuals);
std::vector<double> center_residuals(const ArmaFit& fit);

/// First differences x_t = y_{t+1} - y_t, length y.size() - 1.
std::vector<double> difference(std::span<const double> y);

}  // namespace clubkit
