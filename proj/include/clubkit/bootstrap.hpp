#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clubkit/arma.hpp"
#include "clubkit/kpss.hpp"
#include "clubkit/panel.hpp"
#include "clubkit/rng.hpp"

namespace clubkit {

struct BootstrapConfig {
  int R = 200;
  int p_max = 4;
  int bandwidth = kDefaultBandwidth;
  std::uint64_t seed = 0;
  Variant variant = Variant::Level;
};

void validate(const BootstrapConfig& cfg);

/// ARMA(p,1) fit to the first differences of one level series, lag chosen by
/// AIC. A NonConvergence at the chosen lag falls back to p = 0; `fell_back`
/// reports whether that happened.
ArmaFit fit_difference_model(std::span<const double> level, int p_max, bool* fell_back = nullptr);

/// Level series y_1..y_T from innovations eta_1..eta_T (eta_0 = 0):
///   dy_t = sum_k phi_k dy_{t-k} + eta_t - eta_{t-1},  y_t = y_{t-1} + dy_t,
/// with zero initial differences and y_0 = 0. The MA coefficient is fixed at one.
std::vector<double> recursive_levels(std::span<const double> phi, std::span<const double> innovations);

/// One bootstrap level series of length T, innovations drawn with replacement
/// from the centred residuals of `fit`.
std::vector<double> bootstrap_sample(const ArmaFit& fit, int T, Engine& rng);

/// Centred residual pools aligned on the time points every fit has a residual
/// for, so one drawn time index gives a contemporaneous residual vector.
struct JointResiduals {
  std::vector<std::vector<double>> pools;  // one per series, equal lengths
  std::size_t length() const { return pools.empty() ? 0 : pools.front().size(); }
};
JointResiduals align_residuals(std::span<const ArmaFit> fits);

/// Null statistics tau^r, r = 0..R-1, for a panel whose rows have the given
/// fits. Replicate r draws from substream (cfg.seed, stream_key, r).
std::vector<double> bootstrap_null_draws(std::span<const ArmaFit> fits, int T, const BootstrapConfig& cfg,
                                         std::uint64_t stream_key);

/// (1 + #{draws >= observed}) / (R + 1)
double bootstrap_pvalue_from_draws(double observed, std::span<const double> draws);

/// Full test on an observed m x T panel of level differences.
StatResult bootstrap_pvalue(const Eigen::MatrixXd& series, std::span<const ArmaFit> fits, const BootstrapConfig& cfg,
                            std::uint64_t stream_key);
StatResult bootstrap_pvalue(std::span<const PairDiff> panel, const BootstrapConfig& cfg, std::uint64_t stream_key = 0);

namespace serial {
std::vector<double> bootstrap_null_draws(std::span<const ArmaFit> fits, int T, const BootstrapConfig& cfg,
                                         std::uint64_t stream_key);
}

}  // namespace clubkit
