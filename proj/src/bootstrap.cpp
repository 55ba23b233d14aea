#include "clubkit/bootstrap.hpp"

#include <algorithm>
#include <exception>

#include "clubkit/errors.hpp"

namespace clubkit {

void validate(const BootstrapConfig& cfg) {
  if (cfg.R < 99) throw Error(Errc::InvalidConfig, "bootstrap needs R >= 99");
  if (cfg.p_max < 0) throw Error(Errc::InvalidConfig, "p_max must be >= 0");
  if (cfg.bandwidth < 0) throw Error(Errc::InvalidConfig, "bandwidth must be >= 0");
}

ArmaFit fit_difference_model(std::span<const double> level, int p_max, bool* fell_back) {
  const auto dx = difference(level);
  const int p = select_lag_aic(dx, p_max);
  if (fell_back) *fell_back = false;
  try {
    return fit_arma(dx, p);
  } catch (const Error& e) {
    if (e.code() != Errc::NonConvergence || p == 0) throw;
  }
  if (fell_back) *fell_back = true;
  return fit_arma(dx, 0);
}

std::vector<double> recursive_levels(std::span<const double> phi, std::span<const double> innovations) {
  const std::size_t T = innovations.size();
  const std::size_t p = phi.size();
  std::vector<double> dy(T, 0.0), y(T, 0.0);
  double eta_prev = 0.0, level = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double v = innovations[t] - eta_prev;
    for (std::size_t k = 1; k <= p && k <= t; ++k) v += phi[k - 1] * dy[t - k];
    dy[t] = v;
    level += v;
    y[t] = level;
    eta_prev = innovations[t];
  }
  return y;
}

std::vector<double> bootstrap_sample(const ArmaFit& fit, int T, Engine& rng) {
  if (T < fit.p + 2) throw Error(Errc::SeriesTooShort, "bootstrap length below p + 2");
  const auto pool = center_residuals(fit);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<double> eta(static_cast<std::size_t>(T));
  for (double& e : eta) e = pool[pick(rng)];
  return recursive_levels(fit.phi, eta);
}

JointResiduals align_residuals(std::span<const ArmaFit> fits) {
  if (fits.empty()) throw Error(Errc::EmptyInput, "no fits to align");
  int first = 0, end = -1;
  for (const auto& f : fits) {
    first = std::max(first, f.start);
    const int fend = f.start + static_cast<int>(f.residuals.size());
    end = end < 0 ? fend : std::min(end, fend);
  }
  if (end - first < 1) throw Error(Errc::SeriesTooShort, "fits share no residual time points");
  JointResiduals out;
  out.pools.reserve(fits.size());
  for (const auto& f : fits) {
    auto b = f.residuals.begin() + (first - f.start);
    out.pools.push_back(center_residuals(std::span<const double>(&*b, static_cast<std::size_t>(end - first))));
  }
  return out;
}

namespace {

double null_draw(std::span<const ArmaFit> fits, const JointResiduals& joint, int T, const BootstrapConfig& cfg,
                 std::uint64_t stream_key, int r) {
  auto rng = make_engine(derive_seed(cfg.seed, "bootstrap", {stream_key, static_cast<std::uint64_t>(r)}));
  std::uniform_int_distribution<std::size_t> pick(0, joint.length() - 1);
  std::vector<std::size_t> idx(static_cast<std::size_t>(T));
  for (auto& i : idx) i = pick(rng);
  Eigen::MatrixXd panel(static_cast<Eigen::Index>(fits.size()), T);
  std::vector<double> eta(static_cast<std::size_t>(T));
  for (std::size_t s = 0; s < fits.size(); ++s) {
    const auto& pool = joint.pools[s];
    for (int t = 0; t < T; ++t) eta[t] = pool[idx[t]];
    const auto y = recursive_levels(fits[s].phi, eta);
    for (int t = 0; t < T; ++t) panel(static_cast<Eigen::Index>(s), t) = y[t];
  }
  return kpss_stat(panel, cfg.variant, cfg.bandwidth);
}

void check_inputs(std::span<const ArmaFit> fits, int T, const BootstrapConfig& cfg) {
  validate(cfg);
  if (fits.empty()) throw Error(Errc::EmptyInput, "no series to bootstrap");
  for (const auto& f : fits)
    if (T < f.p + 2) throw Error(Errc::SeriesTooShort, "bootstrap length below p + 2");
}

}  // namespace

std::vector<double> bootstrap_null_draws(std::span<const ArmaFit> fits, int T, const BootstrapConfig& cfg,
                                         std::uint64_t stream_key) {
  check_inputs(fits, T, cfg);
  const auto joint = align_residuals(fits);
  std::vector<double> draws(static_cast<std::size_t>(cfg.R));
  std::vector<std::exception_ptr> failure(static_cast<std::size_t>(cfg.R));
#pragma omp parallel for schedule(static)
  for (int r = 0; r < cfg.R; ++r) {
    try {
      draws[r] = null_draw(fits, joint, T, cfg, stream_key, r);
    } catch (...) {
      failure[r] = std::current_exception();
    }
  }
  for (auto& f : failure)
    if (f) std::rethrow_exception(f);
  return draws;
}

std::vector<double> serial::bootstrap_null_draws(std::span<const ArmaFit> fits, int T, const BootstrapConfig& cfg,
                                                 std::uint64_t stream_key) {
  check_inputs(fits, T, cfg);
  const auto joint = align_residuals(fits);
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(cfg.R));
  for (int r = 0; r < cfg.R; ++r) draws.push_back(null_draw(fits, joint, T, cfg, stream_key, r));
  return draws;
}

double bootstrap_pvalue_from_draws(double observed, std::span<const double> draws) {
  const auto exceed = std::count_if(draws.begin(), draws.end(), [&](double d) { return d >= observed; });
  return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(draws.size()) + 1.0);
}

StatResult bootstrap_pvalue(const Eigen::MatrixXd& series, std::span<const ArmaFit> fits, const BootstrapConfig& cfg,
                            std::uint64_t stream_key) {
  if (static_cast<std::size_t>(series.rows()) != fits.size())
    throw Error(Errc::DimensionMismatch, "one fit per series required");
  StatResult out;
  out.method = Method::Bootstrap;
  out.variant = cfg.variant;
  out.dim = static_cast<int>(series.rows());
  out.series = out.dim;
  out.statistic = kpss_stat(series, cfg.variant, cfg.bandwidth);
  const auto draws = bootstrap_null_draws(fits, static_cast<int>(series.cols()), cfg, stream_key);
  out.p_value = bootstrap_pvalue_from_draws(out.statistic, draws);
  return out;
}

StatResult bootstrap_pvalue(std::span<const PairDiff> panel, const BootstrapConfig& cfg, std::uint64_t stream_key) {
  validate(cfg);
  const Eigen::MatrixXd series = stack(panel);
  std::vector<ArmaFit> fits;
  fits.reserve(panel.size());
  for (const auto& d : panel) {
    try {
      fits.push_back(fit_difference_model(std::span<const double>(d.series.data(), d.series.size()), cfg.p_max));
    } catch (const Error& e) {
      throw Error(e.code(), "pair (" + std::to_string(d.i) + "," + std::to_string(d.j) + "): " + e.what());
    }
  }
  return bootstrap_pvalue(series, fits, cfg, stream_key);
}

}  // namespace clubkit
