#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clubkit/io.hpp"
#include "clubkit/panel.hpp"
#include "clubkit/rng.hpp"

namespace clubkit::testing {

inline std::vector<std::string> make_ids(Index n) {
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i + 1));
  return ids;
}

inline Panel make_panel(const Eigen::MatrixXd& values) {
  return Panel(make_ids(static_cast<Index>(values.rows())), values);
}

inline Eigen::VectorXd white_noise(int T, Engine& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Eigen::VectorXd x(T);
  for (int t = 0; t < T; ++t) x[t] = g(rng);
  return x;
}

inline Eigen::VectorXd random_walk(int T, Engine& rng) {
  Eigen::VectorXd x = white_noise(T, rng);
  for (int t = 1; t < T; ++t) x[t] += x[t - 1];
  return x;
}

/// Stationary AR(1) with unit innovation variance after `burn` start-up steps.
inline Eigen::VectorXd ar1(int T, double phi, Engine& rng, int burn = 50) {
  std::normal_distribution<double> g;
  double e = 0.0;
  for (int t = 0; t < burn; ++t) e = phi * e + g(rng);
  Eigen::VectorXd x(T);
  for (int t = 0; t < T; ++t) x[t] = e = phi * e + g(rng);
  return x;
}

/// Two regions sharing a common stochastic trend: y_i = alpha_i + r_t + eps_i,
/// r a random walk with AR(1) increments (rho_v) and eps_i AR(1)(rho) with
/// unconditional variance one.
inline Eigen::MatrixXd null_pair(int T, double rho, double rho_v, Engine& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd y(2, T);
  double v = 0.0, r = 0.0;
  Eigen::VectorXd trend(T);
  for (int t = 0; t < T; ++t) {
    v = rho_v * v + std::sqrt(1.0 - rho_v * rho_v) * g(rng);
    trend[t] = r += v;
  }
  const double sd = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < 2; ++i) {
    double e = 0.0;
    for (int t = 0; t < 50; ++t) e = rho * e + sd * g(rng);
    for (int t = 0; t < T; ++t) {
      e = rho * e + sd * g(rng);
      y(i, t) = 1.0 + i + trend[t] + e;
    }
  }
  return y;
}

/// Shared on-disk limit tables at the default resolution.
inline DiskLimitTables& shared_tables() {
  static DiskLimitTables tables(cache_dir_from_env(CLUBKIT_TEST_CACHE));
  return tables;
}

}  // namespace clubkit::testing
