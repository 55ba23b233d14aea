#include "clubkit/kpss.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "clubkit/errors.hpp"
#include "clubkit/rng.hpp"

namespace clubkit {

namespace {

constexpr double kMinRcond = 1e-12;

Eigen::MatrixXd partial_sums(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd s(x.rows(), x.cols());
  s.col(0) = x.col(0);
  for (Eigen::Index t = 1; t < x.cols(); ++t) s.col(t) = s.col(t - 1) + x.col(t);
  return s;
}

void check_shape(const Eigen::MatrixXd& x, int bandwidth) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(Errc::EmptyInput, "empty residual panel");
  if (bandwidth < 0) throw Error(Errc::InvalidConfig, "negative bandwidth");
  if (bandwidth >= x.cols())
    throw Error(Errc::BandwidthTooLarge,
                "bandwidth " + std::to_string(bandwidth) + " needs T > L, T = " + std::to_string(x.cols()));
}

// A demeaned constant row is left with rounding noise only; treat it as zero.
bool degenerate_row(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& centred, Eigen::Index k) {
  const double scale = raw.row(k).cwiseAbs().maxCoeff();
  const double resid = centred.row(k).cwiseAbs().maxCoeff();
  return resid == 0.0 || resid <= 64.0 * std::numeric_limits<double>::epsilon() * scale;
}

const char* variant_token(Variant v) { return v == Variant::Level ? "level" : "zero-mean"; }

}  // namespace

bool is_degenerate(const Eigen::VectorXd& series, Variant variant) {
  const Eigen::MatrixXd raw = series.transpose();
  return degenerate_row(raw, apply_variant(raw, variant), 0);
}

Eigen::MatrixXd apply_variant(const Eigen::MatrixXd& series, Variant variant) {
  if (variant == Variant::ZeroMean) return series;
  Eigen::MatrixXd out = series;
  out.colwise() -= series.rowwise().mean();
  return out;
}

LrvEstimate newey_west(const Eigen::MatrixXd& residuals, int bandwidth) {
  check_shape(residuals, bandwidth);
  const auto T = residuals.cols();
  Eigen::MatrixXd sigma = residuals * residuals.transpose();
  for (int k = 1; k <= bandwidth; ++k) {
    const double w = 1.0 - static_cast<double>(k) / (1.0 + bandwidth);
    // sum_{t=k+1..T} e_t e_{t-k}'
    Eigen::MatrixXd gamma = residuals.rightCols(T - k) * residuals.leftCols(T - k).transpose();
    sigma += w * (gamma + gamma.transpose());
  }
  sigma /= static_cast<double>(T);
  return {std::move(sigma), bandwidth};
}

double kpss_stat(const Eigen::MatrixXd& series, Variant variant, int bandwidth) {
  check_shape(series, bandwidth);
  const Eigen::MatrixXd x = apply_variant(series, variant);
  for (Eigen::Index k = 0; k < x.rows(); ++k)
    if (degenerate_row(series, x, k))
      throw Error(Errc::SingularLrv, "series " + std::to_string(k) + " is degenerate after centring");
  const auto lrv = newey_west(x, bandwidth);
  Eigen::LLT<Eigen::MatrixXd> llt(lrv.sigma2);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcond))
    throw Error(Errc::SingularLrv, "long-run covariance is not positive definite");
  const Eigen::MatrixXd z = llt.matrixL().solve(partial_sums(x));
  const double T = static_cast<double>(x.cols());
  return z.squaredNorm() / (T * T);
}

double kpss_stat(std::span<const PairDiff> diffs, Variant variant, int bandwidth) {
  return kpss_stat(stack(diffs), variant, bandwidth);
}

RankRevealingKpss kpss_stat_pinv(const Eigen::MatrixXd& series, Variant variant, int bandwidth, double rel_tol) {
  check_shape(series, bandwidth);
  const Eigen::MatrixXd x = apply_variant(series, variant);
  const auto lrv = newey_west(x, bandwidth);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lrv.sigma2);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double top = lambda.maxCoeff();
  if (!(top > 0.0)) throw Error(Errc::SingularLrv, "long-run covariance is zero");
  const Eigen::MatrixXd proj = eig.eigenvectors().transpose() * partial_sums(x);
  RankRevealingKpss out;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] <= rel_tol * top) continue;
    ++out.rank;
    acc += proj.row(i).squaredNorm() / lambda[i];
  }
  const double T = static_cast<double>(x.cols());
  out.statistic = acc / (T * T);
  return out;
}

double LimitTable::quantile(double prob) const {
  if (draws.empty()) throw Error(Errc::EmptyInput, "empty limit table");
  const double pos = std::clamp(prob, 0.0, 1.0) * static_cast<double>(draws.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, draws.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return draws[lo] + frac * (draws[hi] - draws[lo]);
}

namespace {

void validate_meta(const LimitTableMeta& meta) {
  if (meta.dim < 1) throw Error(Errc::InvalidConfig, "limit table dim must be >= 1");
  if (meta.grid_T < kMinGridT) throw Error(Errc::InvalidConfig, "limit table grid_T must be >= 1000");
  if (meta.reps < kMinLimitReps) throw Error(Errc::InvalidConfig, "limit table reps must be >= 10000");
}

double limit_draw(const LimitTableMeta& meta, int r) {
  auto engine = make_engine(derive_seed(meta.seed, "limit-table",
                                        {static_cast<std::uint64_t>(meta.variant),
                                         static_cast<std::uint64_t>(meta.dim), static_cast<std::uint64_t>(r)}));
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd w(meta.dim, meta.grid_T);
  for (Eigen::Index t = 0; t < w.cols(); ++t)
    for (Eigen::Index k = 0; k < w.rows(); ++k) w(k, t) = gauss(engine);
  return kpss_stat(w, meta.variant, 0);
}

}  // namespace

LimitTable simulate_limit_table(const LimitTableMeta& meta) {
  validate_meta(meta);
  LimitTable table{meta, std::vector<double>(static_cast<std::size_t>(meta.reps))};
  double* out = table.draws.data();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < meta.reps; ++r) out[r] = limit_draw(meta, r);
  std::sort(table.draws.begin(), table.draws.end());
  return table;
}

LimitTable serial::simulate_limit_table(const LimitTableMeta& meta) {
  validate_meta(meta);
  LimitTable table{meta, {}};
  table.draws.reserve(static_cast<std::size_t>(meta.reps));
  for (int r = 0; r < meta.reps; ++r) table.draws.push_back(limit_draw(meta, r));
  std::sort(table.draws.begin(), table.draws.end());
  return table;
}

double asymptotic_pvalue(double stat, const LimitTable& table) {
  if (table.draws.empty()) throw Error(Errc::EmptyInput, "empty limit table");
  if (std::isnan(stat)) throw Error(Errc::InvalidConfig, "statistic is NaN");
  auto it = std::lower_bound(table.draws.begin(), table.draws.end(), stat);
  return static_cast<double>(table.draws.end() - it) / static_cast<double>(table.draws.size());
}

double asymptotic_pvalue(double stat, const LimitTable& table, int dim) {
  if (table.meta.dim != dim)
    throw Error(Errc::DimensionMismatch, "statistic of dim " + std::to_string(dim) + " against table of dim " +
                                             std::to_string(table.meta.dim));
  return asymptotic_pvalue(stat, table);
}

std::string limit_table_header(const LimitTableMeta& meta) {
  std::ostringstream os;
  os << "clubkit-limit-table v1 variant=" << variant_token(meta.variant) << " dim=" << meta.dim
     << " grid_T=" << meta.grid_T << " reps=" << meta.reps << " seed=" << meta.seed;
  return os.str();
}

bool parse_limit_table_header(const std::string& line, LimitTableMeta& meta) {
  std::istringstream is(line);
  std::string magic, version;
  if (!(is >> magic >> version) || magic != "clubkit-limit-table" || version != "v1") return false;
  int found = 0;
  std::string kv;
  LimitTableMeta parsed;
  while (is >> kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) return false;
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    try {
      if (key == "variant") {
        if (value == "level") parsed.variant = Variant::Level;
        else if (value == "zero-mean") parsed.variant = Variant::ZeroMean;
        else return false;
      } else if (key == "dim") parsed.dim = std::stoi(value);
      else if (key == "grid_T") parsed.grid_T = std::stoi(value);
      else if (key == "reps") parsed.reps = std::stoi(value);
      else if (key == "seed") parsed.seed = std::stoull(value);
      else return false;
    } catch (const std::exception&) {
      return false;
    }
    ++found;
  }
  if (found != 5) return false;
  meta = parsed;
  return true;
}

void write_limit_table(std::ostream& out, const LimitTable& table) {
  out << limit_table_header(table.meta) << '\n';
  char buf[64];
  for (double d : table.draws) {
    auto res = std::to_chars(buf, buf + sizeof buf, d);
    out.write(buf, res.ptr - buf);
    out.put('\n');
  }
}

LimitTable read_limit_table(std::istream& in) {
  std::string line;
  LimitTable table;
  if (!std::getline(in, line) || !parse_limit_table_header(line, table.meta))
    throw Error(Errc::ParseError, "bad limit table header");
  table.draws.reserve(static_cast<std::size_t>(std::max(table.meta.reps, 0)));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double v = 0.0;
    auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (res.ec != std::errc() || res.ptr != line.data() + line.size())
      throw Error(Errc::ParseError, "limit table line " + std::to_string(lineno));
    table.draws.push_back(v);
  }
  if (table.draws.size() != static_cast<std::size_t>(table.meta.reps))
    throw Error(Errc::ParseError, "limit table has " + std::to_string(table.draws.size()) + " draws, header says " +
                                      std::to_string(table.meta.reps));
  if (!std::is_sorted(table.draws.begin(), table.draws.end()))
    throw Error(Errc::ParseError, "limit table draws are not sorted");
  return table;
}

InMemoryLimitTables::InMemoryLimitTables(int grid_T, int reps, std::uint64_t seed)
    : grid_T_(grid_T), reps_(reps), seed_(seed) {}

LimitTableMeta InMemoryLimitTables::meta_for(Variant variant, int dim) const {
  return LimitTableMeta{variant, dim, grid_T_, reps_, seed_};
}

LimitTable InMemoryLimitTables::produce(const LimitTableMeta& meta) { return simulate_limit_table(meta); }

const LimitTable& InMemoryLimitTables::table(Variant variant, int dim) {
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(static_cast<int>(variant), dim);
  auto it = tables_.find(key);
  if (it == tables_.end()) it = tables_.emplace(key, produce(meta_for(variant, dim))).first;
  return it->second;
}

}  // namespace clubkit
