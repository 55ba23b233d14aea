#include "clubkit/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>
#include <unistd.h>

#include "clubkit/errors.hpp"

namespace clubkit {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  s = s.substr(a, b - a);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string cell_ref(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + " col " + std::to_string(col);
}

}  // namespace

Panel load_panel(std::istream& in, bool log_transform) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) header = split_csv(line);
  }
  if (header.size() < 2) throw Error(Errc::ParseError, "header must be id followed by at least one period");

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw Error(Errc::RaggedRows, "row " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                                        " fields, header has " + std::to_string(header.size()));
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const std::string& f = fields[c];
      double v = 0.0;
      const char* first = f.data();
      if (!f.empty() && f[0] == '+') ++first;
      auto res = std::from_chars(first, f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
        throw Error(Errc::ParseError, cell_ref(lineno, c + 1) + ": '" + f + "' is not a number");
      if (log_transform) {
        if (!(v > 0.0)) throw Error(Errc::NonPositiveForLog, cell_ref(lineno, c + 1) + ": " + f);
        v = std::log(v);
      }
      values.push_back(v);
    }
    ids.push_back(fields[0]);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(Errc::EmptyInput, "panel has no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size() - 1));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return Panel(std::move(ids), std::move(m));
}

Panel load_panel(const std::filesystem::path& path, bool log_transform) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return load_panel(in, log_transform);
}

std::string to_string(Method m) { return m == Method::Bootstrap ? "bootstrap" : "asymptotic"; }
std::string to_string(Variant v) { return v == Variant::Level ? "level" : "zero-mean"; }

Method method_from_string(const std::string& s) {
  if (s == "bootstrap" || s == "CW") return Method::Bootstrap;
  if (s == "asymptotic" || s == "HF") return Method::Asymptotic;
  throw Error(Errc::ParseError, "unknown method '" + s + "'");
}

Variant variant_from_string(const std::string& s) {
  if (s == "level") return Variant::Level;
  if (s == "zero-mean") return Variant::ZeroMean;
  throw Error(Errc::ParseError, "unknown variant '" + s + "'");
}

void to_json(json& j, const StatResult& r) {
  j = json{{"statistic", r.statistic}, {"p_value", r.p_value}, {"method", to_string(r.method)},
           {"variant", to_string(r.variant)}, {"dim", r.dim}, {"series", r.series}, {"singular", r.singular}};
}

void from_json(const json& j, StatResult& r) {
  r.statistic = j.at("statistic").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.method = method_from_string(j.at("method").get<std::string>());
  r.variant = variant_from_string(j.at("variant").get<std::string>());
  r.dim = j.at("dim").get<int>();
  r.series = j.at("series").get<int>();
  r.singular = j.at("singular").get<bool>();
}

void to_json(json& j, const MergeStep& s) {
  j = json{{"iteration", s.iteration}, {"first", s.first}, {"second", s.second}, {"p_value", s.p_value}};
}

void from_json(const json& j, MergeStep& s) {
  s.iteration = j.at("iteration").get<int>();
  s.first = j.at("first").get<Members>();
  s.second = j.at("second").get<Members>();
  s.p_value = j.at("p_value").get<double>();
}

void to_json(json& j, const Partition& p) { j = json{{"universe", p.universe()}, {"clubs", p.clubs()}}; }

void from_json(const json& j, Partition& p) {
  p = Partition(j.at("clubs").get<std::vector<Members>>(), j.at("universe").get<Index>());
}

void to_json(json& j, const ClubReport& r) {
  json cache = json::array();
  for (const auto& [members, result] : r.pvalue_cache) cache.push_back({{"members", members}, {"result", result}});
  j = json{{"partition", r.partition}, {"trace", r.trace}, {"pvalue_cache", cache},
           {"failures", r.failures}, {"stopped_on_errors", r.stopped_on_errors}};
}

void from_json(const json& j, ClubReport& r) {
  r.partition = j.at("partition").get<Partition>();
  r.trace = j.at("trace").get<std::vector<MergeStep>>();
  r.pvalue_cache.clear();
  for (const auto& e : j.at("pvalue_cache")) r.pvalue_cache.emplace(e.at("members").get<Members>(), e.at("result").get<StatResult>());
  r.failures = j.at("failures").get<std::vector<std::string>>();
  r.stopped_on_errors = j.at("stopped_on_errors").get<bool>();
}

json partition_json(const Partition& p, const Panel& panel) {
  json j = p;
  json names = json::array();
  for (const auto& club : p.clubs()) {
    json c = json::array();
    for (Index i : club) c.push_back(panel.ids().at(i));
    names.push_back(c);
  }
  j["club_ids"] = names;
  return j;
}

Partition partition_from_json(const json& doc, const Panel& panel) {
  try {
    const json& j = doc.contains("partition") ? doc.at("partition") : doc;
    if (j.contains("club_ids")) {
      std::vector<Members> clubs;
      for (const auto& c : j.at("club_ids")) {
        Members m;
        for (const auto& id : c) m.push_back(panel.index_of(id.get<std::string>()));
        clubs.push_back(std::move(m));
      }
      return Partition(std::move(clubs), panel.regions());
    }
    Partition p = j.get<Partition>();
    if (p.universe() != panel.regions())
      throw Error(Errc::DimensionMismatch, "partition covers " + std::to_string(p.universe()) + " regions, panel has " +
                                               std::to_string(panel.regions()));
    return p;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("partition: ") + e.what());
  }
}

Partition read_partition(const std::filesystem::path& path, const Panel& panel) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  return partition_from_json(doc, panel);
}

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_size_table(std::ostream& out, const std::vector<SizeTableRow>& rows) {
  Index max_size = 1;
  for (const auto& r : rows) max_size = std::max(max_size, r.sizes.max_size());
  out << "label";
  for (Index s = 1; s <= max_size; ++s) out << ',' << s;
  out << ",total,sigma_ybar,ybar_min,ybar_max\n";
  for (const auto& r : rows) {
    out << r.label;
    for (Index s = 1; s <= max_size; ++s) {
      auto it = r.sizes.counts.find(s);
      out << ',' << (it == r.sizes.counts.end() ? 0 : it->second);
    }
    out << ',' << r.sizes.total << ',' << num(r.income.sd) << ',' << num(r.income.min) << ',' << num(r.income.max)
        << '\n';
  }
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "cell,design,N,T,rho_v,clubs,method,alpha,reps,excluded,n_ks,mean_H,mean_F,mean_KS,se_KS,n_PT,mean_PT,se_PT,"
         "n_success,success_rate,se_success\n";
  for (const auto& r : rows) {
    const bool single = std::holds_alternative<SingleClub>(r.dgp.clubs);
    out << r.cell << ',' << (single ? "single" : "multi") << ',' << r.dgp.N << ',' << r.dgp.T << ',' << num(r.dgp.rho_v)
        << ',' << describe_clubs(r.dgp) << ',' << method_name(r.method) << ',' << num(r.alpha) << ',' << r.reps << ','
        << r.excluded << ',' << r.n_ks << ',' << num(r.mean_H) << ',' << num(r.mean_F) << ',' << num(r.mean_ks) << ','
        << num(r.se_ks) << ',' << r.n_pt << ',' << num(r.mean_pt) << ',' << num(r.se_pt) << ',' << r.n_success << ','
        << num(r.success_rate) << ',' << num(r.se_success) << '\n';
  }
}

std::string sha256_hex(std::istream& in) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error(Errc::IoError, "sha256 init");
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return sha256_hex(in);
}

void to_json(json& j, const RunManifest& m) {
  j = json{{"command", m.command},         {"config", m.config},   {"seed", m.seed},        {"version", m.version},
           {"input_digest", m.input_digest}, {"started", m.started}, {"finished", m.finished}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

DiskLimitTables::DiskLimitTables(std::filesystem::path dir, int grid_T, int reps, std::uint64_t seed, Warn warn)
    : InMemoryLimitTables(grid_T, reps, seed), dir_(std::move(dir)), warn_(std::move(warn)) {
  if (!warn_) warn_ = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
}

std::filesystem::path DiskLimitTables::path_for(Variant variant, int dim) const {
  return dir_ / ("limit-" + to_string(variant) + "-dim" + std::to_string(dim) + ".txt");
}

DiskLimitTables::Status DiskLimitTables::ensure(Variant variant, int dim) {
  Status status{};
  load_or_build(meta_for(variant, dim), status);
  return status;
}

LimitTable DiskLimitTables::produce(const LimitTableMeta& meta) {
  Status status{};
  return load_or_build(meta, status);
}

LimitTable DiskLimitTables::load_or_build(const LimitTableMeta& meta, Status& status) {
  const auto path = path_for(meta.variant, meta.dim);
  const std::string want = limit_table_header(meta);
  status = Status::Written;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    if (header == want) {
      in.seekg(0);
      try {
        LimitTable t = read_limit_table(in);
        status = Status::Reused;
        return t;
      } catch (const Error& e) {
        warn_(path.string() + " is corrupted (" + e.what() + "), regenerating");
      }
    } else {
      LimitTableMeta found;
      if (parse_limit_table_header(header, found))
        warn_(path.string() + " was built with different settings, regenerating");
      else
        warn_(path.string() + " has a corrupted header, regenerating");
    }
    status = Status::Regenerated;
  }
  LimitTable table = simulate_limit_table(meta);
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir_.string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + tmp.string());
    write_limit_table(out, table);
    if (!out) throw Error(Errc::IoError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  return table;
}

std::filesystem::path cache_dir_from_env(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("CLUBKIT_CACHE_DIR"); env && *env) return env;
  return fallback;
}

}  // namespace clubkit
