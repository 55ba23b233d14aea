#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "clubkit/analytics.hpp"
#include "clubkit/clubs.hpp"
#include "clubkit/kpss.hpp"
#include "clubkit/montecarlo.hpp"
#include "clubkit/panel.hpp"

namespace clubkit {

/// Wide CSV: header "id,<period1>,<period2>,..." then one region per row.
/// With `log_transform` every value is replaced by its natural log.
Panel load_panel(std::istream& in, bool log_transform);
Panel load_panel(const std::filesystem::path& path, bool log_transform);

std::string to_string(Method m);
std::string to_string(Variant v);
Method method_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

void to_json(nlohmann::json& j, const StatResult& r);
void from_json(const nlohmann::json& j, StatResult& r);
void to_json(nlohmann::json& j, const MergeStep& s);
void from_json(const nlohmann::json& j, MergeStep& s);
void to_json(nlohmann::json& j, const Partition& p);
void from_json(const nlohmann::json& j, Partition& p);
void to_json(nlohmann::json& j, const ClubReport& r);
void from_json(const nlohmann::json& j, ClubReport& r);

/// Partition with region ids alongside the indices ("club_ids").
nlohmann::json partition_json(const Partition& p, const Panel& panel);

/// Reads a partition from a JSON file holding either a partition object or an
/// object with a "partition" member (such as a find-clubs report). Club ids are
/// resolved against `panel` when present, otherwise indices are used.
Partition read_partition(const std::filesystem::path& path, const Panel& panel);
Partition partition_from_json(const nlohmann::json& j, const Panel& panel);

/// One row of a joint frequency table of club sizes.
struct SizeTableRow {
  std::string label;
  SizeDistribution sizes;
  IncomeStats income;
};

/// Header "label,1,2,...,<max>,total,sigma_ybar,ybar_min,ybar_max".
void write_size_table(std::ostream& out, const std::vector<SizeTableRow>& rows);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);

std::string sha256_hex(std::istream& in);
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string version;
  std::string input_digest;  // sha256 of the input file, empty when there is none
  std::string started;       // UTC, ISO 8601
  std::string finished;
};

void to_json(nlohmann::json& j, const RunManifest& m);
std::string utc_timestamp();

/// Limit tables backed by one text file per (variant, dim) in `dir`. Files with
/// a matching header are reused; missing, mismatched or corrupted files are
/// regenerated and rewritten.
class DiskLimitTables : public InMemoryLimitTables {
 public:
  using Warn = std::function<void(const std::string&)>;
  enum class Status { Reused, Written, Regenerated };

  DiskLimitTables(std::filesystem::path dir, int grid_T = 2000, int reps = 50000, std::uint64_t seed = 20240101,
                  Warn warn = {});

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(Variant variant, int dim) const;
  /// Makes sure the cache file exists and matches; does not keep the table.
  Status ensure(Variant variant, int dim);

 protected:
  LimitTable produce(const LimitTableMeta& meta) override;

 private:
  LimitTable load_or_build(const LimitTableMeta& meta, Status& status);

  std::filesystem::path dir_;
  Warn warn_;
};

/// `CLUBKIT_CACHE_DIR` if set, otherwise `fallback`.
std::filesystem::path cache_dir_from_env(const std::filesystem::path& fallback);

}  // namespace clubkit
